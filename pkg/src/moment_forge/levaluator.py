"""Evaluators for L(s0, chi), L(s0, f x chi), and L(s, f).

Each L-value is computed through its approximate functional equation (AFE):
two weighted sums tied by a root number built from Gauss sums and gamma-factor
ratios.  Truncation is certificate-style: a cutoff is accepted only once the
decay envelope of the weight function bounds the dropped tail below the
requested tolerance, and that bound is recorded on the result.

Independent oracles live alongside: a Hurwitz-zeta route for L(s, chi), an
exponentially smoothed ladder for L(s, f x chi) and L(s, f), and the Voronoi
summation validator for the G/Psi kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charsums import Character, CharacterDomainError, gauss_sum
from .maassdata import DepthError, MaassForm
from .weights import (
    EvaluationPoint,
    PsiKernel,
    RangeError,
    TailToleranceError,
    WeightParams,
    bump,
    gamma_ratio_dirichlet,
    gamma_ratio_maass,
    weight_cutoff,
    weight_envelope,
    weight_v,
    weight_w,
)

THETA_KIM_SARNAK = 7.0 / 64.0


class ConvergenceError(RuntimeError):
    """A self-convergent ladder failed its monotone-differences check."""


class SmoothingScaleError(ValueError):
    """Smoothing scale X incompatible with the fixture depth."""


@dataclass(frozen=True)
class AFEResult:
    value: complex
    first_sum_terms: int
    second_sum_terms: int
    truncation_bound: float


def _as_point(s0) -> EvaluationPoint:
    if isinstance(s0, EvaluationPoint):
        return s0
    z = complex(s0)
    return EvaluationPoint(z.real, z.imag)


# ---------------------------------------------------------------------------
# Certificate-style truncation
# ---------------------------------------------------------------------------

_DIVISOR_SIEVE = np.zeros(1)


def _divisor_counts(n_max: int) -> np.ndarray:
    """d(n) for n = 0..n_max (d(0) unused), grown monotonically and cached."""
    global _DIVISOR_SIEVE
    if _DIVISOR_SIEVE.size <= n_max:
        d = np.zeros(n_max + 1)
        for k in range(1, n_max + 1):
            d[k::k] += 1.0
        _DIVISOR_SIEVE = d
    return _DIVISOR_SIEVE


def _tail_bound(kind: str, s0c: complex, scale: float, sigma_exp: float,
                n_cut: int, T_f: float | None, theta: float, divisor: bool) -> float:
    """Upper bound for |sum_{n > n_cut} c_n weight(n/scale)| with
    |c_n| <= n^{-sigma_exp} (times d(n) n^theta when divisor=True)."""
    n = np.arange(n_cut + 1, 8 * n_cut + 1, dtype=np.float64)
    env = weight_envelope(kind, s0c, n / scale, T_f)
    coeff = n ** (theta - sigma_exp)
    if divisor:
        coeff = coeff * _divisor_counts(8 * n_cut)[n_cut + 1:8 * n_cut + 1]
    body = float(np.sum(coeff * env))
    # beyond 8*n_cut the envelope has already dropped by (1/8)^A at its
    # steepest admissible shift; a one-octave worth of the last term closes it
    closure = float(coeff[-1] * env[-1]) * n_cut
    return body + closure


def _select_cutoff(kind: str, s0c: complex, scale: float, sigma_exp: float,
                   tol: float, T_f: float | None = None, theta: float = 0.0,
                   divisor: bool = False, n_min: int = 16) -> tuple[int, float]:
    n_cut = max(n_min, math.ceil(scale * weight_cutoff(kind, s0c, tol, T_f)))
    for _ in range(80):
        bound = _tail_bound(kind, s0c, scale, sigma_exp, n_cut, T_f, theta, divisor)
        if bound <= tol:
            return n_cut, bound
        n_cut = int(n_cut * 1.25) + 1
    raise TailToleranceError(
        f"{kind}-sum tail bound stuck above {tol:.1e} at cutoff {n_cut}"
    )


# ---------------------------------------------------------------------------
# Precomputed AFE sum data (shared across characters at fixed q, s0)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirichletAFEData:
    """Weighted coefficient arrays of the two sums of the Dirichlet AFE.

    first_coeffs[k]  = (k+1)^{-s0}     V_{s0}((k+1)/sqrt(q))
    second_coeffs[k] = (k+1)^{-(1-s0)} V_{1-s0}((k+1)/sqrt(q))
    root_factor      = q^{-s0} gamma(1-s0)/gamma(s0)   (times tau(chi) per chi)
    """

    point: EvaluationPoint
    q: int
    first_coeffs: np.ndarray
    second_coeffs: np.ndarray
    root_factor: complex
    first_bound: float
    second_bound: float

    @property
    def truncation_bound(self) -> float:
        # |tau(chi)| = sqrt(q) amplifies the dual-sum tail
        return self.first_bound + math.sqrt(self.q) * abs(self.root_factor) * self.second_bound


@dataclass(frozen=True)
class TwistedAFEData:
    """Same shape for the Maass-twist AFE.

    first_coeffs[k]  = lambda_f(k+1) (k+1)^{-s0}     W_{s0}((k+1)/q)
    second_coeffs[k] = lambda_f(k+1) (k+1)^{-(1-s0)} W_{1-s0}((k+1)/q)
    root_factor      = q^{-2s0} gammatilde(1-s0)/gammatilde(s0)
                       (times tau(chi)^2 per chi)
    """

    point: EvaluationPoint
    q: int
    spectral_parameter: float
    first_coeffs: np.ndarray
    second_coeffs: np.ndarray
    root_factor: complex
    first_bound: float
    second_bound: float
    clamped: bool

    @property
    def truncation_bound(self) -> float:
        # |tau(chi)^2| = q amplifies the dual-sum tail
        return self.first_bound + float(self.q) * abs(self.root_factor) * self.second_bound


def dirichlet_afe_data(s0, q: int, params: WeightParams | None = None,
                       tail_tol: float = 1e-10, multiplier: float = 1.0) -> DirichletAFEData:
    point = _as_point(s0)
    params = params or WeightParams()
    z = point.s0
    scale = math.sqrt(q)
    n1, b1 = _select_cutoff("V", z, scale, point.sigma0, tail_tol)
    n2, b2 = _select_cutoff("V", 1 - z, scale, 1.0 - point.sigma0, tail_tol)
    n1, n2 = math.ceil(n1 * multiplier), math.ceil(n2 * multiplier)
    k1 = np.arange(1, n1 + 1, dtype=np.float64)
    k2 = np.arange(1, n2 + 1, dtype=np.float64)
    first = k1 ** (-z) * weight_v(z, k1 / scale, params)
    second = k2 ** (-(1 - z)) * weight_v(1 - z, k2 / scale, params)
    root = q ** (-z) * gamma_ratio_dirichlet(z)
    return DirichletAFEData(point, q, first, second, complex(root), b1, b2)


def twisted_afe_data(s0, q: int, f: MaassForm, params: WeightParams | None = None,
                     tail_tol: float = 1e-5, multiplier: float = 1.0,
                     clamp: bool = True) -> TwistedAFEData:
    point = _as_point(s0)
    params = params or WeightParams()
    z = point.s0
    T = f.spectral_parameter
    scale = float(q)
    n1, b1 = _select_cutoff("W", z, scale, point.sigma0, tail_tol,
                            T_f=T, theta=THETA_KIM_SARNAK, divisor=True)
    n2, b2 = _select_cutoff("W", 1 - z, scale, 1.0 - point.sigma0, tail_tol,
                            T_f=T, theta=THETA_KIM_SARNAK, divisor=True)
    n1, n2 = math.ceil(n1 * multiplier), math.ceil(n2 * multiplier)
    clamped = False
    if max(n1, n2) > f.N:
        if not clamp:
            f.require_depth(max(n1, n2), context=f"the twisted AFE at q={q}")
        clamped = True
        if n1 > f.N:
            n1 = f.N
            b1 = _tail_bound("W", z, scale, point.sigma0, n1, T, THETA_KIM_SARNAK, True)
        if n2 > f.N:
            n2 = f.N
            b2 = _tail_bound("W", 1 - z, scale, 1.0 - point.sigma0, n2, T,
                             THETA_KIM_SARNAK, True)
    k1 = np.arange(1, n1 + 1, dtype=np.float64)
    k2 = np.arange(1, n2 + 1, dtype=np.float64)
    lam1 = f.coefficients[1:n1 + 1]
    lam2 = f.coefficients[1:n2 + 1]
    first = lam1 * k1 ** (-z) * weight_w(z, k1 / scale, T, params)
    second = lam2 * k2 ** (-(1 - z)) * weight_w(1 - z, k2 / scale, T, params)
    root = q ** (-2 * z) * gamma_ratio_maass(z, T)
    return TwistedAFEData(point, q, T, first, second, complex(root), b1, b2, clamped)


def _require_even_primitive(chi: Character) -> None:
    if not chi.is_primitive:
        raise CharacterDomainError("the AFE is stated for primitive characters")
    if not chi.is_even:
        raise CharacterDomainError("the AFE is stated for even characters")


# ---------------------------------------------------------------------------
# AFE evaluators
# ---------------------------------------------------------------------------


def l_chi_afe(s0, chi: Character, params: WeightParams | None = None,
              tail_tol: float = 1e-10, data: DirichletAFEData | None = None) -> AFEResult:
    """L(s0, chi) by the two-sum AFE with certified truncation."""
    _require_even_primitive(chi)
    if data is None:
        data = dirichlet_afe_data(s0, chi.q, params, tail_tol)
    n1 = np.arange(1, data.first_coeffs.size + 1)
    n2 = np.arange(1, data.second_coeffs.size + 1)
    first = complex(np.dot(chi(n1), data.first_coeffs))
    second = complex(np.dot(np.conj(chi(n2)), data.second_coeffs))
    value = first + gauss_sum(chi) * data.root_factor * second
    # |tau(chi)| = sqrt(q) amplifies the dual-sum tail
    bound = data.first_bound + math.sqrt(chi.q) * abs(data.root_factor) * data.second_bound
    return AFEResult(value, data.first_coeffs.size, data.second_coeffs.size, bound)


def l_twisted_afe(s0, f: MaassForm, chi: Character, params: WeightParams | None = None,
                  tail_tol: float = 1e-5, data: TwistedAFEData | None = None,
                  clamp: bool = False) -> AFEResult:
    """L(s0, f x chi) by the twisted AFE; refuses fixtures too shallow for the
    certified cutoff unless clamp=True (the honest larger bound is recorded)."""
    _require_even_primitive(chi)
    if data is None:
        data = twisted_afe_data(s0, chi.q, f, params, tail_tol, clamp=clamp)
    n1 = np.arange(1, data.first_coeffs.size + 1)
    n2 = np.arange(1, data.second_coeffs.size + 1)
    first = complex(np.dot(chi(n1), data.first_coeffs))
    second = complex(np.dot(np.conj(chi(n2)), data.second_coeffs))
    tau = gauss_sum(chi)
    value = first + tau * tau * data.root_factor * second
    bound = data.first_bound + chi.q * abs(data.root_factor) * data.second_bound
    return AFEResult(value, data.first_coeffs.size, data.second_coeffs.size, bound)


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def l_chi_hurwitz(s, chi: Character, dps: int = 30) -> complex:
    """L(s, chi) = q^{-s} sum_a chi(a) zeta(s, a/q) via Hurwitz zeta."""
    import mpmath as mp

    if chi.is_principal:
        raise CharacterDomainError("Hurwitz route excludes the principal character")
    z = complex(s.s0 if isinstance(s, EvaluationPoint) else s)
    q = chi.q
    with mp.workdps(dps):
        total = mp.mpc(0)
        for a in range(1, q):
            w = chi(a)
            if w == 0:
                continue
            total += mp.mpc(w.real, w.imag) * mp.zeta(mp.mpc(z.real, z.imag),
                                                      mp.mpf(a) / q)
        val = mp.power(q, mp.mpc(-z.real, -z.imag)) * total
        return complex(val)


def _richardson(h: list[float], v: list[complex]) -> tuple[complex, float]:
    """Neville tableau extrapolating samples v(h_k) to h = 0."""
    n = len(v)
    tab = [complex(x) for x in v]
    prev = tab[-1]
    correction = 0.0
    for j in range(1, n):
        tab = [
            ((0.0 - h[i + j]) * tab[i] - (0.0 - h[i]) * tab[i + 1]) / (h[i] - h[i + j])
            for i in range(n - j)
        ]
        correction = abs(tab[-1] - prev)
        prev = tab[-1]
    return prev, correction


def l_twisted_smoothed(s, f: MaassForm, chi: Character, X: float,
                       rungs: int = 5) -> complex:
    """Oracle for L(s, f x chi): exponentially smoothed series over an
    X-ladder, Richardson-extrapolated in 1/X."""
    z = complex(s.s0 if isinstance(s, EvaluationPoint) else s)
    if z.real < 0.9:
        raise RangeError(f"smoothed ladder needs Re(s) >= 0.9, got {z.real}")
    if X > f.N / 10:
        raise SmoothingScaleError(
            f"smoothing scale X = {X} exceeds fixture depth / 10 = {f.N / 10}"
        )
    if X <= 0:
        raise SmoothingScaleError("smoothing scale must be positive")
    n = np.arange(1, f.N + 1, dtype=np.float64)
    base = f.coefficients[1:] * chi(np.arange(1, f.N + 1)) * n ** (-z)
    ladder = [X / 2 ** (rungs - 1 - k) for k in range(rungs)]  # increasing X
    vals = [complex(np.dot(base, np.exp(-n / Xk))) for Xk in ladder]
    diffs = [abs(vals[k + 1] - vals[k]) for k in range(rungs - 1)]
    for k in range(len(diffs) - 1):
        if diffs[k + 1] > diffs[k] * 1.05 and diffs[k] > 1e-14:
            raise ConvergenceError(
                f"ladder differences not decreasing: {diffs[k]:.3e} -> {diffs[k + 1]:.3e}"
            )
    value, _ = _richardson([1.0 / Xk for Xk in ladder], vals)
    return value


@dataclass(frozen=True)
class LfValue:
    value: float
    error_estimate: float
    terms_used: int

    def __float__(self) -> float:
        return self.value


def l_f(s: float, f: MaassForm, rungs: int = 6, tol: float = 1e-6) -> LfValue:
    """L(s, f) for real s >= 1 by the smoothed Richardson ladder; the direct
    series alone cannot certify 1e-6 at fixture depth, the ladder can."""
    s = float(s)
    if s < 1.0:
        raise RangeError(f"l_f is designed for s >= 1, got {s}")
    X = f.N / 16.0
    n = np.arange(1, f.N + 1, dtype=np.float64)
    base = f.coefficients[1:] * n ** (-s)
    ladder = [X / 2 ** (rungs - 1 - k) for k in range(rungs)]
    vals = [float(np.dot(base, np.exp(-n / Xk))) for Xk in ladder]
    value, correction = _richardson([1.0 / Xk for Xk in ladder], vals)
    value = value.real
    # truncation of the smoothed series at fixture depth (largest X is worst)
    trunc = 4.0 * X * f.N ** (THETA_KIM_SARNAK - s) * math.exp(-f.N / X)
    err = correction + trunc
    if err > tol:
        need = int(f.N * 2)
        raise DepthError(
            f"l_f({s}) error estimate {err:.2e} > {tol:.1e} at depth {f.N}; "
            f"needs roughly N >= {need}"
        )
    return LfValue(float(value), float(err), f.N)


# ---------------------------------------------------------------------------
# Voronoi-formula validator
# ---------------------------------------------------------------------------

_PSI_Y_MAX = 1.3e5
_PSI_SPLINES: dict[tuple[int, float], object] = {}


def _flipped_bump_mellin(s):
    """psitilde(-s) for the fixed bump: int psi(x) x^{-s-1} dx."""
    from .weights import bump_mellin

    return bump_mellin(-np.asarray(s, dtype=np.complex128))


def _psi_grid_nodes(y_min: float, y_max: float) -> np.ndarray:
    """Log-y nodes dense enough to resolve the e(+-2 sqrt(y)) oscillation of
    the dual kernel: the contour saddle sits at |t| = 2 pi sqrt(y), so the
    local period in log y is 1/sqrt(y); take ten samples per period with a
    0.01 cap where the kernel is smooth."""
    nodes = [math.log(y_min)]
    L_max = math.log(y_max)
    while nodes[-1] < L_max:
        y = math.exp(nodes[-1])
        nodes.append(nodes[-1] + min(0.01, 0.08 / math.sqrt(y)))
    return np.array(nodes)


def _psi_spline(sign: int, T_f: float):
    """Cubic spline of Psi^sign(y) in log y on [2, _PSI_Y_MAX], cached."""
    from scipy.interpolate import CubicSpline

    key = (sign, round(float(T_f), 9))
    if key not in _PSI_SPLINES:
        # the dual kernel carries psitilde(-s): with psitilde(s) the c = 1
        # case provably cannot reduce to the functional equation of L(s, f),
        # and the numeric validator confirms it (see the G/Psi sign audit)
        kernel = PsiKernel(sign, T_f, mellin_psi=lambda s: _flipped_bump_mellin(s),
                           sigma=-0.5, tail_tol=1e-9)
        L = _psi_grid_nodes(2.0, _PSI_Y_MAX)
        vals = kernel(np.exp(L))
        _PSI_SPLINES[key] = (CubicSpline(L, vals.real), CubicSpline(L, vals.imag))
    return _PSI_SPLINES[key]


def _psi_values(sign: int, T_f: float, y: np.ndarray) -> np.ndarray:
    sp_re, sp_im = _psi_spline(sign, T_f)
    out = np.zeros(y.shape, dtype=np.complex128)
    live = y <= _PSI_Y_MAX  # beyond the grid the kernel is below 1e-7
    L = np.log(y[live])
    out[live] = sp_re(L) + 1j * sp_im(L)
    return out


def verify_voronoi(f: MaassForm, c: int, d: int, N: float,
                   psi=bump) -> tuple[complex, complex, float]:
    """Both sides of the Voronoi identity for the bump psi(n/N) at modulus c,
    residue d; returns (lhs, rhs, |lhs - rhs|)."""
    if c < 1:
        raise ValueError("modulus c must be a positive integer")
    if math.gcd(c, d) != 1:
        raise ValueError(f"(c, d) = ({c}, {d}) are not coprime")
    if N <= 0:
        raise ValueError("scale N must be positive")
    f.require_depth(int(2 * N), context="the Voronoi left-hand side")
    dbar = pow(d, -1, c)
    # lhs: psi supported on [1, 2] confines the sum to N <= n <= 2N
    n_lo, n_hi = max(1, math.ceil(N)), math.floor(2 * N)
    n = np.arange(n_lo, n_hi + 1)
    lam = f.coefficients[n_lo:n_hi + 1]
    lhs = complex(np.dot(lam * psi(n / N), np.exp(2j * np.pi * (n * dbar % c) / c)))
    # rhs: dual sum truncated where Psi has decayed below the gap budget
    T = f.spectral_parameter
    n_max = min(f.N, int(_PSI_Y_MAX * c * c / N) + 1)
    m = np.arange(1, n_max + 1)
    y = m * N / (c * c)
    lam_m = f.coefficients[1:n_max + 1]
    phase = np.exp(2j * np.pi * (m * (d % c) % c) / c)
    rhs = c * complex(
        np.dot(lam_m / m, phase * _psi_values(1, T, y))
        + np.dot(lam_m / m, np.conj(phase) * _psi_values(-1, T, y))
    )
    return lhs, rhs, abs(lhs - rhs)
