"""Complex gamma machinery, AFE weight functions, and Voronoi kernels.

The weight functions are vertical-line Mellin integrals with the Gaussian
regularizer G(u) = exp(u^2), evaluated by a fixed-node trapezoid rule: the
integrand decays like exp(c^2 - t^2) on the line Re(u) = c, so the rule
converges spectrally and the cutoff sqrt(c^2 + ln(1/tail_tol)) certifies the
discarded tail.

For x < 1 the contour is reflected left past u = 0 (and the nearest gamma
poles), which removes the catastrophic (scale*x)^{-c} amplitude the direct
line would carry; the residues picked up on the way are added back exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gamma as _scipy_gamma, loggamma as _loggamma

TWO_PI = 2.0 * math.pi


class GammaPoleError(ValueError):
    """Gamma evaluated at (or too close to) a nonpositive integer."""


class TailToleranceError(RuntimeError):
    """A vertical-line quadrature failed its own tail-decay certificate."""


class RangeError(ValueError):
    """Evaluation point outside the supported sigma0 range."""


@dataclass(frozen=True)
class EvaluationPoint:
    """s0 = sigma0 + i t0 with tau = |t0| + 3."""

    sigma0: float
    t0: float = 0.0
    extended_range: bool = False

    def __post_init__(self):
        if not self.extended_range and not 0.5 <= self.sigma0 < 1.0:
            raise RangeError(
                f"sigma0 = {self.sigma0} outside [1/2, 1); pass extended_range=True to override"
            )

    @property
    def s0(self) -> complex:
        return complex(self.sigma0, self.t0)

    @property
    def tau(self) -> float:
        return abs(self.t0) + 3.0

    @property
    def conjugate(self) -> "EvaluationPoint":
        return replace(self, t0=-self.t0)


@dataclass(frozen=True)
class WeightParams:
    """Contour abscissa, node budget and tail thresholds for V, W, Psi."""

    contour_re: float = 2.0
    node_count: int = 800
    t_cutoff: float | None = None
    tail_tol: float = 1e-14

    def __post_init__(self):
        if self.node_count < 64:
            raise ValueError("node_count must be >= 64")
        if self.contour_re <= 0:
            raise ValueError("contour_re must be positive")
        if self.tail_tol <= 0:
            raise ValueError("tail_tol must be positive")

    def line_cutoff(self, c: float) -> float:
        if self.t_cutoff is not None:
            return self.t_cutoff
        return math.sqrt(c * c + math.log(1.0 / self.tail_tol))


def _as_s0(s0) -> complex:
    if isinstance(s0, EvaluationPoint):
        return s0.s0
    return complex(s0)


def _check_not_pole(z: complex, label: str) -> None:
    if abs(z.imag) < 1e-12 and z.real <= 0.5 and abs(z.real - round(z.real)) < 1e-12:
        raise GammaPoleError(f"{label}: gamma pole at argument {z}")


def complex_gamma(s) -> complex | np.ndarray:
    """Gamma on the complex plane; rejects pole inputs with their location."""
    arr = np.asarray(s, dtype=np.complex128)
    re, im = arr.real, arr.imag
    at_pole = (np.abs(im) < 1e-12) & (re <= 0.5) & (np.abs(re - np.round(re)) < 1e-12)
    if np.any(at_pole):
        bad = arr[at_pole].ravel()[0]
        raise GammaPoleError(f"gamma pole at s = {bad}")
    out = _scipy_gamma(arr)
    if np.isscalar(s) or np.ndim(s) == 0:
        return complex(out)
    return out


def log_gamma(s):
    return _loggamma(np.asarray(s, dtype=np.complex128))


def gamma_ratio_dirichlet(s0) -> complex:
    """gamma(1-s0)/gamma(s0) for gamma(s) = pi^{-s/2} Gamma(s/2)."""
    z = _as_s0(s0)
    _check_not_pole((1 - z) / 2, "gamma_ratio_dirichlet")
    _check_not_pole(z / 2, "gamma_ratio_dirichlet")
    return complex(
        np.exp((z - 0.5) * math.log(math.pi) + _loggamma((1 - z) / 2) - _loggamma(z / 2))
    )


def gamma_ratio_maass(s0, T_f: float) -> complex:
    """gammatilde(1-s0)/gammatilde(s0) for gammatilde(s) = pi^{-s} Gamma((s+iT)/2) Gamma((s-iT)/2)."""
    z = _as_s0(s0)
    iT = 1j * T_f
    for arg in ((1 - z + iT) / 2, (1 - z - iT) / 2, (z + iT) / 2, (z - iT) / 2):
        _check_not_pole(arg, "gamma_ratio_maass")
    lg = _loggamma
    return complex(
        np.exp(
            (2 * z - 1) * math.log(math.pi)
            + lg((1 - z + iT) / 2)
            + lg((1 - z - iT) / 2)
            - lg((z + iT) / 2)
            - lg((z - iT) / 2)
        )
    )


def maass_ratio_stirling_gap(s0, T_f: float) -> tuple[float, float]:
    """(|gammatilde ratio|, tau^{1-2 sigma0}) for the Stirling-magnitude diagnostic."""
    pt = s0 if isinstance(s0, EvaluationPoint) else EvaluationPoint(
        s0.real, s0.imag, extended_range=True
    )
    mag = abs(gamma_ratio_maass(pt.s0, T_f))
    return mag, pt.tau ** (1.0 - 2.0 * pt.sigma0)


# ---------------------------------------------------------------------------
# AFE weight functions V and W
# ---------------------------------------------------------------------------


def _kernel_v(u: np.ndarray, s0: complex) -> np.ndarray:
    return np.exp(_loggamma((s0 + u) / 2) - _loggamma(s0 / 2) + u * u) / u


def _kernel_w(u: np.ndarray, s0: complex, T_f: float) -> np.ndarray:
    iT = 1j * T_f
    lg0 = _loggamma((s0 + iT) / 2) + _loggamma((s0 - iT) / 2)
    return np.exp(
        _loggamma((s0 + u + iT) / 2) + _loggamma((s0 + u - iT) / 2) - lg0 + u * u
    ) / u


def _line_integral(x: np.ndarray, scale: float, kernel, c: float, params: WeightParams,
                   extra_residues: complex | np.ndarray = 0.0) -> np.ndarray:
    """(1/2 pi i) int_(c) (scale*x)^{-u} kernel(u) du over the truncated line."""
    T = params.line_cutoff(c)
    t = np.linspace(-T, T, params.node_count)
    h = t[1] - t[0]
    u = c + 1j * t
    ker = kernel(u)
    peak = np.max(np.abs(ker))
    edge = max(abs(ker[0]), abs(ker[-1]))
    if edge > 10.0 * params.tail_tol * peak:
        raise TailToleranceError(
            f"integrand endpoint magnitude {edge:.3e} exceeds tail budget on line Re(u)={c}"
        )
    ker = ker.copy()
    ker[0] *= 0.5
    ker[-1] *= 0.5
    lnx = np.log(scale * x)
    out = np.empty(x.shape, dtype=np.complex128)
    step = max(1, 2_000_000 // params.node_count)
    for i in range(0, x.size, step):
        sl = slice(i, i + step)
        E = np.exp(np.multiply.outer(-lnx[sl], u))
        out[sl] = E @ ker
    return out * (h / TWO_PI) + extra_residues


def _split_eval(x, direct, reflected):
    x_arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x_arr <= 0):
        raise ValueError("weight functions need x > 0")
    out = np.empty(x_arr.shape, dtype=np.complex128)
    lo = x_arr < 1.0
    if np.any(lo):
        out[lo] = reflected(x_arr[lo])
    if np.any(~lo):
        out[~lo] = direct(x_arr[~lo])
    if np.isscalar(x) or np.ndim(x) == 0:
        return complex(out[0])
    return out


def weight_v(s0, x, params: WeightParams = WeightParams()) -> complex | np.ndarray:
    """V_{s0}(x): Mellin weight of the Dirichlet AFE."""
    z = _as_s0(s0)
    kernel = lambda u: _kernel_v(u, z)

    def direct(xs):
        return _line_integral(xs, math.sqrt(math.pi), kernel, params.contour_re, params)

    def reflected(xs):
        sig = z.real
        if abs(sig) < 0.05 or abs(sig - 2.0) < 0.05:
            # gamma pole collides with u=0 or the shifted line; fall back
            return direct(xs)
        c_left = -(sig + 1.5) if sig > 0 else min(-1.5, -(sig + 1.5))
        # residues at u = 0 (value 1) and, when crossed, at u = -s0
        res = np.ones(xs.shape, dtype=np.complex128)
        if c_left < -sig:
            res += (
                (math.sqrt(math.pi) * xs) ** z
                * 2.0
                * np.exp(z * z - _loggamma(z / 2))
                / (-z)
            )
        return _line_integral(xs, math.sqrt(math.pi), kernel, c_left, params, extra_residues=res)

    return _split_eval(x, direct, reflected)


def weight_w(s0, x, T_f: float, params: WeightParams = WeightParams()) -> complex | np.ndarray:
    """W_{s0}(x): Mellin weight of the twisted AFE for spectral parameter T_f."""
    z = _as_s0(s0)
    kernel = lambda u: _kernel_w(u, z, T_f)

    def direct(xs):
        return _line_integral(xs, math.pi, kernel, params.contour_re, params)

    def reflected(xs):
        sig = z.real
        if abs(sig) < 0.05 or abs(T_f) < 1e-6:
            return direct(xs)
        c_left = -(sig + 1.5)
        iT = 1j * T_f
        lg0 = _loggamma((z + iT) / 2) + _loggamma((z - iT) / 2)
        res = np.ones(xs.shape, dtype=np.complex128)
        # poles of the two shifted gamma factors; numerically ~ exp(-T_f^2)
        for pole, other in (((-z - iT), -iT), ((-z + iT), iT)):
            res += (
                (math.pi * xs) ** (-pole)
                * 2.0
                * np.exp(_loggamma(other) - lg0 + pole * pole)
                / pole
            )
        return _line_integral(xs, math.pi, kernel, c_left, params, extra_residues=res)

    return _split_eval(x, direct, reflected)


def tabulate_weight(kind: str, s0, params: WeightParams, x_min: float, x_max: float,
                    T_f: float | None = None, points_per_decade: int = 700):
    """Cubic-spline surrogate of V/W on [x_min, x_max], built on a log grid.

    Returns a callable accepting arrays; accurate to ~1e-10 against the
    direct quadrature, at a fraction of its cost on large grids.
    """
    from scipy.interpolate import CubicSpline

    lo, hi = math.log(x_min) - 1e-9, math.log(x_max) + 1e-9
    n = max(64, int((hi - lo) / math.log(10) * points_per_decade))
    grid = np.exp(np.linspace(lo, hi, n))
    if kind == "V":
        vals = weight_v(s0, grid, params)
    elif kind == "W":
        vals = weight_w(s0, grid, float(T_f), params)
    else:
        raise ValueError(f"unknown weight kind {kind!r}")
    sp_re = CubicSpline(np.log(grid), vals.real)
    sp_im = CubicSpline(np.log(grid), vals.imag)

    def evaluate(x):
        lx = np.log(np.asarray(x, dtype=np.float64))
        return sp_re(lx) + 1j * sp_im(lx)

    return evaluate


# ---------------------------------------------------------------------------
# Decay envelopes (certificate-style truncation)
# ---------------------------------------------------------------------------

_ENVELOPE_SHIFTS = (0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0)


def _envelope_prefactors(kind: str, s0: complex, T_f: float | None) -> np.ndarray:
    """I_A = (1/2 pi) int |kernel(A+it)| dt for each trial shift A."""
    out = np.empty(len(_ENVELOPE_SHIFTS))
    for i, A in enumerate(_ENVELOPE_SHIFTS):
        T = math.sqrt(A * A + math.log(1e16))
        t = np.linspace(-T, T, 400)
        u = A + 1j * t
        if kind == "V":
            ker = _kernel_v(u, s0)
        else:
            ker = _kernel_w(u, s0, float(T_f))
        out[i] = np.trapezoid(np.abs(ker), t) / TWO_PI
    return out


def weight_envelope(kind: str, s0, x, T_f: float | None = None) -> np.ndarray:
    """Upper bound for |V| (kind='V', scale sqrt(pi)) or |W| ('W', scale pi):
    min over contour shifts A of (scale*x)^{-A} I_A, capped below the trivial
    x->0 limit envelope."""
    z = _as_s0(s0)
    scale = math.sqrt(math.pi) if kind == "V" else math.pi
    pref = _envelope_prefactors(kind, z, T_f)
    xa = np.atleast_1d(np.asarray(x, dtype=np.float64))
    lx = np.log(scale * xa)
    vals = np.exp(np.log(pref)[:, None] - np.multiply.outer(np.array(_ENVELOPE_SHIFTS), lx))
    env = np.minimum(vals.min(axis=0), 2.0)  # weights tend to 1 as x -> 0+
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(env[0])
    return env


def weight_cutoff(kind: str, s0, tol: float, T_f: float | None = None) -> float:
    """Smallest x at which the decay envelope certifies |weight| < tol."""
    z = _as_s0(s0)
    scale = math.sqrt(math.pi) if kind == "V" else math.pi
    pref = _envelope_prefactors(kind, z, T_f)
    best = math.inf
    for A, I in zip(_ENVELOPE_SHIFTS, pref):
        best = min(best, (I / tol) ** (1.0 / A) / scale)
    return best


# ---------------------------------------------------------------------------
# Voronoi kernels
# ---------------------------------------------------------------------------


def voronoi_G(sign: int, s, T_f: float):
    """G^{+-}(s) = [A(s) +- B(s)] / (2 pi), the gamma-quotient pair of the
    GL(2) Voronoi kernel for an even form; the second quotient is taken in
    the T_f -> -T_f symmetric form."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    arr = np.asarray(s, dtype=np.complex128)
    iT = 1j * T_f
    lg = _loggamma
    for probe in np.atleast_1d(arr).ravel()[:8]:
        for arg in ((1 + probe + iT) / 2, (1 + probe - iT) / 2,
                    (2 + probe + iT) / 2, (2 + probe - iT) / 2):
            _check_not_pole(complex(arg), "voronoi_G")
    A = np.exp(lg((1 + arr + iT) / 2) + lg((1 + arr - iT) / 2)
               - lg((-arr + iT) / 2) - lg((-arr - iT) / 2))
    B = np.exp(lg((2 + arr + iT) / 2) + lg((2 + arr - iT) / 2)
               - lg((1 - arr + iT) / 2) - lg((1 - arr - iT) / 2))
    out = (A + sign * B) / TWO_PI
    if np.isscalar(s) or np.ndim(s) == 0:
        return complex(out)
    return out


def bump(t):
    """Fixed C-infinity bump supported on [1, 2], normalized to 1 at t = 3/2."""
    t_arr = np.asarray(t, dtype=np.float64)
    u = 2.0 * t_arr - 3.0
    inside = np.abs(u) < 1.0
    out = np.zeros(t_arr.shape)
    uu = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - uu * uu))
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl_nodes(n: int, a: float, b: float):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    x, w = _GL_CACHE[n]
    mid, half = (a + b) / 2.0, (b - a) / 2.0
    return mid + half * x, half * w


def bump_mellin(s, nodes: int = 1600):
    """Mellin transform of the bump: int_1^2 bump(t) t^{s-1} dt (Gauss-Legendre).

    The node count controls the largest resolvable |Im s|; 1600 nodes hold
    through |Im s| ~ 4000, past where the Psi kernels truncate.
    """
    tq, wq = _gl_nodes(nodes, 1.0, 2.0)
    vals = bump(tq) * wq / tq
    ln_tq = np.log(tq)
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.complex128))
    out = np.empty(s_arr.shape, dtype=np.complex128)
    step = max(1, 4_000_000 // nodes)
    for i in range(0, s_arr.size, step):
        sl = slice(i, i + step)
        out[sl] = np.exp(np.multiply.outer(s_arr[sl], ln_tq)) @ vals
    if np.isscalar(s) or np.ndim(s) == 0:
        return complex(out[0])
    return out


class PsiKernel:
    """Precomputed vertical-line kernel for Psi^{+-}; reusable across y values."""

    def __init__(self, sign: int, T_f: float, mellin_psi=bump_mellin,
                 sigma: float = -0.99, h: float = 0.05, t_max_cap: float = 4000.0,
                 tail_tol: float = 1e-11):
        if sigma <= -1.0:
            raise ValueError("Psi contour needs sigma > -1")
        self.sign = sign
        self.sigma = sigma
        # G has gamma near-poles at t = -+T_f of width (1+sigma); the step
        # must resolve them or the trapezoid rule silently loses the spike
        if sigma < -0.5:
            h = min(h, (1.0 + sigma) / 10.0)
        self.h = h
        # build the t >= 0 half in blocks until the kernel has decayed; for a
        # real bump and real T_f the t < 0 half is the complex conjugate
        blocks: list[np.ndarray] = []
        peak = 0.0
        t_start, block = 0.0, 240.0
        while True:
            t_blk = np.arange(t_start, t_start + block, h)
            s_blk = sigma + 1j * t_blk
            k_blk = voronoi_G(sign, s_blk, T_f) * mellin_psi(s_blk)
            blocks.append(k_blk)
            peak = max(peak, float(np.max(np.abs(k_blk))))
            tail = float(np.max(np.abs(k_blk[-20:])))
            if tail <= tail_tol * peak:
                break
            t_start += block
            if t_start >= t_max_cap:
                raise TailToleranceError(
                    f"Psi kernel tail still {tail / peak:.2e} of peak at |t| = {t_start}"
                )
        ker_pos = np.concatenate(blocks)
        n = ker_pos.size
        t = (np.arange(2 * n - 1) - (n - 1)) * h
        ker = np.concatenate([np.conj(ker_pos[:0:-1]), ker_pos])
        ker[0] *= 0.5
        ker[-1] *= 0.5
        self._t = t
        self._s = sigma + 1j * t
        self._ker = ker * (h / TWO_PI)

    def __call__(self, y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
        if np.any(y_arr <= 0):
            raise ValueError("Psi needs y > 0")
        ln = np.log(math.pi ** 2 * y_arr)
        out = np.empty(y_arr.shape, dtype=np.complex128)
        step = max(1, 4_000_000 // self._s.size)
        for i in range(0, y_arr.size, step):
            sl = slice(i, i + step)
            out[sl] = np.exp(np.multiply.outer(-ln[sl], self._s)) @ self._ker
        if np.isscalar(y) or np.ndim(y) == 0:
            return complex(out[0])
        return out


def voronoi_Psi(sign: int, y, T_f: float, mellin_psi=bump_mellin,
                params: WeightParams | None = None, sigma: float = -0.99):
    """Psi^{+-}(y) = (1/2 pi i) int_(sigma) (pi^2 y)^{-s} G^{+-}(s) psitilde(s) ds.

    The kernel on the line is rebuilt per call; reuse a PsiKernel directly
    when evaluating many y values against the same bump.
    """
    h = 0.05
    if params is not None and params.t_cutoff is not None:
        h = min(0.05, 2.0 * params.t_cutoff / params.node_count)
    kern = PsiKernel(sign, T_f, mellin_psi=mellin_psi, sigma=sigma, h=h)
    return kern(y)
