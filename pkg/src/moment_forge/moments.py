"""First-moment engine: direct character sum vs the S1-S4 closed-form route.

The target quantity is the sum over even primitive characters mod a prime q of
L(s0, f x chi) * conj(L(s0, chi)).  Two independent code paths compute it:

* direct: enumerate the characters and multiply the two AFE values;
* closed form: expand the product of AFEs into four double sums S1-S4 and
  replace each character sum by its closed form (orthogonality, Gauss twist,
  inverse twist via tau(conj chi) tau(chi)^2 = q tau(chi), and Kloosterman).

Both routes consume identical weighted coefficient arrays, so their gap is an
exact-identity check: anything beyond roundoff is a bug.  The main term
(q/2) L(2 sigma0, f) is subtracted to expose the residual, whose growth in q
is fitted against the predicted envelope exponent.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .charsums import CharacterTable, NotPrimeError, even_primitive_indices, kloosterman, smallest_factor
from .levaluator import (
    THETA_KIM_SARNAK,
    DirichletAFEData,
    TwistedAFEData,
    dirichlet_afe_data,
    l_f,
    twisted_afe_data,
)
from .maassdata import MaassForm
from .weights import EvaluationPoint, RangeError


class IdentityGapError(ArithmeticError):
    """The direct and closed-form routes disagree beyond tolerance."""


class FitDegeneracyError(ValueError):
    """An exponent fit lacks data points or variance."""


def _as_point(s0) -> EvaluationPoint:
    if isinstance(s0, EvaluationPoint):
        return s0
    z = complex(s0)
    return EvaluationPoint(z.real, z.imag)


def _require_prime_modulus(q: int) -> None:
    w = smallest_factor(q)
    if w is not None:
        raise NotPrimeError(q, w)
    if q < 5:
        raise ValueError(f"moment computations need a prime q >= 5, got {q}")


def _bucket(coeffs: np.ndarray, q: int) -> np.ndarray:
    """Residue sums R[r] = sum of coeffs[k-1] over k = 1..len with k = r mod q.

    np.bincount accumulates in array order, so the reduction order is fixed
    and reports are bit-stable for a given coefficient array.
    """
    k = np.arange(1, coeffs.size + 1, dtype=np.int64) % q
    re = np.bincount(k, weights=coeffs.real, minlength=q)
    im = np.bincount(k, weights=coeffs.imag, minlength=q)
    return re + 1j * im


@dataclass(frozen=True)
class MomentData:
    """Everything both routes share at a fixed (q, s0): the character table,
    the two AFE coefficient tables, and their residue buckets."""

    q: int
    point: EvaluationPoint
    table: CharacterTable
    dirichlet: DirichletAFEData
    twisted: TwistedAFEData
    a_buckets: np.ndarray  # conj of Dirichlet first-sum coefficients, by residue
    b_buckets: np.ndarray  # conj of Dirichlet second-sum coefficients
    w1_buckets: np.ndarray  # twisted first-sum coefficients
    w2_buckets: np.ndarray  # twisted second-sum coefficients

    @property
    def p2(self) -> complex:
        """Root factor of conj(L(s0, chi)) (times tau(conj chi) per chi)."""
        return complex(np.conj(self.dirichlet.root_factor))

    @property
    def p4(self) -> complex:
        """Root factor of L(s0, f x chi) (times tau(chi)^2 per chi)."""
        return self.twisted.root_factor

    @property
    def truncation_total(self) -> float:
        return self.dirichlet.truncation_bound + self.twisted.truncation_bound


def moment_data(q: int, s0, f: MaassForm, dirichlet_tol: float = 1e-10,
                twisted_tol: float = 1e-5) -> MomentData:
    _require_prime_modulus(q)
    point = _as_point(s0)
    table = CharacterTable(q)
    dd = dirichlet_afe_data(point, q, tail_tol=dirichlet_tol)
    td = twisted_afe_data(point, q, f, tail_tol=twisted_tol, clamp=True)
    return MomentData(
        q=q,
        point=point,
        table=table,
        dirichlet=dd,
        twisted=td,
        a_buckets=_bucket(np.conj(dd.first_coeffs), q),
        b_buckets=_bucket(np.conj(dd.second_coeffs), q),
        w1_buckets=_bucket(td.first_coeffs, q),
        w2_buckets=_bucket(td.second_coeffs, q),
    )


# ---------------------------------------------------------------------------
# Route 1: direct enumeration of even primitive characters
# ---------------------------------------------------------------------------


def character_products(data: MomentData) -> list[tuple[int, complex]]:
    """(character index j, L(s0, f x chi_j) * conj(L(s0, chi_j))) in fixed
    ascending-j order.  chi(n) depends only on n mod q, so the per-character
    sums collapse onto the residue buckets exactly."""
    table = data.table
    tau = table.gauss_sums()
    p2, p4 = data.p2, data.p4
    out = []
    for j in even_primitive_indices(table):
        chi = table.chi_row(j)
        chibar = np.conj(chi)
        l_twisted = (complex(np.dot(chi, data.w1_buckets))
                     + tau[j] ** 2 * p4 * complex(np.dot(chibar, data.w2_buckets)))
        l_chi_conj = (complex(np.dot(chibar, data.a_buckets))
                      + np.conj(tau[j]) * p2 * complex(np.dot(chi, data.b_buckets)))
        out.append((j, l_twisted * l_chi_conj))
    return out


def lhs_moment(q_or_data, s0=None, f: MaassForm | None = None) -> complex:
    """Direct-route moment: sum over even primitive chi of the AFE product."""
    data = q_or_data if isinstance(q_or_data, MomentData) else moment_data(q_or_data, s0, f)
    total = 0.0 + 0.0j
    for _, product in character_products(data):
        total += product
    return total


# ---------------------------------------------------------------------------
# Route 2: closed-form character-sum kernels
# ---------------------------------------------------------------------------


def _unit_outer_products(table: CharacterTable) -> tuple[np.ndarray, np.ndarray]:
    """(r*t mod q, t*rbar mod q) for units r (rows) and t (columns)."""
    q = table.q
    r = np.arange(1, q, dtype=np.int64)
    rbar = table.inverse[1:q]
    return np.outer(r, r) % q, np.outer(rbar, r) % q


def s_terms_closed_form(q_or_data, s0=None, f: MaassForm | None = None,
                        diagnostics: dict | None = None) -> tuple[complex, complex, complex, complex]:
    """(S1, S2, S3, S4) with the character sums replaced by closed forms:

    S1: even-primitive orthogonality  (phi/2)(1_{m=n} + 1_{m=-n}) - 1;
    S2: sum of chi(mn) tau(conj chi)  ->  phi cos(2 pi mn / q) + 1;
    S3: tau(conj chi) tau(chi)^2 = q tau(chi), then the inverse twist
        sum of chi(m nbar) tau(chi)  ->  phi cos(2 pi n mbar / q) + 1;
    S4: sum of conj(chi)(mn) tau(chi)^2  ->
        (phi/2)[S(1, mn; q) + S(1, -mn; q)] - 1  (Kloosterman).

    If a dict is passed as `diagnostics` it receives the S11*, S11**, S12
    sub-terms of the S1 evaluation.
    """
    data = q_or_data if isinstance(q_or_data, MomentData) else moment_data(q_or_data, s0, f)
    q = data.q
    phi = q - 1
    A = data.a_buckets[1:]
    B = data.b_buckets[1:]
    W1 = data.w1_buckets[1:]
    W2 = data.w2_buckets[1:]
    p2, p4 = data.p2, data.p4

    # S1: (phi/2) S11 - S12 over unit residues; A[::-1] realigns r -> -r
    s11 = complex(np.dot(W1, A + A[::-1]))
    s12 = complex(np.sum(A) * np.sum(W1))
    s1 = 0.5 * phi * s11 - s12
    if diagnostics is not None:
        a_full = np.conj(data.dirichlet.first_coeffs)
        w1_full = data.twisted.first_coeffs
        n_diag = min(a_full.size, w1_full.size)
        n = np.arange(1, n_diag + 1)
        coprime = (n % q) != 0
        s11_diag = complex(np.dot(a_full[:n_diag][coprime], w1_full[:n_diag][coprime]))
        diagnostics["s11_star_star"] = s11_diag
        diagnostics["s11_star"] = s11 - s11_diag
        diagnostics["s12"] = s12

    mn_mod, inv_mod = _unit_outer_products(data.table)
    cos_kernel = phi * np.cos(2.0 * np.pi * np.arange(q) / q) + 1.0

    # S2: rows are m-residues (B), columns n-residues (W1)
    s2 = p2 * complex(B @ cos_kernel[mn_mod] @ W1)

    # S3: kernel argument is n * mbar; rows m (B), columns n (W2)
    s3 = q * p2 * p4 * complex(B @ cos_kernel[inv_mod] @ W2)

    # S4: Kloosterman kernel over u = mn mod q
    u = np.arange(1, q)
    kl = np.array([kloosterman(1, int(v), q) for v in u])
    kl_kernel = np.zeros(q)
    kl_kernel[1:] = 0.5 * phi * (kl + kl[::-1]) - 1.0
    s4 = p4 * complex(A @ kl_kernel[mn_mod] @ W2)

    return s1, s2, s3, s4


# ---------------------------------------------------------------------------
# Main term, report, residual growth
# ---------------------------------------------------------------------------


def main_term(q: int, sigma0: float, f: MaassForm) -> float:
    """(q/2) L(2 sigma0, f)."""
    if q < 1:
        raise ValueError("q must be positive")
    return 0.5 * q * l_f(2.0 * sigma0, f).value


@dataclass(frozen=True)
class MomentReport:
    q: int
    s0: complex
    lhs_direct: complex
    s1: complex
    s2: complex
    s3: complex
    s4: complex
    main_term: float
    identity_gap: float
    residual: complex
    truncation_total: float
    identity_tolerance: float
    clamped: bool
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "sigma0": self.s0.real,
            "t0": self.s0.imag,
            "lhs_direct": [self.lhs_direct.real, self.lhs_direct.imag],
            "s_terms": [[s.real, s.imag] for s in (self.s1, self.s2, self.s3, self.s4)],
            "main_term": self.main_term,
            "identity_gap": self.identity_gap,
            "residual": [self.residual.real, self.residual.imag],
            "truncation_total": self.truncation_total,
            "identity_tolerance": self.identity_tolerance,
            "clamped": self.clamped,
            "diagnostics": {k: [v.real, v.imag] for k, v in self.diagnostics.items()},
        }


def identity_tolerance(truncation_total: float, floor: float = 1e-6) -> float:
    """Both routes share truncation sets, so the identity holds up to roundoff;
    the acceptance budget still scales with the recorded tail bounds."""
    return max(floor, 20.0 * truncation_total)


def moment_report(q: int, s0, f: MaassForm, tol_identity: float | None = None,
                  data: MomentData | None = None) -> MomentReport:
    if data is None:
        data = moment_data(q, s0, f)
    lhs = lhs_moment(data)
    diag: dict = {}
    s1, s2, s3, s4 = s_terms_closed_form(data, diagnostics=diag)
    gap = abs(lhs - (s1 + s2 + s3 + s4))
    tol = tol_identity if tol_identity is not None else identity_tolerance(data.truncation_total)
    for name, value in (("lhs", lhs), ("S1", s1), ("S2", s2), ("S3", s3), ("S4", s4)):
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise ArithmeticError(f"{name} is not finite at q={q}, s0={data.point.s0}")
    if gap > tol:
        raise IdentityGapError(
            f"route identity gap {gap:.3e} > tolerance {tol:.1e} at q={q}, "
            f"s0={data.point.s0}"
        )
    mt = main_term(q, data.point.sigma0, f)
    return MomentReport(
        q=q,
        s0=data.point.s0,
        lhs_direct=lhs,
        s1=s1, s2=s2, s3=s3, s4=s4,
        main_term=mt,
        identity_gap=gap,
        residual=lhs - mt,
        truncation_total=data.truncation_total,
        identity_tolerance=tol,
        clamped=data.twisted.clamped,
        diagnostics=diag,
    )


DEFAULT_PRIME_GRID = (5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@dataclass(frozen=True)
class ExponentFit:
    q_list: tuple
    residuals: tuple
    slope: float
    intercept: float
    stderr: float
    predicted_envelope: float
    reports: tuple = field(repr=False, default=())

    def as_dict(self) -> dict:
        return {
            "q_list": list(self.q_list),
            "residuals": list(self.residuals),
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "predicted_envelope": self.predicted_envelope,
        }


def predicted_envelope_exponent(sigma0: float, t0: float = 0.0,
                                theta: float = THETA_KIM_SARNAK) -> float:
    """Largest q-exponent among the four error-term envelopes R1..R4 at fixed
    tau (epsilon terms treated as 0):

      R1 ~ q^{1/4},
      R2 ~ q^{3(1-sigma0)/2 + theta},
      R3 ~ q^{(2-sigma0)/2},
      R4 ~ q^{3/2 - (1 + sigma0(1-2 theta)/(2(1+theta))) sigma0}.
    """
    if not 0.5 <= sigma0 < 1.0:
        raise RangeError(f"sigma0 = {sigma0} outside [1/2, 1)")
    r1 = 0.25
    r2 = 1.5 * (1.0 - sigma0) + theta
    r3 = 0.5 * (2.0 - sigma0)
    r4 = 1.5 - (1.0 + sigma0 * (1.0 - 2.0 * theta) / (2.0 * (1.0 + theta))) * sigma0
    return max(r1, r2, r3, r4)


def exponent_fit(q_list, s0, f: MaassForm, threads: int = 1,
                 tol_identity: float | None = None) -> ExponentFit:
    """Least-squares slope of log|residual| against log q over >= 4 primes."""
    q_list = tuple(int(q) for q in q_list)
    if len(q_list) < 4:
        raise FitDegeneracyError(f"exponent fit needs >= 4 primes, got {len(q_list)}")
    if len(set(q_list)) != len(q_list):
        raise FitDegeneracyError("duplicate moduli in fit grid")
    point = _as_point(s0)

    def one(q: int) -> MomentReport:
        return moment_report(q, point, f, tol_identity=tol_identity)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            # map() preserves input order, so the fit sees a fixed sequence
            reports = list(pool.map(one, q_list))
    else:
        reports = [one(q) for q in q_list]
    residuals = np.array([abs(r.residual) for r in reports])
    if np.any(residuals == 0.0):
        raise FitDegeneracyError("zero residual makes the log-log fit degenerate")
    x = np.log(np.array(q_list, dtype=np.float64))
    y = np.log(residuals)
    if np.ptp(x) == 0.0:
        raise FitDegeneracyError("fit grid has no spread in q")
    (slope, intercept), cov = np.polyfit(x, y, 1, cov=True)
    return ExponentFit(
        q_list=q_list,
        residuals=tuple(float(v) for v in residuals),
        slope=float(slope),
        intercept=float(intercept),
        stderr=float(np.sqrt(cov[0, 0])),
        predicted_envelope=predicted_envelope_exponent(point.sigma0, point.t0),
        reports=tuple(reports),
    )


# ---------------------------------------------------------------------------
# Exponent formulas of the nonvanishing threshold
# ---------------------------------------------------------------------------


def _coerce_exact(x):
    """Keep Fractions/ints exact; floats stay floats."""
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return float(x)


def m_exponent(sigma0, theta=THETA_KIM_SARNAK):
    """M(sigma0) = max of the four branches gating q >> tau^{M(sigma0)}.

    Exact (Fraction) inputs give an exact result: m_exponent(Fraction(1, 2),
    Fraction(7, 64)) == Fraction(543, 25).
    """
    s = _coerce_exact(sigma0)
    t = _coerce_exact(theta)
    if not 0.5 <= float(s) < 1.0:
        raise RangeError(f"sigma0 = {sigma0} outside [1/2, 1)")
    if not 0.0 <= float(t) <= 7.0 / 64.0:
        raise RangeError(f"theta = {theta} outside [0, 7/64]")
    one = Fraction(1) if isinstance(s, Fraction) and isinstance(t, Fraction) else 1.0
    d2 = 3 * s - one - 2 * t
    disc = 2 + 2 * t + s - 2 * s * t
    d4 = -one - t + s * disc
    assert d2 > 0 and d4 > 0, "denominators are positive on the stated range"
    branches = (
        2 * (one - s),
        (3 * one - 3 * s + 2 * t) / d2,
        (one - s) / s,
        (5 * one + 5 * t - s * disc) / d4,
    )
    return max(branches)


def beta_params(sigma0, theta=THETA_KIM_SARNAK):
    """(beta1, beta2) balancing the three S41 envelope exponents; the two
    balancing equations are re-verified to 1e-12 on every call."""
    s = _coerce_exact(sigma0)
    t = _coerce_exact(theta)
    if not 0.5 <= float(s) < 1.0:
        raise RangeError(f"sigma0 = {sigma0} outside [1/2, 1)")
    if not 0.0 <= float(t) <= 7.0 / 64.0:
        raise RangeError(f"theta = {theta} outside [0, 7/64]")
    beta1 = s * (1 - 2 * t) / (2 * (1 + t))
    beta2 = (1 + 4 * t) / (2 * (1 + t))
    sf, tf, b1, b2 = float(s), float(t), float(beta1), float(beta2)
    lhs1 = 0.5 + (1 - sf) * b1 + b2 * sf
    rhs = (1 - b1) * sf + 0.5
    lhs2 = 1 + (1 - sf) * b1 - (1 - sf) * b2 + (2 - b2) * tf
    if abs(lhs1 - rhs) > 1e-12 or abs(lhs2 - rhs) > 1e-12:
        raise ArithmeticError(
            f"balancing equations violated at sigma0={sigma0}, theta={theta}: "
            f"{lhs1 - rhs:.3e}, {lhs2 - rhs:.3e}"
        )
    return beta1, beta2


# ---------------------------------------------------------------------------
# Nonvanishing scan
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NonvanishingReport:
    q: int
    s0: complex
    products: tuple  # (character index, |product|) in fixed order
    minimizer: int
    min_modulus: float
    threshold: float
    any_nonvanishing: bool
    corollary_threshold: float
    corollary_note: str

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "sigma0": self.s0.real,
            "t0": self.s0.imag,
            "products": [[j, v] for j, v in self.products],
            "minimizer": self.minimizer,
            "min_modulus": self.min_modulus,
            "threshold": self.threshold,
            "any_nonvanishing": self.any_nonvanishing,
            "corollary_threshold": self.corollary_threshold,
            "corollary_note": self.corollary_note,
        }


def nonvanishing_scan(q: int, s0, f: MaassForm,
                      data: MomentData | None = None) -> NonvanishingReport:
    """Per-character |L(s0, f x chi) conj(L(s0, chi))| with the minimizer and
    a nonvanishing flag (modulus > 10x the total truncation bound)."""
    if data is None:
        data = moment_data(q, s0, f)
    point = data.point
    mods = tuple((j, abs(p)) for j, p in character_products(data))
    threshold = 10.0 * data.truncation_total
    j_min, v_min = min(mods, key=lambda jp: jp[1])
    tau_param = abs(point.t0) + 3.0
    corollary = tau_param ** float(m_exponent(point.sigma0))
    note = (
        "corollary regime unreachable at desk scale"
        if corollary > data.q
        else "corollary regime reached"
    )
    return NonvanishingReport(
        q=data.q,
        s0=point.s0,
        products=mods,
        minimizer=j_min,
        min_modulus=v_min,
        threshold=threshold,
        any_nonvanishing=any(v > threshold for _, v in mods),
        corollary_threshold=corollary,
        corollary_note=note,
    )
