from fractions import Fraction

import numpy as np
import pytest

from moment_forge.charsums import CharacterTable, NotPrimeError
from moment_forge.levaluator import l_chi_afe, l_f, l_twisted_afe
from moment_forge.maassdata import load_bundled
from moment_forge.moments import (
    DEFAULT_PRIME_GRID,
    FitDegeneracyError,
    IdentityGapError,
    beta_params,
    character_products,
    exponent_fit,
    identity_tolerance,
    lhs_moment,
    m_exponent,
    main_term,
    moment_data,
    moment_report,
    nonvanishing_scan,
    predicted_envelope_exponent,
    s_terms_closed_form,
)
from moment_forge.weights import RangeError

THETA = Fraction(7, 64)


@pytest.fixture(scope="module")
def form():
    return load_bundled()


@pytest.fixture(scope="module")
def data5(form):
    return moment_data(5, 0.5, form)


@pytest.fixture(scope="module")
def data7(form):
    return moment_data(7, 0.75, form)


class TestRouteEquivalence:
    def test_q5_critical(self, data5):
        lhs = lhs_moment(data5)
        s1, s2, s3, s4 = s_terms_closed_form(data5)
        gap = abs(lhs - (s1 + s2 + s3 + s4))
        assert gap <= identity_tolerance(data5.truncation_total)
        assert gap < 1e-10  # routes share arrays, so the gap is pure roundoff

    def test_q7_sigma075(self, data7):
        lhs = lhs_moment(data7)
        s_terms = s_terms_closed_form(data7)
        assert abs(lhs - sum(s_terms)) <= max(1e-6, 20 * data7.truncation_total)

    def test_q5_single_character_product(self, data5, form):
        chi = CharacterTable(5).character(2)
        product = (l_twisted_afe(0.5, form, chi, data=data5.twisted).value
                   * np.conj(l_chi_afe(0.5, chi, data=data5.dirichlet).value))
        assert abs(lhs_moment(data5) - product) < 1e-12

    def test_q7_order_invariance(self, form):
        data = moment_data(7, 0.5, form)
        products = [p for _, p in character_products(data)]
        assert len(products) == 2  # (q-3)/2 even primitive characters
        forward = products[0] + products[1]
        reverse = products[1] + products[0]
        assert abs(lhs_moment(data) - forward) < 1e-12
        assert abs(forward - reverse) < 1e-12


class TestReport:
    def test_report_fields(self, data5, form):
        rep = moment_report(5, 0.5, form, data=data5)
        assert rep.q == 5
        assert rep.identity_gap <= rep.identity_tolerance
        assert abs(rep.residual - (rep.lhs_direct - rep.main_term)) < 1e-12
        for key in ("s11_star", "s11_star_star", "s12"):
            assert key in rep.diagnostics
        d = rep.as_dict()
        assert d["q"] == 5 and len(d["s_terms"]) == 4

    def test_s11_diag_approaches_l2sigma(self, form):
        # S11** - L(2 sigma0, f) is dominated by the cut Dirichlet tail
        # ~ (sqrt q)^{1 - 2 sigma0 + theta} at desk scale: O(1) but shrinking
        l_val = l_f(1.2, form).value
        gaps = []
        for q in (11, 37, 101):
            diag = {}
            s_terms_closed_form(moment_data(q, 0.6, form), diagnostics=diag)
            gaps.append(abs(diag["s11_star_star"] - l_val))
        assert gaps[0] == pytest.approx(1.6567, abs=1e-3)
        assert gaps[0] <= 2.0
        assert gaps[0] > gaps[1] > gaps[2]

    def test_identity_gap_guard(self, data5, form):
        with pytest.raises(IdentityGapError):
            moment_report(5, 0.5, form, tol_identity=1e-20, data=data5)

    def test_determinism(self, data5, form):
        a = moment_report(5, 0.5, form, data=data5)
        b = moment_report(5, 0.5, form, data=data5)
        assert a.lhs_direct == b.lhs_direct
        assert (a.s1, a.s2, a.s3, a.s4) == (b.s1, b.s2, b.s3, b.s4)
        assert a.identity_gap == b.identity_gap

    def test_rejects_composite_and_tiny_q(self, form):
        with pytest.raises(NotPrimeError):
            moment_data(9, 0.5, form)
        with pytest.raises(ValueError):
            moment_data(3, 0.5, form)


class TestMainTerm:
    def test_linearity(self, form):
        assert main_term(22, 0.75, form) == pytest.approx(2 * main_term(11, 0.75, form))

    def test_values(self, form):
        assert main_term(5, 0.9, form) == pytest.approx(2.5 * l_f(1.8, form).value)
        assert main_term(11, 0.5, form) == pytest.approx(5.5 * l_f(1.0, form).value)


class TestExponentFit:
    def test_four_prime_fit(self, form):
        fit = exponent_fit((5, 7, 11, 13), 0.5, form)
        assert np.isfinite(fit.slope) and fit.stderr >= 0
        assert fit.predicted_envelope == pytest.approx(0.9119718309859155)
        assert len(fit.residuals) == 4

    def test_threaded_matches_serial(self, form):
        serial = exponent_fit((5, 7, 11, 13), 0.5, form, threads=1)
        threaded = exponent_fit((5, 7, 11, 13), 0.5, form, threads=3)
        assert serial.residuals == threaded.residuals
        assert serial.slope == threaded.slope

    def test_rejects_short_grid(self, form):
        with pytest.raises(FitDegeneracyError):
            exponent_fit((5, 7), 0.5, form)
        with pytest.raises(FitDegeneracyError):
            exponent_fit((5,), 0.5, form)

    def test_rejects_duplicates(self, form):
        with pytest.raises(FitDegeneracyError):
            exponent_fit((5, 5, 7, 11), 0.5, form)

    def test_default_grid_is_prime(self):
        from moment_forge.charsums import is_prime

        assert all(is_prime(q) for q in DEFAULT_PRIME_GRID)
        assert len(DEFAULT_PRIME_GRID) == 10


class TestExponentFormulas:
    def test_m_exact_value(self):
        assert m_exponent(Fraction(1, 2), THETA) == Fraction(543, 25)

    def test_m_component_form(self):
        # the sigma0 = 1/2 reduction (15 + 18 theta)/(1 - 2 theta)
        t = THETA
        assert (15 + 18 * t) / (1 - 2 * t) == Fraction(543, 25)

    def test_m_theta_zero(self):
        assert m_exponent(Fraction(1, 2), 0) == 15

    def test_m_monotone_in_sigma(self):
        grid = np.linspace(0.5, 0.999, 50)
        vals = [float(m_exponent(float(s))) for s in grid]
        assert all(vals[i + 1] <= vals[i] + 1e-12 for i in range(len(vals) - 1))

    def test_m_range_errors(self):
        with pytest.raises(RangeError):
            m_exponent(0.4)
        with pytest.raises(RangeError):
            m_exponent(1.0)
        with pytest.raises(RangeError):
            m_exponent(0.5, 0.2)

    def test_beta_exact_values(self):
        b1, b2 = beta_params(Fraction(1, 2), THETA)
        assert b1 == Fraction(25, 142)
        assert b2 == Fraction(46, 71)

    def test_beta_theta_zero(self):
        b1, b2 = beta_params(Fraction(3, 4), 0)
        assert b1 == Fraction(3, 8)
        assert b2 == Fraction(1, 2)

    def test_beta_balancing_everywhere(self):
        for s in np.linspace(0.5, 0.99, 20):
            beta_params(float(s))  # raises if either equation drifts past 1e-12

    def test_envelope_at_half(self):
        # 7/8 + 3 theta / (8 (1 + theta)) with theta = 7/64
        expected = 7 / 8 + 21 / 568
        assert predicted_envelope_exponent(0.5) == pytest.approx(expected, abs=1e-15)

    def test_envelope_range(self):
        with pytest.raises(RangeError):
            predicted_envelope_exponent(0.3)


class TestNonvanishing:
    def test_q5_single_product(self, data5, form):
        rep = nonvanishing_scan(5, 0.5, form, data=data5)
        assert len(rep.products) == 1
        assert rep.minimizer == rep.products[0][0]
        assert rep.min_modulus == rep.products[0][1]

    def test_q13_flags_nonvanishing(self, form):
        rep = nonvanishing_scan(13, 0.5, form)
        assert rep.any_nonvanishing
        assert rep.min_modulus > rep.threshold

    def test_corollary_regime_note(self, data5, form):
        rep = nonvanishing_scan(5, 0.5, form, data=data5)
        assert rep.corollary_threshold == pytest.approx(3.0 ** (543 / 25), rel=1e-12)
        assert "unreachable" in rep.corollary_note
        d = rep.as_dict()
        assert d["q"] == 5 and d["any_nonvanishing"] is True
