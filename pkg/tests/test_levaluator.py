import math

import numpy as np
import pytest

from moment_forge.charsums import CharacterDomainError, CharacterTable
from moment_forge.levaluator import (
    AFEResult,
    ConvergenceError,
    SmoothingScaleError,
    dirichlet_afe_data,
    l_chi_afe,
    l_chi_hurwitz,
    l_f,
    l_twisted_afe,
    l_twisted_smoothed,
    twisted_afe_data,
    verify_voronoi,
)
from moment_forge.maassdata import DepthError, MaassForm, load_bundled
from moment_forge.weights import EvaluationPoint, RangeError


@pytest.fixture(scope="module")
def form():
    return load_bundled()


@pytest.fixture(scope="module")
def chi5():
    return CharacterTable(5).character(2)  # the quadratic character mod 5


@pytest.fixture(scope="module")
def table7():
    return CharacterTable(7)


class TestDirichletAFE:
    def test_matches_hurwitz_q5_critical(self, chi5):
        res = l_chi_afe(0.5, chi5)
        assert abs(res.value - l_chi_hurwitz(0.5, chi5)) < 1e-8

    def test_matches_hurwitz_q7_complex_point(self, table7):
        s0 = 0.75 + 2.0j
        for j in (2, 4):
            chi = table7.character(j)
            gap = abs(l_chi_afe(s0, chi).value - l_chi_hurwitz(s0, chi))
            assert gap < 1e-8

    def test_conjugation_reflection(self, table7):
        s0 = EvaluationPoint(0.6, 1.0)
        chi = table7.character(2)
        lhs = l_chi_afe(s0.conjugate, chi.conjugate).value
        rhs = np.conj(l_chi_afe(s0, chi).value)
        assert abs(lhs - rhs) < 1e-12

    def test_result_shape(self, chi5):
        res = l_chi_afe(0.5, chi5, tail_tol=1e-10)
        assert isinstance(res, AFEResult)
        assert res.first_sum_terms >= 1 and res.second_sum_terms >= 1
        assert 0 < res.truncation_bound < 1e-8

    def test_rejects_principal_and_odd(self, table7):
        with pytest.raises(CharacterDomainError):
            l_chi_afe(0.5, table7.character(0))
        with pytest.raises(CharacterDomainError):
            l_chi_afe(0.5, table7.character(1))

    def test_shared_data_reuse(self, table7):
        data = dirichlet_afe_data(0.5, 7)
        for j in (2, 4):
            chi = table7.character(j)
            a = l_chi_afe(0.5, chi, data=data).value
            b = l_chi_afe(0.5, chi).value
            assert abs(a - b) < 1e-14

    def test_extended_range_against_hurwitz(self, chi5):
        s0 = EvaluationPoint(1.05, 0.0, extended_range=True)
        gap = abs(l_chi_afe(s0, chi5).value - l_chi_hurwitz(s0, chi5))
        assert gap < 1e-8


class TestHurwitzOracle:
    def test_direct_series_s2_quadratic_mod5(self, chi5):
        n = np.arange(1, 400001)
        direct = complex(np.sum(chi5(n) / n.astype(np.float64) ** 2))
        assert abs(l_chi_hurwitz(2.0, chi5) - direct) < 1e-10

    def test_direct_series_s2_odd_mod7(self, table7):
        chi = table7.character(1)
        n = np.arange(1, 400001)
        direct = complex(np.sum(chi(n) / n.astype(np.float64) ** 2))
        assert abs(l_chi_hurwitz(2.0, chi) - direct) < 1e-10

    def test_conjugate_pattern(self, table7):
        chi = table7.character(2)
        s = 0.5 + 1.3j
        assert abs(l_chi_hurwitz(np.conj(s), chi.conjugate)
                   - np.conj(l_chi_hurwitz(s, chi))) < 1e-12

    def test_rejects_principal(self, table7):
        with pytest.raises(CharacterDomainError):
            l_chi_hurwitz(2.0, table7.character(0))


class TestTwistedAFE:
    def test_matches_smoothed_oracle(self, form, chi5):
        data = twisted_afe_data(0.95, 5, form, clamp=True)
        afe = l_twisted_afe(0.95, form, chi5, data=data).value
        oracle = l_twisted_smoothed(0.95, form, chi5, X=form.N / 12.0)
        assert abs(afe - oracle) < 1e-4

    def test_conjugation_reflection(self, form, chi5):
        s0 = EvaluationPoint(0.75, 0.5)
        a = l_twisted_afe(s0.conjugate, form, chi5.conjugate, clamp=True).value
        b = np.conj(l_twisted_afe(s0, form, chi5, clamp=True).value)
        assert abs(a - b) < 1e-10

    def test_cutoff_multiplier_stability(self, form, chi5):
        base = twisted_afe_data(0.5, 5, form, clamp=True)
        bigger = twisted_afe_data(0.5, 5, form, multiplier=1.1, clamp=True)
        assert bigger.first_coeffs.size > base.first_coeffs.size
        a = l_twisted_afe(0.5, form, chi5, data=base).value
        b = l_twisted_afe(0.5, form, chi5, data=bigger).value
        assert abs(a - b) < 1e-8

    def test_depth_error_names_requirement(self, form, chi5):
        with pytest.raises(DepthError) as e:
            l_twisted_afe(0.95, form, chi5, tail_tol=1e-8, clamp=False)
        assert "n=" in str(e.value)

    def test_clamped_records_honest_bound(self, form):
        data = twisted_afe_data(0.95, 5, form, tail_tol=1e-8, clamp=True)
        assert data.clamped
        assert data.first_coeffs.size <= form.N
        assert data.truncation_bound > 1e-8  # the clamp cannot certify 1e-8

    def test_rejects_odd_character(self, form, table7):
        with pytest.raises(CharacterDomainError):
            l_twisted_afe(0.5, form, table7.character(1))


class TestSmoothedLadder:
    def test_matches_direct_series_s2(self, form, chi5):
        n = np.arange(1, form.N + 1, dtype=np.float64)
        direct = complex(np.dot(form.coefficients[1:] * chi5(np.arange(1, form.N + 1)),
                                n ** -2.0))
        val = l_twisted_smoothed(2.0, form, chi5, X=form.N / 12.0)
        assert abs(val - direct) < 1e-9

    def test_differences_monotone_near_one(self, form, chi5):
        # absence of ConvergenceError is the monotonicity assertion
        l_twisted_smoothed(0.95, form, chi5, X=4000.0)

    def test_rejects_large_x(self, form, chi5):
        with pytest.raises(SmoothingScaleError):
            l_twisted_smoothed(1.0, form, chi5, X=form.N)

    def test_rejects_nonpositive_x(self, form, chi5):
        with pytest.raises(SmoothingScaleError):
            l_twisted_smoothed(1.0, form, chi5, X=0.0)

    def test_rejects_small_sigma(self, form, chi5):
        with pytest.raises(RangeError):
            l_twisted_smoothed(0.6, form, chi5, X=1000.0)

    def test_preasymptotic_x_detected(self, form, chi5):
        with pytest.raises(ConvergenceError):
            l_twisted_smoothed(0.95, form, chi5, X=100.0, rungs=6)


class TestLf:
    def test_s18_certified(self, form):
        res = l_f(1.8, form)
        assert res.error_estimate <= 1e-6
        n = np.arange(1, form.N + 1, dtype=np.float64)
        direct = float(np.dot(form.coefficients[1:], n ** -1.8))
        assert abs(res.value - direct) < 1e-3  # raw tail of the direct series

    def test_s1_stable_across_rungs(self, form):
        a = l_f(1.0, form, rungs=6).value
        b = l_f(1.0, form, rungs=5).value
        assert abs(a - b) < 1e-5

    def test_half_depth_stability(self, form):
        half = MaassForm(
            spectral_parameter=form.spectral_parameter,
            coefficients=form.coefficients[: form.N // 2 + 1],
            N=form.N // 2,
            source=form.source,
            stated_precision=form.stated_precision,
            parity=form.parity,
        )
        assert abs(l_f(1.5, form).value - l_f(1.5, half).value) < 1e-4

    def test_rejects_s_below_one(self, form):
        with pytest.raises(RangeError):
            l_f(0.9, form)

    def test_float_conversion(self, form):
        assert float(l_f(2.0, form)) == l_f(2.0, form).value


class TestVoronoi:
    def test_untwisted_gap(self, form):
        _, _, gap = verify_voronoi(form, 1, 1, 50)
        assert gap <= 1e-4

    def test_twist_changes_lhs(self, form):
        lhs1, _, gap1 = verify_voronoi(form, 3, 1, 50)
        lhs2, _, gap2 = verify_voronoi(form, 3, 2, 50)
        assert abs(lhs1 - lhs2) > 1e-3
        assert gap1 <= 1e-4 and gap2 <= 1e-4

    def test_conjugate_residues(self, form):
        lhs1, rhs1, _ = verify_voronoi(form, 3, 1, 50)
        lhs2, rhs2, _ = verify_voronoi(form, 3, 2, 50)
        assert abs(lhs1 - np.conj(lhs2)) < 1e-12
        assert abs(rhs1 - np.conj(rhs2)) < 1e-6

    def test_rejects_noncoprime(self, form):
        with pytest.raises(ValueError):
            verify_voronoi(form, 4, 2, 50)

    def test_depth_guard(self, form):
        with pytest.raises(DepthError):
            verify_voronoi(form, 1, 1, form.N)
