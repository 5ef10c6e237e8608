import numpy as np
import pytest

from moment_forge.maassdata import (
    DepthError,
    FixtureFormatError,
    HeckeValidationError,
    MaassForm,
    RemoteError,
    bundled_fixture_path,
    fetch_remote,
    load_bundled,
    load_form,
    ramanujan_report,
    rankin_selberg_profile,
    validate_hecke,
    wilton_profile,
    write_form,
)


@pytest.fixture(scope="module")
def even_form():
    return load_bundled()


@pytest.fixture(scope="module")
def odd_form():
    return load_bundled("maass_odd_9.533695.txt")


class TestLoad:
    def test_bundled_even_form(self, even_form):
        assert even_form.coefficients[1] == 1.0
        assert abs(even_form.spectral_parameter - 13.779751351892) < 1e-9
        assert even_form.N >= 1000
        assert even_form.parity == "even"
        assert even_form.stated_precision >= 4

    def test_bundled_odd_form(self, odd_form):
        # the classic R ~ 9.5337 form; it is odd, recorded as such
        assert abs(odd_form.spectral_parameter - 9.5336952614) < 1e-9
        assert odd_form.parity == "odd"
        assert odd_form.N >= 1000

    def test_lambda_one_violation_rejected(self, tmp_path, even_form):
        p = tmp_path / "bad1.txt"
        text = bundled_fixture_path().read_text().replace("1,1.000000000000", "1,0.900000000000", 1)
        p.write_text(text)
        with pytest.raises(HeckeValidationError):
            load_form(p)

    def test_gap_detected(self, tmp_path):
        p = tmp_path / "gap.txt"
        lines = bundled_fixture_path().read_text().splitlines()
        del lines[9]  # record n=5 (after 4 header lines and 1 comment)
        p.write_text("\n".join(lines))
        with pytest.raises(FixtureFormatError) as e:
            load_form(p)
        assert "n=5" in str(e.value)

    def test_perturbed_coefficient_fails_hecke(self, tmp_path, even_form):
        p = tmp_path / "pert.txt"
        lam6 = even_form.coefficients[6]
        old = f"6,{even_form.raw_values[5]}"
        new = f"6,{lam6 + 1e-2:.12f}"
        p.write_text(bundled_fixture_path().read_text().replace(old, new, 1))
        with pytest.raises(HeckeValidationError):
            load_form(p)

    def test_missing_header_key(self, tmp_path):
        p = tmp_path / "nohead.txt"
        p.write_text("spectral_parameter = 9.5\nprecision_digits = 8\n1,1.0\n")
        with pytest.raises(FixtureFormatError) as e:
            load_form(p)
        assert "source" in str(e.value)

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_form("/nonexistent/fixture.txt")


class TestHecke:
    def test_validation_passes_with_margin(self, even_form):
        worst = validate_hecke(even_form)
        assert worst < even_form.hecke_tolerance

    def test_multiplicativity_coprime(self, even_form):
        lam = even_form.coefficients
        rng = np.random.default_rng(2)
        tol = even_form.hecke_tolerance
        checked = 0
        while checked < 200:
            m = int(rng.integers(2, 200))
            n = int(rng.integers(2, even_form.N // m))
            if np.gcd(m, n) != 1:
                continue
            assert abs(lam[m] * lam[n] - lam[m * n]) < tol
            checked += 1

    def test_prime_power_recursion(self, even_form):
        lam = even_form.coefficients
        tol = even_form.hecke_tolerance
        for p in (2, 3, 5, 7, 11, 13):
            k = 1
            while p ** (k + 1) <= even_form.N:
                lhs = lam[p] * lam[p ** k]
                rhs = lam[p ** (k + 1)] + lam[p ** (k - 1)]
                assert abs(lhs - rhs) < tol
                k += 1

    def test_ramanujan_reported_not_enforced(self, even_form):
        rep = ramanujan_report(even_form)
        assert rep["max_ratio"] > 0
        assert "exceed_count" in rep


class TestRoundTrip:
    def test_bit_exact(self, tmp_path, even_form):
        p = tmp_path / "copy.txt"
        write_form(even_form, p)
        again = load_form(p)
        assert again.raw_values == even_form.raw_values
        assert np.array_equal(again.coefficients, even_form.coefficients)
        assert again.spectral_parameter == even_form.spectral_parameter
        p2 = tmp_path / "copy2.txt"
        write_form(again, p2)
        assert p.read_text() == p2.read_text()


class TestProfiles:
    def test_rankin_selberg_bounded(self, even_form):
        prof = rankin_selberg_profile(even_form, [10, 100, 1000, even_form.N])
        for _, ratio in prof:
            assert 0.1 < ratio < 5.0

    def test_rankin_selberg_empty(self, even_form):
        assert rankin_selberg_profile(even_form, []) == []

    def test_rankin_selberg_depth_guard(self, even_form):
        with pytest.raises(DepthError):
            rankin_selberg_profile(even_form, [even_form.N + 1])

    def test_wilton_bounded(self, even_form):
        prof = wilton_profile(even_form, [0.0, 0.5, 0.1234], [100, 1000, 10000])
        assert max(v for _, _, v in prof) < 10.0

    def test_wilton_single_term(self, even_form):
        prof = wilton_profile(even_form, [0.3], [1])
        assert abs(prof[0][2] - 1.0) < 1e-12


class TestDepth:
    def test_lam_depth_error_names_n(self, even_form):
        with pytest.raises(DepthError) as e:
            even_form.lam(even_form.N + 7)
        assert str(even_form.N + 7) in str(e.value)

    def test_require_depth(self, even_form):
        even_form.require_depth(10)
        with pytest.raises(DepthError):
            even_form.require_depth(10 ** 9, context="AFE cutoff")


class TestFetchRemote:
    def test_offline_mode(self, monkeypatch):
        monkeypatch.setenv("MOMENT_FORGE_OFFLINE", "1")
        with pytest.raises(RemoteError) as e:
            fetch_remote("13.77975", 100)
        assert "offline" in str(e.value)

    def test_rejects_zero_n(self):
        with pytest.raises(ValueError):
            fetch_remote("13.77975", 0)

    def test_stubbed_fetch_roundtrip(self, monkeypatch, tmp_path):
        import requests

        class FakeResponse:
            def raise_for_status(self):
                pass

            def json(self):
                return {
                    "spectral_parameter": 13.779751351892,
                    "precision_digits": 9,
                    "parity": "even",
                    "coefficients": [1.0, 1.549304477930, 0.246899772446],
                }

        monkeypatch.delenv("MOMENT_FORGE_OFFLINE", raising=False)
        monkeypatch.setattr(requests, "get", lambda *a, **k: FakeResponse())
        text = fetch_remote("test-label", 3)
        p = tmp_path / "remote.txt"
        p.write_text(text)
        form = load_form(p, validate=False)
        assert form.N == 3
        assert form.coefficients[2] == pytest.approx(1.549304477930)

    def test_stubbed_partial_data(self, monkeypatch):
        import requests

        class FakeResponse:
            def raise_for_status(self):
                pass

            def json(self):
                return {"spectral_parameter": 1.0, "coefficients": [1.0]}

        monkeypatch.delenv("MOMENT_FORGE_OFFLINE", raising=False)
        monkeypatch.setattr(requests, "get", lambda *a, **k: FakeResponse())
        with pytest.raises(RemoteError) as e:
            fetch_remote("test-label", 100)
        assert "1 coefficient" in str(e.value) or "100" in str(e.value)
