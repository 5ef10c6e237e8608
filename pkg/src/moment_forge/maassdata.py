"""Hecke-Maass form ingestion, validation, and coefficient diagnostics.

Fixture grammar (bit-exact round trip):
  header lines   key = value   for keys
                 {spectral_parameter, precision_digits, source, parity};
  then one record per line   n,value   with value a decimal string;
  lines starting with '#' are comments.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

DEFAULT_FORM = "maass_even_13.779751.txt"
ODD_FORM = "maass_odd_9.533695.txt"

_HEADER_KEYS = ("spectral_parameter", "precision_digits", "source", "parity")


class FixtureFormatError(ValueError):
    """Structural problem in a coefficient fixture (bad header, gaps, ...)."""


class HeckeValidationError(ValueError):
    """A Hecke relation fails beyond the fixture's stated precision."""


class DepthError(ValueError):
    """A computation needs more coefficients than the fixture provides."""


class RemoteError(RuntimeError):
    """Network fetch failed (offline mode, HTTP error, or bad payload)."""


@dataclass(frozen=True)
class MaassForm:
    spectral_parameter: float
    coefficients: np.ndarray  # lam[0] unused; lam[n] = lambda_f(n), n >= 1
    N: int
    source: str
    stated_precision: int
    parity: str
    raw_values: tuple = field(repr=False, default=())

    @property
    def hecke_tolerance(self) -> float:
        return 10.0 ** (-(self.stated_precision - 2))

    def lam(self, n):
        n_arr = np.asarray(n, dtype=np.int64)
        if np.any(n_arr < 1) or np.any(n_arr > self.N):
            bad = int(n_arr[(n_arr < 1) | (n_arr > self.N)].ravel()[0])
            raise DepthError(
                f"coefficient lambda({bad}) requested but fixture depth is N={self.N}"
            )
        out = self.coefficients[n_arr]
        if np.isscalar(n) or np.ndim(n) == 0:
            return float(out)
        return out

    def require_depth(self, n_needed: int, context: str = "") -> None:
        if n_needed > self.N:
            where = f" for {context}" if context else ""
            raise DepthError(
                f"need coefficients up to n={n_needed}{where}, fixture has N={self.N}"
            )


def _parse_fixture_text(text: str, origin: str):
    header: dict[str, str] = {}
    ns: list[int] = []
    raw: list[str] = []
    vals: list[float] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line:  # records are 'n,value' and never contain '='
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
            continue
        if "," not in line:
            raise FixtureFormatError(f"{origin}:{lineno}: expected 'n,value', got {line!r}")
        n_str, _, v_str = line.partition(",")
        try:
            n = int(n_str)
            v = float(v_str)
        except ValueError as e:
            raise FixtureFormatError(f"{origin}:{lineno}: unparseable record {line!r}") from e
        ns.append(n)
        raw.append(v_str.strip())
        vals.append(v)
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise FixtureFormatError(f"{origin}: missing header keys {missing}")
    if not ns:
        raise FixtureFormatError(f"{origin}: no coefficient records")
    for i, n in enumerate(ns, start=1):
        if n != i:
            raise FixtureFormatError(
                f"{origin}: coefficient index gap — expected n={i}, found n={n}"
            )
    return header, np.array(vals), tuple(raw)


def validate_hecke(form: MaassForm, max_pairs: int = 20000, seed: int = 11) -> float:
    """Check lambda(m)lambda(n) = sum_{d | (m,n)} lambda(mn/d^2) on all pairs
    with mn <= N (sampled beyond max_pairs); returns the worst violation."""
    lam = form.coefficients
    N = form.N
    tol = form.hecke_tolerance
    pairs = []
    m = 2
    while m * m <= N and len(pairs) < max_pairs:
        for n in range(m, N // m + 1):
            pairs.append((m, n))
            if len(pairs) >= max_pairs:
                break
        m += 1
    if len(pairs) >= max_pairs:
        rng = np.random.default_rng(seed)
        sqn = int(np.sqrt(N))
        extra = []
        while len(extra) < max_pairs // 4:
            mm = int(rng.integers(2, sqn + 1))
            nn = int(rng.integers(mm, N // mm + 1))
            extra.append((mm, nn))
        pairs = pairs[:max_pairs] + extra
    worst = 0.0
    worst_pair = (1, 1)
    for m, n in pairs:
        g = int(np.gcd(m, n))
        rhs = sum(lam[m * n // (d * d)] for d in range(1, g + 1) if g % d == 0)
        gap = abs(lam[m] * lam[n] - rhs)
        if gap > worst:
            worst, worst_pair = gap, (m, n)
    if abs(lam[1] - 1.0) > tol:
        raise HeckeValidationError(f"lambda(1) = {lam[1]}, expected 1")
    if worst > tol:
        raise HeckeValidationError(
            f"Hecke relation violated at (m,n)={worst_pair}: gap {worst:.3e} > tol {tol:.1e}"
        )
    return worst


def load_form(path, validate: bool = True) -> MaassForm:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"fixture not found: {p}")
    header, vals, raw = _parse_fixture_text(p.read_text(), str(p))
    coeffs = np.concatenate([[0.0], vals])
    form = MaassForm(
        spectral_parameter=float(header["spectral_parameter"]),
        coefficients=coeffs,
        N=len(vals),
        source=header["source"],
        stated_precision=int(header["precision_digits"]),
        parity=header["parity"],
        raw_values=raw,
    )
    if validate:
        validate_hecke(form)
    return form


def write_form(form: MaassForm, path) -> None:
    """Inverse of load_form; preserves original decimal strings bit-exactly."""
    lines = [
        f"spectral_parameter = {form.spectral_parameter:.12f}",
        f"precision_digits = {form.stated_precision}",
        f"source = {form.source}",
        f"parity = {form.parity}",
    ]
    if form.raw_values and len(form.raw_values) == form.N:
        values = form.raw_values
    else:
        values = [f"{v:.12f}" for v in form.coefficients[1:]]
    for n, v in enumerate(values, start=1):
        lines.append(f"{n},{v}")
    Path(path).write_text("\n".join(lines) + "\n")


def bundled_fixture_path(name: str = DEFAULT_FORM) -> Path:
    res = resources.files("moment_forge").joinpath("data", name)
    with resources.as_file(res) as p:
        return Path(p)


def load_bundled(name: str = DEFAULT_FORM, validate: bool = True) -> MaassForm:
    return load_form(bundled_fixture_path(name), validate=validate)


DEFAULT_REMOTE_ENDPOINT = "https://www.lmfdb.org/api/maass_rigor/?label={label}&_format=json"


def fetch_remote(label: str, N: int, endpoint: str = DEFAULT_REMOTE_ENDPOINT,
                 timeout: float = 30.0) -> str:
    """Fetch coefficients for a labeled form; returns fixture text.

    Honors MOMENT_FORGE_OFFLINE=1 by raising RemoteError with an explicit
    offline-fallback notice (callers then use the bundled fixtures).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if os.environ.get("MOMENT_FORGE_OFFLINE") == "1":
        raise RemoteError(
            "offline mode (MOMENT_FORGE_OFFLINE=1): falling back to bundled fixtures"
        )
    import requests

    try:
        resp = requests.get(endpoint.format(label=label), timeout=timeout)
        resp.raise_for_status()
        payload = resp.json()
    except requests.RequestException as e:
        raise RemoteError(f"network fetch failed for label {label!r}: {e}") from e
    except ValueError as e:
        raise RemoteError(f"malformed JSON payload for label {label!r}: {e}") from e
    try:
        record = payload["data"][0] if isinstance(payload.get("data"), list) else payload
        R = float(record["spectral_parameter"])
        coeffs = record["coefficients"]
        available = len(coeffs)
        if available < N:
            raise RemoteError(
                f"label {label!r} has {available} coefficients, {N} requested"
            )
        lines = [
            f"spectral_parameter = {R:.12f}",
            f"precision_digits = {int(record.get('precision_digits', 8))}",
            f"source = remote:{label}",
            f"parity = {record.get('parity', 'even')}",
        ]
        for n in range(1, N + 1):
            lines.append(f"{n},{float(coeffs[n - 1]):.12f}")
        return "\n".join(lines) + "\n"
    except (KeyError, TypeError, IndexError) as e:
        raise RemoteError(f"unexpected payload shape for label {label!r}: {e}") from e


def ramanujan_report(form: MaassForm, theta: float = 7.0 / 64.0) -> dict:
    """Reported-only check of |lambda(n)| <= d(n) n^theta (not enforced:
    fixtures carry finite precision and the bound is unproven pointwise)."""
    N = form.N
    d = np.zeros(N + 1)
    for k in range(1, N + 1):
        d[k::k] += 1.0
    n = np.arange(1, N + 1)
    ratio = np.abs(form.coefficients[1:]) / (d[1:] * n ** theta)
    worst = int(np.argmax(ratio)) + 1
    return {
        "max_ratio": float(np.max(ratio)),
        "argmax_n": worst,
        "exceed_count": int(np.sum(ratio > 1.0)),
    }


def rankin_selberg_profile(form: MaassForm, x_grid) -> list[tuple[float, float]]:
    """(x, sum_{n<=x} lambda(n)^2 / x) — Rankin-Selberg growth diagnostic."""
    out = []
    if len(x_grid) == 0:
        return out
    if max(x_grid) > form.N:
        raise DepthError(f"grid max {max(x_grid)} exceeds fixture depth {form.N}")
    lam2 = form.coefficients ** 2
    csum = np.cumsum(lam2)
    for x in x_grid:
        k = int(np.floor(x))
        out.append((float(x), float(csum[k] / x)))
    return out


def wilton_profile(form: MaassForm, alphas, N_grid) -> list[tuple[float, int, float]]:
    """(alpha, N, |sum_{n<=N} lambda(n) e(alpha n)| / N^0.6) diagnostic."""
    out = []
    if len(N_grid) == 0 or len(alphas) == 0:
        return out
    if max(N_grid) > form.N:
        raise DepthError(f"grid max {max(N_grid)} exceeds fixture depth {form.N}")
    n = np.arange(1, max(N_grid) + 1)
    lam = form.coefficients[1:max(N_grid) + 1]
    for alpha in alphas:
        terms = lam * np.exp(2j * np.pi * alpha * n)
        csum = np.cumsum(terms)
        for Ncut in N_grid:
            out.append((float(alpha), int(Ncut),
                        float(abs(csum[Ncut - 1]) / Ncut ** 0.6)))
    return out
