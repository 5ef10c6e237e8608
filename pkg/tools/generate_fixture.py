"""Generate bundled Hecke-Maass coefficient fixtures by Hejhal's algorithm.

Produces λ_f(n) for the first even (R ≈ 13.7797513519) and first odd
(R ≈ 9.5336952614) level-1 Maass cusp forms, to depth N with a measured
precision estimate, and writes them in the package fixture grammar.

Method:
  Phase 1 (collocation): sample f on a horocycle Im z = Y below the
  fundamental domain, pull each point back into the fundamental domain, and
  impose automorphy f(z) = f(z*).  With the cos/sin Fourier expansion
  truncated at M0 this yields a homogeneous linear system; normalize c_1 = 1
  and solve by least squares.  The literature value of R is refined by
  minimizing the disagreement between two independent horocycles.

  Phase 2 (dyadic extension): for each block (N1, 2N1], sample on a deep
  horocycle Y2 chosen so the block's K-Bessel arguments stay in the
  oscillatory sweet spot, evaluate f at the pullbacks from the already-known
  low coefficients (pullbacks always have y* >= sqrt(3)/2, so only ~12 terms
  contribute), and read the block coefficients off a length-8N1 FFT.  Two
  shells with different Y2 give an independent value for every n; the larger
  |K-Bessel| denominator wins and the disagreement is the error estimate.

Run:  python3 tools/generate_fixture.py --out src/moment_forge/data
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from kbessel import KBessel

R_EVEN_SEED = 13.77975135189074
R_ODD_SEED = 9.53369526135355

SQ3_2 = np.sqrt(3.0) / 2.0


def pullback(x, y):
    """Map points x+iy into the standard fundamental domain of PSL(2,Z)."""
    x = np.array(x, dtype=np.float64)
    y = np.array(y, dtype=np.float64)
    for _ in range(200):
        x -= np.round(x)
        r2 = x * x + y * y
        inside = r2 < 1.0 - 1e-15
        if not np.any(inside):
            return x, y
        x[inside] = -x[inside] / r2[inside]
        y[inside] = y[inside] / r2[inside]
    raise RuntimeError("pullback failed to converge")


def _fourier_term(kb, c, m, ystar, xstar, parity):
    wave = np.cos if parity == "even" else np.sin
    return c * np.sqrt(ystar) * kb(2.0 * np.pi * m * ystar) * wave(2.0 * np.pi * m * xstar)


def phase1_matrix(kb, R, Y, Q2, M0, parity):
    """Rows n=1..M0 of the automorphy collocation system A c = 0."""
    j = np.arange(Q2)
    x = (j + 0.5) / Q2 - 0.5
    xs, ys = pullback(x, np.full(Q2, Y))
    wave = np.cos if parity == "even" else np.sin
    A = np.zeros((M0, M0))
    for m in range(1, M0 + 1):
        fm = np.sqrt(ys) * kb(2.0 * np.pi * m * ys) * wave(2.0 * np.pi * m * xs)
        for n in range(1, M0 + 1):
            A[n - 1, m - 1] = np.dot(fm, wave(2.0 * np.pi * n * x)) * (2.0 / Q2)
        A[m - 1, m - 1] -= np.sqrt(Y) * kb(2.0 * np.pi * m * Y)
    return A


def phase1_solve(kb, R, Y, Q2, M0, parity):
    A = phase1_matrix(kb, R, Y, Q2, M0, parity)
    rhs = -A[:, 0]
    sol, *_ = np.linalg.lstsq(A[:, 1:], rhs, rcond=None)
    return np.concatenate([[1.0], sol])


def phase1(R_seed, parity, M0=32, refine=True):
    Ya, Yb = 0.22, 0.30
    Q2 = 160

    def disagreement(R):
        kb = KBessel(R)
        ca = phase1_solve(kb, R, Ya, Q2, M0, parity)
        cb = phase1_solve(kb, R, Yb, Q2, M0, parity)
        return float(np.sum(np.abs(ca[:12] - cb[:12])))

    R = R_seed
    if refine:
        # golden-section around the seed, keeping the best point evaluated:
        # the disagreement has a ~1e-9 collocation noise floor, so a blind
        # optimizer can drift; the seed itself must stay in the candidate set
        evaluated = {R_seed: disagreement(R_seed)}
        lo, hi = R_seed - 3e-9, R_seed + 3e-9
        invphi = (np.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c1, c2 = b - invphi * (b - a), a + invphi * (b - a)
        f1, f2 = disagreement(c1), disagreement(c2)
        evaluated[c1], evaluated[c2] = f1, f2
        for _ in range(18):
            if f1 < f2:
                b, c2, f2 = c2, c1, f1
                c1 = b - invphi * (b - a)
                f1 = disagreement(c1)
                evaluated[c1] = f1
            else:
                a, c1, f1 = c1, c2, f2
                c2 = a + invphi * (b - a)
                f2 = disagreement(c2)
                evaluated[c2] = f2
        R = min(evaluated, key=evaluated.get)
    err = disagreement(R)
    kb = KBessel(R)
    c = 0.5 * (phase1_solve(kb, R, Ya, Q2, M0, parity)
               + phase1_solve(kb, R, Yb, Q2, M0, parity))
    return R, c, err


def block_coefficients(kb, R, c_low, n_lo, n_hi, u_hi, parity):
    """lambda(n) for n in (n_lo, n_hi] from one horocycle shell."""
    Y2 = u_hi / (2.0 * np.pi * n_hi)
    Q2 = 8 * n_hi
    j = np.arange(Q2)
    x = (j + 0.5) / Q2 - 0.5
    xs, ys = pullback(x, np.full(Q2, Y2))
    m_max = int((R + 45.0) / (2.0 * np.pi * SQ3_2)) + 1
    f = np.zeros(Q2)
    for m in range(1, m_max + 1):
        f += _fourier_term(kb, c_low[m - 1], m, ys, xs, parity)
    # c~_n = (2/Q2) sum_j f_j cos(2 pi n x_j)  via FFT over the offset grid
    F = np.fft.fft(f)
    n = np.arange(n_lo + 1, n_hi + 1)
    phase = (-1.0) ** n * np.exp(-1j * np.pi * n / Q2)
    S = phase * F[n]
    ctilde = (2.0 / Q2) * (S.real if parity == "even" else -S.imag)
    denom = np.sqrt(Y2) * kb(2.0 * np.pi * n * Y2)
    return ctilde / denom, np.abs(denom)


def extend(kb, R, c_phase1, N, parity, shells=(9.0, 7.0)):
    lam = np.zeros(N + 1)
    lam[1:c_phase1.size + 1] = c_phase1
    have = c_phase1.size
    err_max = 0.0
    n_lo = 12
    lam_out = lam.copy()
    while n_lo < N:
        n_hi = min(2 * n_lo, N)
        vals, dens = [], []
        for u_hi in shells:
            v, d = block_coefficients(kb, R, lam[1:30], n_lo, n_hi, u_hi, parity)
            vals.append(v)
            dens.append(d)
        pick = dens[0] >= dens[1]
        best = np.where(pick, vals[0], vals[1])
        gap = np.max(np.abs(vals[0] - vals[1]))
        print(f"    block ({n_lo},{n_hi}]: shell gap {gap:.2e}")
        err_max = max(err_max, gap)
        lam_out[n_lo + 1:n_hi + 1] = best
        n_lo = n_hi
    return lam_out, err_max


def hecke_violation(lam, N, samples=4000, seed=3):
    """max |lambda(m)lambda(n) - sum_{d | (m,n)} lambda(mn/d^2)| over samples."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        m = int(rng.integers(2, int(np.sqrt(N)) + 1))
        n = int(rng.integers(2, N // m + 1))
        g = np.gcd(m, n)
        rhs = sum(lam[m * n // (d * d)] for d in range(1, g + 1) if g % d == 0)
        worst = max(worst, abs(lam[m] * lam[n] - rhs))
    return worst


def write_fixture(path, R, lam, N, parity, precision_digits, source):
    lines = [
        "# Hecke-Maass cusp form coefficient fixture",
        f"spectral_parameter = {R:.12f}",
        f"precision_digits = {precision_digits}",
        f"source = {source}",
        f"parity = {parity}",
    ]
    for n in range(1, N + 1):
        lines.append(f"{n},{lam[n]:.12f}")
    Path(path).write_text("\n".join(lines) + "\n")


def build(R_seed, parity, N, out_dir, name):
    t0 = time.time()
    R, c, p1_err = phase1(R_seed, parity)
    print(f"[{name}] phase1: R = {R:.12f} (seed {R_seed}), "
          f"two-horocycle disagreement {p1_err:.2e}")
    kb = KBessel(R)
    lam, shell_gap = extend(kb, R, c, N, parity)
    print(f"[{name}] phase2: N = {N}, max shell disagreement {shell_gap:.2e}")
    hv = hecke_violation(lam, N)
    print(f"[{name}] Hecke violation (sampled): {hv:.2e}")
    digits = max(4, int(-np.log10(max(hv, shell_gap, 1e-13))) )
    path = Path(out_dir) / f"maass_{parity}_{R:.6f}.txt"
    write_fixture(path, R, lam, N, parity, digits,
                  f"hejhal-collocation-v1 (two-shell, {time.strftime('%Y-%m-%d')})")
    print(f"[{name}] wrote {path} ({time.time() - t0:.1f}s, precision_digits={digits})")
    return path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="src/moment_forge/data")
    ap.add_argument("--n-even", type=int, default=50000)
    ap.add_argument("--n-odd", type=int, default=2000)
    args = ap.parse_args()
    Path(args.out).mkdir(parents=True, exist_ok=True)
    build(R_EVEN_SEED, "even", args.n_even, args.out, "even form")
    build(R_ODD_SEED, "odd", args.n_odd, args.out, "odd form")


if __name__ == "__main__":
    main()
