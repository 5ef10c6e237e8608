"""Command-line surface: verification suites, moment/fit/nonvanish drivers,
the Voronoi validator, and fixture fetching.

Exit codes: 0 success, 1 numeric or validation failure, 2 usage/config error,
3 I/O or network error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .charsums import (
    CharacterTable,
    NotPrimeError,
    even_primitive_indices,
    gauss_product_identity,
    gauss_square_identity,
    gauss_sum,
    gauss_twisted_sum,
    inverse_twisted_sum,
    is_prime,
    orthogonality_sum,
)
from .levaluator import (
    ConvergenceError,
    SmoothingScaleError,
    l_chi_afe,
    l_chi_hurwitz,
    l_f,
    l_twisted_afe,
    l_twisted_smoothed,
    twisted_afe_data,
    verify_voronoi,
)
from .maassdata import (
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
)
from .moments import (
    DEFAULT_PRIME_GRID,
    FitDegeneracyError,
    IdentityGapError,
    exponent_fit,
    moment_report,
    nonvanishing_scan,
)
from .store import INDEX_COLUMNS, ReportStore, StoreError
from .weights import RangeError, TailToleranceError, weight_v, weight_w

VORONOI_PANEL = ((1, 1, 50), (2, 1, 50), (3, 1, 50), (1, 1, 200), (2, 1, 200), (3, 2, 200))
VORONOI_GAP_TOL = 1e-4


def _load_form_arg(args) -> MaassForm:
    if getattr(args, "form", None):
        return load_form(args.form)
    return load_bundled()


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------


def _checks_char_sums() -> list[tuple[str, str]]:
    out = []
    rng = np.random.default_rng(7)
    for q in (7, 29, 101):
        table = CharacterTable(q)
        worst = 0.0
        for _ in range(20):
            m = int(rng.integers(1, q))
            n = int(rng.integers(1, q))
            for fn in (orthogonality_sum, gauss_square_identity):
                d, c = fn(table, m, n)
                worst = max(worst, abs(d - c))
            for sign in (1, -1):
                for fn in (gauss_twisted_sum, inverse_twisted_sum):
                    d, c = fn(table, m, n, sign)
                    worst = max(worst, abs(d - c))
        if worst > 1e-9:
            raise AssertionError(f"character-sum identity gap {worst:.2e} > 1e-9 at q={q}")
        out.append((f"identities q={q}", f"worst gap {worst:.2e}"))
        gworst = 0.0
        for j in even_primitive_indices(table):
            chi = table.character(j)
            lhs, rhs = gauss_product_identity(chi)
            gworst = max(gworst, abs(lhs - rhs), abs(abs(gauss_sum(chi)) ** 2 - q))
        if gworst > 1e-10:
            raise AssertionError(f"Gauss-sum law gap {gworst:.2e} > 1e-10 at q={q}")
        out.append((f"gauss laws q={q}", f"worst gap {gworst:.2e}"))
    return out


def _checks_special() -> list[tuple[str, str]]:
    out = []
    v_small = complex(weight_v(0.5, 1e-6))
    if abs(v_small - 0.99811400731) > 1e-8:
        raise AssertionError(f"V(1e-6, 1/2) = {v_small}, expected 0.99811400731")
    out.append(("V small-x value", f"{v_small.real:.11f}"))
    v_large = abs(complex(weight_v(0.5, 100 * np.sqrt(3.0))))
    if v_large > 1e-5:
        raise AssertionError(f"|V(100 sqrt 3, 1/2)| = {v_large:.3e} > 1e-5")
    out.append(("V large-x decay", f"{v_large:.3e}"))
    w_large = abs(complex(weight_w(0.5, 1500.0, 9.533695261353)))
    if w_large > 1e-6:
        raise AssertionError(f"|W(1500, 1/2)| = {w_large:.3e} > 1e-6")
    out.append(("W large-x decay", f"{w_large:.3e}"))
    return out


def _checks_maass(form: MaassForm) -> list[tuple[str, str]]:
    out = []
    worst = validate_hecke(form)
    out.append(("hecke relations", f"worst violation {worst:.2e} (tol {form.hecke_tolerance:.0e})"))
    rep = ramanujan_report(form)
    out.append(("ramanujan report", f"max ratio {rep['max_ratio']:.3f} at n={rep['argmax_n']}"))
    prof = rankin_selberg_profile(form, [100, 1000, form.N])
    ratios = [r for _, r in prof]
    if not all(0.2 <= r <= 5.0 for r in ratios):
        raise AssertionError(f"Rankin-Selberg ratios escaped [0.2, 5]: {ratios}")
    out.append(("rankin-selberg", f"ratios {', '.join(f'{r:.3f}' for r in ratios)}"))
    wil = wilton_profile(form, [0.0, 0.1234, 0.5], [100, min(10000, form.N)])
    wmax = max(v for _, _, v in wil)
    if wmax > 10.0:
        raise AssertionError(f"Wilton profile {wmax:.2f} > 10")
    out.append(("wilton profile", f"max normalized sum {wmax:.3f}"))
    return out


def _checks_leval(form: MaassForm) -> list[tuple[str, str]]:
    out = []
    worst = 0.0
    for q in (5, 7):
        table = CharacterTable(q)
        chi = table.character(2)
        for s0 in (0.5, 0.6 + 1.0j):
            gap = abs(l_chi_afe(s0, chi).value - l_chi_hurwitz(s0, chi))
            worst = max(worst, gap)
    if worst > 1e-8:
        raise AssertionError(f"AFE vs Hurwitz gap {worst:.2e} > 1e-8")
    out.append(("dirichlet AFE vs hurwitz", f"worst gap {worst:.2e}"))
    table = CharacterTable(5)
    chi = table.character(2)
    data = twisted_afe_data(0.95, 5, form, clamp=True)
    afe = l_twisted_afe(0.95, form, chi, data=data).value
    ladder = l_twisted_smoothed(0.95, form, chi, X=form.N / 12.0)
    gap = abs(afe - ladder)
    if gap > 1e-5:
        raise AssertionError(f"twisted AFE vs smoothed ladder gap {gap:.2e} > 1e-5")
    out.append(("twisted AFE vs ladder", f"gap {gap:.2e}"))
    lf = l_f(1.0, form)
    if abs(lf.value - 2.412718239) > 1e-6:
        raise AssertionError(f"L(1, f) = {lf.value:.9f}, expected 2.412718239")
    out.append(("l_f(1) ladder", f"{lf.value:.9f} (err est {lf.error_estimate:.1e})"))
    return out


def _checks_voronoi(form: MaassForm) -> list[tuple[str, str]]:
    out = []
    for c, d, N in VORONOI_PANEL:
        _, _, gap = verify_voronoi(form, c, d, N)
        if gap > VORONOI_GAP_TOL:
            raise AssertionError(
                f"Voronoi gap {gap:.2e} > {VORONOI_GAP_TOL:.0e} at c={c}, d={d}, N={N}"
            )
        out.append((f"voronoi c={c} d={d} N={N}", f"gap {gap:.2e}"))
    return out


SUITES = ("char-sums", "special", "maass", "l-eval", "voronoi", "all")


def run_verify(args) -> int:
    suite = args.suite
    if suite not in SUITES:
        print(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return 2
    plan = [suite] if suite != "all" else ["char-sums", "special", "maass", "l-eval", "voronoi"]
    needs_form = {"maass", "l-eval", "voronoi"}
    form = _load_form_arg(args) if needs_form & set(plan) else None
    failures = 0
    for name in plan:
        try:
            if name == "char-sums":
                results = _checks_char_sums()
            elif name == "special":
                results = _checks_special()
            elif name == "maass":
                results = _checks_maass(form)
            elif name == "l-eval":
                results = _checks_leval(form)
            else:
                results = _checks_voronoi(form)
        except AssertionError as e:
            print(f"[FAIL] {name}: {e}")
            failures += 1
            continue
        for check, detail in results:
            print(f"[PASS] {name}/{check}: {detail}")
    if failures:
        print(f"{failures} suite(s) failed")
        return 1
    print("all checks passed")
    return 0


# ---------------------------------------------------------------------------
# Report-producing subcommands
# ---------------------------------------------------------------------------


def _emit(payload: dict, index_fields: dict, args, kind: str) -> None:
    if args.out:
        store = ReportStore(args.out)
        path = store.save(kind, payload, index_fields)
        print(f"report written to {path}")
        if getattr(args, "figure", False):
            fig_path = path.with_suffix(".png")
            _render_figure(kind, payload, fig_path)
            print(f"figure written to {fig_path}")
    elif getattr(args, "figure", False):
        raise RangeError("--figure requires --out")
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(",".join(INDEX_COLUMNS[3:]))
        print(",".join(str(index_fields.get(col, "")) for col in INDEX_COLUMNS[3:]))


def _render_figure(kind: str, payload: dict, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if kind == "fit":
        q = np.array(payload["q_list"], dtype=float)
        r = np.array(payload["residuals"], dtype=float)
        ax.loglog(q, r, "o", label="|residual|")
        slope, intercept = payload["slope"], payload["intercept"]
        ax.loglog(q, np.exp(intercept) * q ** slope, "-",
                  label=f"fit slope {slope:.3f}")
        env = payload["predicted_envelope"]
        ax.loglog(q, np.exp(intercept) * q ** env, "--",
                  label=f"envelope slope {env:.4f}")
        ax.set_xlabel("q")
        ax.set_ylabel("|residual|")
        ax.legend()
    else:
        labels = ["lhs", "S1", "S2", "S3", "S4", "main"]
        lhs = complex(*payload["lhs_direct"])
        s_terms = [complex(*s) for s in payload["s_terms"]]
        values = [abs(lhs)] + [abs(s) for s in s_terms] + [payload["main_term"]]
        ax.bar(labels, values)
        ax.set_yscale("log")
        ax.set_ylabel("magnitude")
        ax.set_title(f"q={payload['q']}, sigma0={payload['sigma0']}, t0={payload['t0']}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _require_prime_arg(q: int) -> None:
    if not is_prime(q) or q < 5:
        raise NotPrimeError(q)


def run_moment(args) -> int:
    _require_prime_arg(args.q)
    form = _load_form_arg(args)
    s0 = complex(args.sigma0, args.t0)
    report = moment_report(args.q, s0, form, tol_identity=args.tol_identity)
    payload = report.as_dict()
    print(f"q={report.q} s0={report.s0}")
    print(f"  lhs        = {report.lhs_direct}")
    print(f"  main term  = {report.main_term}")
    print(f"  residual   = {report.residual}")
    print(f"  identity gap {report.identity_gap:.3e} (tol {report.identity_tolerance:.1e})")
    _emit(payload, {
        "q": report.q,
        "sigma0": report.s0.real,
        "t0": report.s0.imag,
        "lhs_re": report.lhs_direct.real,
        "lhs_im": report.lhs_direct.imag,
        "main_term": report.main_term,
        "residual_re": report.residual.real,
        "residual_im": report.residual.imag,
        "identity_gap": report.identity_gap,
    }, args, "moment")
    return 0


def run_fit(args) -> int:
    if args.q_min > args.q_max:
        raise FitDegeneracyError(f"empty range [{args.q_min}, {args.q_max}]")
    grid = [q for q in DEFAULT_PRIME_GRID if args.q_min <= q <= args.q_max]
    if len(grid) < 4:
        raise FitDegeneracyError(
            f"range [{args.q_min}, {args.q_max}] holds {len(grid)} primes of the "
            f"default grid; at least 4 are required"
        )
    form = _load_form_arg(args)
    s0 = complex(args.sigma0, args.t0)
    fit = exponent_fit(grid, s0, form, threads=args.threads,
                       tol_identity=args.tol_identity)
    payload = fit.as_dict()
    payload["sigma0"] = args.sigma0
    payload["t0"] = args.t0
    payload["threads"] = args.threads
    print(f"fit over q in {list(fit.q_list)} at s0={s0}")
    print(f"  slope    = {fit.slope:.4f} +- {fit.stderr:.4f}")
    print(f"  envelope = {fit.predicted_envelope:.4f} (epsilon terms treated as 0)")
    _emit(payload, {
        "q": f"{grid[0]}..{grid[-1]}",
        "sigma0": args.sigma0,
        "t0": args.t0,
        "slope": fit.slope,
    }, args, "fit")
    return 0


def run_voronoi(args) -> int:
    form = _load_form_arg(args)
    worst = 0.0
    rows = []
    for c, d, N in VORONOI_PANEL:
        lhs, rhs, gap = verify_voronoi(form, c, d, N)
        worst = max(worst, gap)
        rows.append({"c": c, "d": d, "N": N, "gap": gap})
        print(f"c={c} d={d} N={N}: lhs={lhs:.8f} rhs={rhs:.8f} gap={gap:.2e}")
    payload = {"panel": rows, "worst_gap": worst, "tolerance": VORONOI_GAP_TOL}
    if args.out:
        store = ReportStore(args.out)
        path = store.save("voronoi", payload, {"identity_gap": worst})
        print(f"report written to {path}")
    if worst > VORONOI_GAP_TOL:
        print(f"worst gap {worst:.2e} exceeds {VORONOI_GAP_TOL:.0e}", file=sys.stderr)
        return 1
    print(f"worst gap {worst:.2e} within {VORONOI_GAP_TOL:.0e}")
    return 0


def run_nonvanish(args) -> int:
    _require_prime_arg(args.q)
    form = _load_form_arg(args)
    s0 = complex(args.sigma0, args.t0)
    report = nonvanishing_scan(args.q, s0, form)
    payload = report.as_dict()
    print(f"q={report.q} s0={report.s0}: {len(report.products)} even primitive characters")
    for j, v in report.products:
        mark = " (minimizer)" if j == report.minimizer else ""
        print(f"  chi_{j}: |product| = {v:.6e}{mark}")
    print(f"  nonvanishing threshold {report.threshold:.3e}; "
          f"any nonvanishing: {report.any_nonvanishing}")
    print(f"  corollary threshold tau^M = {report.corollary_threshold:.3e} "
          f"({report.corollary_note})")
    _emit(payload, {
        "q": report.q,
        "sigma0": report.s0.real,
        "t0": report.s0.imag,
    }, args, "nonvanish")
    return 0


def run_fetch(args) -> int:
    out_path = Path(args.out) if args.out else Path(f"{args.label}.txt")
    try:
        text = fetch_remote(args.label, args.depth)
    except RemoteError as e:
        if "offline" in str(e):
            bundled = bundled_fixture_path()
            form = load_form(bundled, validate=False)
            if args.depth > form.N:
                print(f"offline fallback has only {form.N} coefficients, "
                      f"{args.depth} requested", file=sys.stderr)
                return 3
            print(f"offline mode: falling back to bundled fixture {bundled.name}")
            lines = bundled.read_text().splitlines()
            header = [ln for ln in lines if "=" in ln or ln.startswith("#")]
            records = [ln for ln in lines if "," in ln and "=" not in ln]
            out_path.write_text("\n".join(header + records[:args.depth]) + "\n")
            print(f"fixture written to {out_path}")
            return 0
        raise
    out_path.write_text(text)
    load_form(out_path)  # round-trip validation before declaring success
    print(f"fixture written to {out_path}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing and exit-code mapping
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, with_point=True) -> None:
    parser.add_argument("--form", help="path to a coefficient fixture (default: bundled)")
    if with_point:
        parser.add_argument("--sigma0", type=float, default=0.5)
        parser.add_argument("--t0", type=float, default=0.0)
    parser.add_argument("--out", help="report store directory")
    parser.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moment-forge",
        description="First-moment computations for Maass-form L-functions "
                    "twisted by Dirichlet characters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--form")
    p.set_defaults(func=run_verify)

    p = sub.add_parser("moment", help="compute one moment report")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--tol-identity", type=float, default=None)
    p.add_argument("--figure", action="store_true",
                   help="render a PNG next to the stored report")
    _add_common(p)
    p.set_defaults(func=run_moment)

    p = sub.add_parser("fit", help="fit residual growth over a prime range")
    p.add_argument("--q-min", type=int, default=DEFAULT_PRIME_GRID[0])
    p.add_argument("--q-max", type=int, default=DEFAULT_PRIME_GRID[-1])
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--tol-identity", type=float, default=None)
    p.add_argument("--figure", action="store_true",
                   help="render a PNG next to the stored report")
    _add_common(p)
    p.set_defaults(func=run_fit)

    p = sub.add_parser("voronoi", help="run the Voronoi-identity panel")
    p.add_argument("--form")
    p.add_argument("--out")
    p.set_defaults(func=run_voronoi)

    p = sub.add_parser("nonvanish", help="per-character nonvanishing scan")
    p.add_argument("--q", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=run_nonvanish)

    p = sub.add_parser("fetch", help="fetch a coefficient fixture")
    p.add_argument("--label", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=run_fetch)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (NotPrimeError, RangeError, FitDegeneracyError, SmoothingScaleError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (IdentityGapError, HeckeValidationError, FixtureFormatError, DepthError,
            TailToleranceError, ConvergenceError, ArithmeticError) as e:
        print(f"validation failure: {e}", file=sys.stderr)
        return 1
    except (RemoteError, StoreError, FileNotFoundError, OSError) as e:
        print(f"I/O or network error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
