"""Command-line front end.

Every subcommand writes ``report.json`` (plus CSV data files) into the
output directory. Exit status is 0 whenever the run completes, whatever
the verdict, and 1 on operational errors such as unreadable or malformed
symbol files.
"""

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .carleson import vanishing_diagnostic
from .criteria import (
    SCHEMA_VERSION,
    VerdictConfig,
    aggregate_verdict,
    approach_paths,
    check_geometric,
)
from .fixtures import FIXTURE_NAMES, SpecError, fixture, load_symbol
from .kernels import Convention, kernel_ratio_trace
from .operator import assemble, compactness_evidence, singular_values
from .reinhardt import (
    ReinhardtDomain,
    UnitBall,
    classification_grid,
    converse_counterexample,
    hormander_exponent,
    kernel_monotonicity_check,
    monomial_norms,
    strong_point_avoidance_check,
    write_classification_csv,
)


def _clean(obj):
    """Make a report JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_report(out, command, body, args):
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "command": command,
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")},
        "result": body,
    }
    path = out / "report.json"
    path.write_text(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")
    return path


def _symbol(args):
    if args.symbol:
        return load_symbol(args.symbol)
    if args.fixture:
        return fixture(args.fixture)
    raise SpecError("give --fixture NAME or --symbol PATH")


def _ladder(text):
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if any(not 0 < v <= 1 for v in values):
        raise argparse.ArgumentTypeError("ladder values must lie in (0, 1]")
    return values


def _caps(degree_cap):
    return tuple(c for c in (degree_cap - 4, degree_cap - 2, degree_cap) if c >= 1)


def _write_traces(out, traces):
    with open(out / "kernel_ratio.csv", "w", newline="") as fh:
        fh.write("path,target,t,ratio,log_t,log_ratio,flag\n")
        for i, tr in enumerate(traces):
            target = " ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in tr.path.target)
            for row in tr.rows():
                fh.write(
                    f"{i},{target},{row['t']!r},{row['ratio']!r},{row['log_t']!r},"
                    f"{row['log_ratio']!r},{row['flag']}\n"
                )


def _write_carleson(out, tables):
    with open(out / "carleson.csv", "w", newline="") as fh:
        fh.write("sweep,fixed_r,r,theta,ratio,ci,flag\n")
        for tb in tables:
            for i, r in enumerate(tb.r):
                flag = "UNRELIABLE" if tb.unreliable[i] else ""
                for k, th in enumerate(tb.thetas):
                    fh.write(
                        f"{tb.sweep},{tb.fixed_r!r},{float(r)!r},{float(th)!r},"
                        f"{float(tb.cell_ratio[i, k])!r},{float(tb.cell_ci[i, k])!r},{flag}\n"
                    )


def _write_spectra(out, evidence):
    with open(out / "singular_values.csv", "w", newline="") as fh:
        fh.write("degree_cap,index,sigma\n")
        for D, s in zip(evidence.degree_caps, evidence.spectra):
            for i, v in enumerate(s):
                fh.write(f"{D},{i},{float(v)!r}\n")


def cmd_check(args):
    sym = _symbol(args)
    config = VerdictConfig(
        r_ladder=args.r_ladder,
        theta_grid=args.theta_grid,
        carleson_samples=args.samples,
        degree_caps=_caps(args.degree_cap),
        seed=args.seed,
    )
    verdict = aggregate_verdict(sym, config)
    _write_traces(args.out, verdict.traces)
    _write_carleson(args.out, verdict.carleson_tables)
    if verdict.spectral_evidence is not None:
        _write_spectra(args.out, verdict.spectral_evidence)
    write_report(args.out, "check", verdict.to_dict(), args)
    print(f"{sym.name}: {verdict.verdict.value} ({verdict.consistency})")


def cmd_carleson(args):
    sym = _symbol(args)
    table = vanishing_diagnostic(
        sym, args.r_ladder, args.theta_grid, args.samples, args.seed, args.sweep, args.fixed_r
    )
    _write_carleson(args.out, [table])
    write_report(args.out, "carleson", {"symbol_name": sym.name, **table.to_dict()}, args)
    print(f"{sym.name}: {table.trend().value}")


def cmd_kernel_ratio(args):
    sym = _symbol(args)
    traces = [kernel_ratio_trace(sym, p, Convention(args.convention))
              for p in approach_paths(sym.arity)]
    _write_traces(args.out, traces)
    body = {"symbol_name": sym.name, "convention": args.convention,
            "paths": [tr.to_dict() for tr in traces]}
    write_report(args.out, "kernel-ratio", body, args)
    verdicts = sorted({tr.verdict.value for tr in traces})
    print(f"{sym.name}: {', '.join(verdicts)}")


def cmd_operator(args):
    sym = _symbol(args)
    matrix = assemble(sym, args.degree_cap)
    with open(args.out / "operator_matrix.csv", "w", newline="") as fh:
        matrix.to_csv(fh)
    evidence = compactness_evidence(sym, _caps(args.degree_cap))
    _write_spectra(args.out, evidence)
    body = {
        "symbol_name": sym.name,
        "degree_cap": args.degree_cap,
        "dimension": matrix.shape[0],
        "quadrature": {"radial": matrix.quadrature.radial, "angular": matrix.quadrature.angular},
        "exact_quadrature": matrix.exact,
        "singular_values": singular_values(matrix),
        "evidence": evidence.to_dict(),
    }
    write_report(args.out, "operator", body, args)
    print(f"{sym.name}: {evidence.tail_trend.value}")


def cmd_geometry(args):
    sym = _symbol(args)
    report = check_geometric(sym)
    write_report(args.out, "geometry", {"symbol_name": sym.name, **report.to_dict()}, args)
    a, b = report.condition_a.holds, report.condition_b.holds
    print(f"{sym.name}: A {'holds' if a else 'fails'}, B {'holds' if b else 'fails'}")


def cmd_reinhardt(args):
    domain = ReinhardtDomain()
    table = monomial_norms(domain, args.table_size, args.table_size)
    with open(args.out / "monomial_norms.csv", "w", newline="") as fh:
        table.to_csv(fh)
    if args.check_converse_counterexample:
        result = converse_counterexample(domain, table, fixture("reinhardt_halfshift"))
        write_report(args.out, "reinhardt", {"converse_counterexample": result}, args)
        avoid = "PASS" if result["avoidance"]["avoids"] else "FAIL"
        one = "ratio = 1" if result["ratio_identically_one"] else "ratio != 1"
        print(f"avoidance {avoid}, {one}, verdict {result['verdict']}")
        return
    rows = classification_grid(domain, 200)
    with open(args.out / "classification.csv", "w", newline="") as fh:
        write_classification_csv(rows, fh)
    fit_table = monomial_norms(domain, args.fit_table_size, args.fit_table_size)
    t = domain.diagonal_point()
    slopes = {
        "strongly_pseudoconvex": hormander_exponent(domain, [t, t], fit_table).to_dict(),
        "weakly_pseudoconvex": hormander_exponent(domain, [0, 1], fit_table).to_dict(),
        "unit_ball": UnitBall().hormander_exponent([0.6, 0.8]).to_dict(),
    }
    body = {
        "table": {"size": args.table_size, "volume": table.volume,
                  "doubling_error": table.doubling_error},
        "fit_table_size": args.fit_table_size,
        "strongly_pseudoconvex_points": sum(r[3] == "STRONGLY_PSEUDOCONVEX" for r in rows),
        "boundary_points": len(rows),
        "hormander": slopes,
        "monotonicity": kernel_monotonicity_check(domain, table).to_dict(),
        "avoidance": {
            name: strong_point_avoidance_check(domain, fixture(name)).to_dict()
            for name in ("reinhardt_halfshift", "identity2d", "half2d")
        },
    }
    write_report(args.out, "reinhardt", body, args)
    print(f"strongly pseudoconvex slope {slopes['strongly_pseudoconvex']['slope']:.3f}, "
          f"weakly pseudoconvex slope {slopes['weakly_pseudoconvex']['slope']:.3f}")


def cmd_fixtures(args):
    for name in FIXTURE_NAMES:
        sym = fixture(name)
        print(f"{name}\tarity={sym.arity}\t{'polynomial' if sym.is_polynomial else 'non-polynomial'}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bergcomp",
        description="Compactness diagnostics for composition operators on Bergman spaces.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--fixture", choices=FIXTURE_NAMES, metavar="NAME",
                     help="built-in symbol (see `fixtures list`)")
    src.add_argument("--symbol", type=Path, metavar="PATH", help="JSON symbol spec")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=200_000,
                        help="Monte Carlo samples per radius level")
    common.add_argument("--degree-cap", type=int, default=8)
    common.add_argument("--r-ladder", type=_ladder, default=(0.8, 0.4, 0.2, 0.1))
    common.add_argument("--theta-grid", type=int, default=64)
    common.add_argument("--convention", choices=[c.value for c in Convention],
                        default=Convention.NORMALIZED.value)

    p = sub.add_parser("check", parents=[common], help="run every diagnostic and reconcile")
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("carleson", parents=[common], help="vanishing-Carleson table")
    p.add_argument("--sweep", choices=("first", "second", "both"), default="first")
    p.add_argument("--fixed-r", type=float, default=0.5)
    p.set_defaults(func=cmd_carleson)
    p = sub.add_parser("kernel-ratio", parents=[common], help="kernel ratios on radial paths")
    p.set_defaults(func=cmd_kernel_ratio)
    p = sub.add_parser("operator", parents=[common], help="finite sections and singular values")
    p.set_defaults(func=cmd_operator)
    p = sub.add_parser("geometry", parents=[common], help="geometric conditions on the bidisc")
    p.set_defaults(func=cmd_geometry)
    p = sub.add_parser("reinhardt", parents=[common], help="smooth Reinhardt domain checks")
    p.add_argument("--table-size", type=int, default=40)
    p.add_argument("--fit-table-size", type=int, default=400)
    p.add_argument("--check-converse-counterexample", action="store_true")
    p.set_defaults(func=cmd_reinhardt)
    p = sub.add_parser("fixtures", help="built-in symbols")
    p.add_argument("action", choices=("list",))
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "samples", 10_000) < 10_000:
        parser.error("--samples must be at least 10000")
    if getattr(args, "degree_cap", 8) < 3:
        parser.error("--degree-cap must be at least 3")
    try:
        if hasattr(args, "out"):
            args.out.mkdir(parents=True, exist_ok=True)
        args.func(args)
    except (SpecError, KeyError, OSError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"bergcomp: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
