"""Command-line driver: simulate, sweep, fit, bounds, validate.

Exit status 0 on success, 1 on usage or configuration errors, 2 when a
validation suite fails.
"""
from __future__ import annotations

import argparse
import csv
import io
import shlex
import sys
from pathlib import Path

from . import __version__
from . import construction as cx
from . import estimators as est
from . import validate as val
from .rng import check_seed

CSV_FIELDS = ["variant", "measure", "n", "k", "m", "epsilon", "trials", "mean", "stderr", "seed"]
EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list:
    try:
        values = [int(v) for v in text.replace(" ", ",").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must be nonempty")
    return values


def _measure_list(text: str) -> list:
    try:
        return [est.Measure.parse(v) for v in text.split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _seed(text: str) -> int:
    try:
        return check_seed(int(text, 0))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def result_row(estimate: est.RateEstimate) -> list:
    return [
        estimate.variant.value,
        estimate.measure.value,
        estimate.n,
        estimate.k,
        estimate.m,
        repr(estimate.epsilon),
        estimate.trials,
        repr(estimate.mean),
        repr(estimate.stderr),
        estimate.seed,
    ]


def format_rows(rows, header=True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(CSV_FIELDS)
    writer.writerows(rows)
    return buf.getvalue()


def manifest_path(out: Path) -> Path:
    return out.with_suffix(".manifest")


def write_manifest(out: Path, command: str, argv: list, seed: int) -> None:
    lines = [
        "tool=comprates",
        f"version={__version__}",
        f"command={command}",
        f"argv={shlex.join(argv)}",
        f"master_seed={seed}",
        f"csv={out.name}",
    ]
    manifest_path(out).write_text("\n".join(lines) + "\n")


def cmd_simulate(args, argv) -> int:
    estimate = est.monte_carlo(args.measure, args.n, args.k, args.variant, args.trials, args.seed)
    row = result_row(estimate)
    sys.stdout.write(format_rows([row]))
    if args.out:
        out = Path(args.out)
        fresh = not out.exists() or out.stat().st_size == 0
        with out.open("a", newline="") as fh:
            fh.write(format_rows([row], header=fresh))
        write_manifest(out, "simulate", argv, args.seed)
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    out = Path(args.out)
    out.open("w").close()  # fail before the sweep if the path is unwritable
    rows = []
    for k in args.k_list:
        for n in args.n_list:
            for measure in args.measure:
                try:
                    estimate = est.monte_carlo(measure, n, k, args.variant, args.trials, args.seed)
                except (cx.ConfigurationError, ValueError) as exc:
                    print(f"skipping n={n} k={k}: {exc}", file=sys.stderr)
                    break
                rows.append(result_row(estimate))
                print(format_rows([rows[-1]], header=False), end="", file=sys.stderr)
    if not rows:
        print("no valid grid points", file=sys.stderr)
        return EXIT_CONFIG
    out.write_text(format_rows(rows))
    write_manifest(out, "sweep", argv, args.seed)
    return EXIT_OK


def read_results(path: Path) -> list:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_FIELDS:
            raise UsageError(f"{path}: header must be {','.join(CSV_FIELDS)}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(CSV_FIELDS):
                raise UsageError(f"{path}:{lineno}: expected {len(CSV_FIELDS)} fields")
            rec = dict(zip(CSV_FIELDS, raw))
            try:
                rows.append({
                    "variant": cx.Variant.parse(rec["variant"]),
                    "measure": est.Measure.parse(rec["measure"]),
                    "n": int(rec["n"]),
                    "k": int(rec["k"]),
                    "mean": float(rec["mean"]),
                })
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}")
    return rows


def cmd_fit(args, argv) -> int:
    rows = read_results(Path(args.csv))
    if args.variant:
        rows = [r for r in rows if r["variant"] is cx.Variant.parse(args.variant)]
    if args.measure:
        rows = [r for r in rows if r["measure"] is args.measure]
    groups = {(r["variant"], r["measure"]) for r in rows}
    if len(groups) > 1:
        raise UsageError("rows mix variants or measures; filter with --variant/--measure")
    if len({r["k"] for r in rows}) > 1:
        raise UsageError("rows mix several k values; a rate-law fit needs a single k")
    if len(rows) < 3:
        raise UsageError(f"need at least 3 rows to fit, found {len(rows)}")
    variant = rows[0]["variant"]
    fit = est.fit_rate_law([(r["n"], r["k"], r["mean"]) for r in rows], variant)
    abscissa = "log2(n/k)" if variant is cx.Variant.ORDER_INDEPENDENT else "log2(n)"
    print(f"model: mean^2 * n / k = slope * {abscissa} + intercept")
    print(f"slope={fit.slope!r}")
    print(f"intercept={fit.intercept!r}")
    print(f"r_squared={fit.r_squared!r}")
    print(f"points={len(fit.points)}")
    return EXIT_OK


def cmd_bounds(args, argv) -> int:
    header = f"{'n':>10} {'epsilon':>14} {'lower_envelope':>16} {'upper_bound':>14}"
    print(header)
    for n in args.n_list:
        if args.k >= n:
            print(f"skipping n={n}: requires n > k", file=sys.stderr)
            continue
        try:
            g = cx.make_geometry(n, args.k, args.variant)
            eps = cx.epsilon(g)
        except cx.ConfigurationError as exc:
            print(f"skipping n={n}: {exc}", file=sys.stderr)
            continue
        lower = est.FLOOR_CONSTANT * eps
        upper = est.upper_bound_uc(n, args.k, args.variant)
        print(f"{n:>10d} {eps:>14.6g} {lower:>16.6g} {upper:>14.6g}")
    return EXIT_OK


def cmd_validate(args, argv) -> int:
    failed = False
    for suite in val.SUITES:
        result = suite(args.seed)
        print(result.summary())
        for detail in result.failures[:10]:
            print(f"    failing case: {detail}")
        failed |= not result.passed
    print("all suites passed" if not failed else "validation FAILED")
    return EXIT_VALIDATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="comprates", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, grid: bool):
        p.add_argument("--variant", type=cx.Variant.parse, default=cx.Variant.ORDER_INDEPENDENT,
                       help="oi (order-independent) or od (order-dependent)")
        if grid:
            p.add_argument("--measure", type=_measure_list, default=[est.Measure.AGNOSTIC_EXCESS],
                           help="comma-separated measures: ag, uc")
        else:
            p.add_argument("--measure", type=est.Measure.parse, default=est.Measure.AGNOSTIC_EXCESS)
        p.add_argument("--trials", type=int, default=1000)
        p.add_argument("--seed", type=_seed, default=0)

    p = sub.add_parser("simulate", help="Monte Carlo estimate at one (n, k) point")
    common(p, grid=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", help="CSV file to append the row to")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo estimates over an (n, k) grid")
    common(p, grid=True)
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--k-list", type=_int_list, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="fit the rate law to a results CSV")
    p.add_argument("csv")
    p.add_argument("--variant")
    p.add_argument("--measure", type=est.Measure.parse)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bounds", help="lower envelope and upper bound per n")
    p.add_argument("--variant", type=cx.Variant.parse, default=cx.Variant.ORDER_INDEPENDENT)
    p.add_argument("--n-list", type=_int_list, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("validate", help="run the oracle and identity suites")
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", 2) < 2:
        print("error: --trials must be at least 2", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args, argv)
    except (cx.ConfigurationError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
