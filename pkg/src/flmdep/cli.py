"""Command-line interface: ``flmdep test``, ``flmdep simulate``, ``flmdep report``.

Exit codes: 0 success, 2 configuration/usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import hashlib
import itertools
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from flmdep.bootstrap import CalibrationKind, CalibrationMethod, VarianceMode, is_compatible, run_test
from flmdep.config import load_scenarios
from flmdep.errors import ConfigurationError, DataError, FlmdepError
from flmdep.fpca import decompose
from flmdep.hilbert import FunctionalSample, Grid
from flmdep.reporting import (
    dumps,
    outcome_record,
    render,
    result_document,
    scenario_document,
    scenario_table,
)
from flmdep.rng import Multiplier
from flmdep.simgen import MethodSpec, run_scenario
from flmdep.stats import StatisticKind

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

BUNDLED_SPECS = Path(__file__).parent / "specs"


# --------------------------------------------------------------------------
# ingestion
# --------------------------------------------------------------------------


def _parse_cell(text, row, column, what="value"):
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"cannot parse {what} {text.strip()!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise DataError(f"non-finite {what} {text.strip()!r}", row=row, column=column)
    return value


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return [row for row in csv.reader(fh) if any(cell.strip() for cell in row)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def ingest(curves_path, responses_path, rule="trapezoid"):
    """Read a curve table and a response column into a :class:`FunctionalSample`.

    The curve file is comma separated; its first row holds the grid points,
    every further row one curve. The response file holds one value per line
    and may start with a single non-numeric header line. Row and column
    numbers in errors are 1-based file positions.
    """
    rows = _read_rows(curves_path)
    if not rows:
        raise DataError(f"{curves_path}: empty curve file")
    header = [_parse_cell(c, 1, j, "grid point") for j, c in enumerate(rows[0], 1)]
    if len(header) < 2:
        raise DataError(f"{curves_path}: need at least 2 grid points", row=1)
    for j in range(1, len(header)):
        if not header[j] > header[j - 1]:
            raise DataError(
                f"{curves_path}: grid header is not strictly increasing", row=1, column=j + 1
            )
    p = len(header)
    curves = []
    for r, row in enumerate(rows[1:], 2):
        if len(row) != p:
            raise DataError(
                f"{curves_path}: ragged row with {len(row)} cells, expected {p}", row=r
            )
        curves.append([_parse_cell(c, r, j) for j, c in enumerate(row, 1)])

    resp_rows = _read_rows(responses_path)
    if resp_rows:
        try:
            float(resp_rows[0][0])
        except ValueError:
            resp_rows = resp_rows[1:]
            offset = 2
        else:
            offset = 1
    responses = []
    for r, row in enumerate(resp_rows, offset if resp_rows else 1):
        if len(row) != 1:
            raise DataError(
                f"{responses_path}: expected one value per line, got {len(row)}", row=r
            )
        responses.append(_parse_cell(row[0], r, 1, "response"))

    if len(responses) != len(curves):
        raise DataError(
            f"length mismatch: {len(curves)} curves in {curves_path} but "
            f"{len(responses)} responses in {responses_path}"
        )
    if len(curves) < 2:
        raise DataError(f"{curves_path}: need at least 2 curves, got {len(curves)}")
    try:
        grid = Grid.from_points(header, rule=rule)
        return FunctionalSample(grid, np.array(curves), np.array(responses))
    except FlmdepError as exc:
        raise DataError(str(exc)) from None


def emit(sample, curves_path, responses_path):
    """Write ``sample`` in the format read by :func:`ingest` (17 significant digits)."""
    fmt = "{:.17g}".format
    with open(curves_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([fmt(t) for t in sample.grid.points])
        for row in sample.curves:
            writer.writerow([fmt(v) for v in row])
    with open(responses_path, "w", encoding="utf-8") as fh:
        fh.write("y\n")
        for v in sample.responses:
            fh.write(fmt(v) + "\n")


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --------------------------------------------------------------------------
# argument helpers
# --------------------------------------------------------------------------


def _choices_list(choices, allow_all=True):
    options = list(choices) + (["all"] if allow_all else [])

    def parse(text):
        items = [t.strip().lower() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in options]
        if bad or not items:
            raise argparse.ArgumentTypeError(
                f"invalid choice {', '.join(bad) or text!r} (choose from {', '.join(options)})"
            )
        if "all" in items:
            return list(choices)
        return list(dict.fromkeys(items))

    return parse


def _int_list(text):
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("kn values must be positive integers")
    return values


def _float_list(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(not 0 < v < 1 for v in values):
        raise argparse.ArgumentTypeError("levels must lie in (0, 1)")
    return values


def _u64(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flmdep",
        description="Tests of no linear effect of a functional covariate on a scalar response.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test a dataset (curves CSV + responses)")
    t.add_argument("--curves", required=True, help="CSV: header row of grid points, one curve per row")
    t.add_argument("--responses", required=True, help="one response per line, optional header")
    t.add_argument("--statistic", type=_choices_list([s.value for s in StatisticKind]),
                   default="all", help="t1,t2,t3,t3s or all (comma list)")
    t.add_argument("--method", type=_choices_list([k.value for k in CalibrationKind]),
                   default="wild", help="asymptotic,naive,wild,precursor or all (comma list)")
    t.add_argument("--multiplier", choices=[m.value for m in Multiplier], default="gaussian")
    t.add_argument("--kn", type=_int_list, help="principal components for t1/t2, e.g. 1,5,10")
    t.add_argument("--B", type=_positive_int, default=1000, help="bootstrap replicates")
    t.add_argument("--seed", type=_u64, default=0)
    t.add_argument("--variance-mode", type=_choices_list([v.value for v in VarianceMode]),
                   default="bootstrapped", help="bootstrapped,fixed or all (comma list)")
    t.add_argument("--alpha", type=_float_list, help="levels at which to report rejections")
    t.add_argument("--precursor-m", type=_positive_int, default=None)
    t.add_argument("--plus-one", action="store_true", help="use (1 + #>=)/(B + 1) p-values")
    t.add_argument("--quadrature", choices=["trapezoid", "riemann"], default="trapezoid")
    t.add_argument("--threads", type=_positive_int, default=1)
    t.add_argument("--out", help="write the JSON result document here (default: stdout)")
    t.add_argument("--table", action="store_true", help="also print a p-value table to stderr")

    s = sub.add_parser("simulate", help="run a Monte Carlo size/power scenario file")
    s.add_argument("spec", help="scenario file, or the name of a bundled one (table1 ... table3, local)")
    s.add_argument("--threads", type=_positive_int, default=1)
    s.add_argument("--out", help="JSON report path; the text table goes next to it as .txt")
    s.add_argument("--ns", type=_positive_int, help="override the number of datasets")
    s.add_argument("--B", type=_positive_int, help="override the bootstrap replicates")
    s.add_argument("--quiet", action="store_true")

    r = sub.add_parser("report", help="print the text table of a JSON result document")
    r.add_argument("document")
    return parser


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _planned_tests(args):
    """(MethodSpec, kn) pairs in table order; raises on impossible requests."""
    explicit = len(args.statistic) == 1 and len(args.method) == 1
    plan = []
    for stat, kind, mode in itertools.product(args.statistic, args.method, args.variance_mode):
        spec = MethodSpec(stat, kind, mode)
        if not is_compatible(spec.statistic, spec.kind):
            if explicit:
                CalibrationMethod(kind).check_compatible(stat)
            continue
        if not spec.uses_variance_mode:
            spec = MethodSpec(stat, kind)
        if spec.statistic.needs_kn:
            if not args.kn:
                raise ConfigurationError(f"--kn is required for statistic {stat}")
            plan.extend((spec, kn) for kn in args.kn)
        else:
            plan.append((spec, None))
    plan = list(dict.fromkeys(plan))
    if not plan:
        raise ConfigurationError("no compatible statistic/method combination requested")
    order = {s: i for i, s in enumerate(["t1", "t2", "t3", "t3s"])}
    kinds = {k: i for i, k in enumerate(["asymptotic", "wild", "naive", "precursor"])}
    plan.sort(key=lambda e: (order[e[0].statistic.value], kinds[e[0].kind.value],
                             e[0].variance_mode.value != "bootstrapped", e[1] or 0))
    return plan


def cmd_test(args, stdout=sys.stdout, stderr=sys.stderr):
    start = time.perf_counter()
    plan = _planned_tests(args)
    sample = ingest(args.curves, args.responses, rule=args.quadrature)
    dec = decompose(sample) if any(m.statistic.needs_kn for m, _ in plan) else None
    if dec is not None:
        too_big = [kn for m, kn in plan if kn is not None and kn > dec.m]
        if too_big:
            raise DataError(
                f"kn={max(too_big)} exceeds the {dec.m} principal components the data support"
            )
    records = []
    for m, kn in plan:
        method = CalibrationMethod(
            kind=m.kind,
            multiplier=args.multiplier,
            replicates=args.B,
            seed=args.seed,
            variance_mode=m.variance_mode,
            precursor_m=args.precursor_m,
            plus_one=args.plus_one,
        )
        outcome = run_test(sample, m.statistic, method, kn=kn, threads=args.threads, dec=dec)
        records.append(outcome_record(outcome, m.key, args.alpha))
    inputs = {
        "curves_sha256": _digest(args.curves),
        "responses_sha256": _digest(args.responses),
        "n": sample.n,
        "p": sample.p,
    }
    settings = {
        "statistic": args.statistic,
        "method": args.method,
        "variance_mode": args.variance_mode,
        "multiplier": args.multiplier,
        "kn": args.kn,
        "B": args.B,
        "seed": args.seed,
        "alpha": args.alpha,
        "plus_one": args.plus_one,
        "quadrature": args.quadrature,
        "precursor_m": args.precursor_m,
    }
    doc = result_document(inputs, settings, records, time.perf_counter() - start, args.threads)
    _write(doc, args.out, stdout)
    if args.table:
        stderr.write(render(doc))
    return EXIT_OK


def _resolve_spec(name):
    path = Path(name)
    if path.exists():
        return path
    bundled = BUNDLED_SPECS / f"{name}.spec"
    if bundled.exists():
        return bundled
    bundled = BUNDLED_SPECS / name
    if bundled.exists():
        return bundled
    raise ConfigurationError(f"scenario file {name!r} not found")


def cmd_simulate(args, stdout=sys.stdout, stderr=sys.stderr):
    import dataclasses

    specs = load_scenarios(_resolve_spec(args.spec))
    overrides = {}
    if args.ns:
        overrides["ns"] = args.ns
    if args.B:
        overrides["B"] = args.B
    specs = [dataclasses.replace(s, **overrides).validate() for s in specs]
    reports = []
    for spec in specs:
        progress = None
        if not args.quiet:
            def progress(done, spec=spec):
                if done == spec.ns or done % max(1, spec.ns // 10) == 0:
                    stderr.write(f"\r{spec.name or 'scenario'} n={spec.n}: {done}/{spec.ns}")
                    if done == spec.ns:
                        stderr.write("\n")
        reports.append(run_scenario(spec, threads=args.threads, progress=progress))
    doc = scenario_document(reports, threads=args.threads)
    table = scenario_table(doc)
    if args.out:
        _write(doc, args.out, stdout)
        Path(args.out).with_suffix(".txt").write_text(table, encoding="utf-8")
        stdout.write(table)
    else:
        stdout.write(dumps(doc))
        stderr.write(table)
    return EXIT_OK


def cmd_report(args, stdout=sys.stdout, stderr=sys.stderr):
    try:
        doc = json.loads(Path(args.document).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read {args.document}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.document} is not JSON: {exc}") from None
    try:
        stdout.write(render(doc))
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{args.document} is not a flmdep result document ({exc})") from None
    return EXIT_OK


def _write(doc, out, stdout):
    text = dumps(doc)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)


COMMANDS = {"test": cmd_test, "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, stdout=stdout, stderr=stderr)
    except DataError as exc:
        stderr.write(f"flmdep: data error: {exc}\n")
        return EXIT_DATA
    except ConfigurationError as exc:
        parser.print_usage(stderr)
        stderr.write(f"flmdep: configuration error: {exc}\n")
        if len(exc.problems) > 1:
            for problem in exc.problems:
                stderr.write(f"  - {problem}\n")
        return EXIT_CONFIG
    except FlmdepError as exc:
        stderr.write(f"flmdep: data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
