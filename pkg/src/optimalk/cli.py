"""Command-line entry point: ``optimalk <subcommand> ...``.

Exit status is 0 on success, 2 on a usage error and 1 when a computation
fails or an input file is malformed.
"""

import argparse
import csv
import io
import json
import math
import sys

from . import asymptotics, montecarlo
from .estimator import ErrorModel, RegressionSample, estimate_variance, exact_mse
from .exceptions import OptimalKError
from .seqgen import (
    MAX_LEVEL,
    MAX_ORDER,
    RULE_OF_THUMB,
    DifferenceSequence,
    delta_k,
    delta_k_exact,
    generate,
)


class InputError(Exception):
    """Malformed input file; reported with exit status 1."""


def _positive_int(text):
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return value


def _add_order_flags(p, required=True):
    p.add_argument("--r", type=int, required=required, metavar="R",
                   help=f"sequence order, 1..{MAX_ORDER}")
    p.add_argument("--k", type=int, required=required, metavar="K",
                   help=f"bias level, 0..min(R-1, {MAX_LEVEL}) or R-1")


def _add_error_flags(p):
    p.add_argument("--sigma", type=_positive_float, default=1.0, help="error standard deviation (default 1)")
    p.add_argument("--gamma3", type=float, default=0.0, help="standardized third moment (default 0)")
    p.add_argument("--gamma4", type=float, default=3.0, help="standardized fourth moment (default 3)")


def _command(sub, name, help):
    p = sub.add_parser(name, help=help, description=help[0].upper() + help[1:] + ".")
    p.set_defaults(command_parser=p)
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="optimalk",
        description="Optimal-k difference sequences and difference-based variance estimation.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = _command(sub, "gen-seq", help="print the optimal-k difference sequence d_k(r)")
    _add_order_flags(p, required=False)
    p.add_argument("--rule-of-thumb", action="store_true", help="use (r, k) = (3, 1)")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table",
                   help="output format (default table)")
    p.add_argument("--digits", type=int, default=4, metavar="D",
                   help="decimals shown by the table format (default 4)")

    p = _command(sub, "delta", help="print the minimal sum of squared lag products")
    _add_order_flags(p)
    p.add_argument("--exact", action="store_true", help="print the exact rational value")

    p = _command(sub, "estimate", help="estimate the residual variance of x,y data")
    p.add_argument("--data", required=True, metavar="FILE", help="CSV with header x,y; '-' reads stdin")
    _add_order_flags(p, required=False)
    p.add_argument("--seq", metavar="FILE", help="sequence JSON as written by gen-seq; '-' reads stdin")
    p.add_argument("--rule-of-thumb", action="store_true", help="use (r, k) = (3, 1) (the default)")

    p = _command(sub, "exact-mse", help="exact bias, variance and MSE on the grid i/n")
    p.add_argument("--g", default="sin:5,1", metavar="SPEC", help="mean function sin:A,W or zero (default sin:5,1)")
    p.add_argument("--n", type=_positive_int, required=True, help="sample size")
    _add_error_flags(p)
    _add_order_flags(p, required=False)
    p.add_argument("--rule-of-thumb", action="store_true", help="use (r, k) = (3, 1)")

    p = _command(sub, "asymptotics", help="leading-order RVAR, RSB and RMSE curves")
    p.add_argument("--g", default="sin:5,4", metavar="SPEC", help="mean function sin:A,W or zero (default sin:5,4)")
    p.add_argument("--n", type=_positive_int, default=100, help="sample size used for scaling (default 100)")
    _add_error_flags(p)
    p.add_argument("--rmax", type=_positive_int, default=10, help=f"largest order, at most {MAX_ORDER} (default 10)")
    p.add_argument("--out", default="-", metavar="FILE", help="output CSV (default stdout)")

    p = _command(sub, "simulate", help="Monte Carlo study on 5 sin(w pi x)")
    p.add_argument("--preset", required=True, choices=("table2", "fig3", "fig4", "figS1"),
                   help="study grid")
    p.add_argument("--n", type=_positive_int, nargs="+", metavar="N", help="override the sample sizes")
    p.add_argument("--reps", type=_positive_int, default=montecarlo.DEFAULT_REPLICATIONS,
                   help=f"replications per cell, at least {montecarlo.MIN_REPLICATIONS} "
                        f"(default {montecarlo.DEFAULT_REPLICATIONS})")
    seed = montecarlo.SimulationConfig.seed
    p.add_argument("--seed", type=int, default=seed, help=f"64-bit RNG seed (default {seed})")
    p.add_argument("--no-crn", action="store_true", help="draw independent noise per candidate")
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker threads (default 1)")
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    return parser


def _check_order(parser, r, k):
    if not 1 <= r <= MAX_ORDER:
        parser.error(f"argument --r: order must lie in 1..{MAX_ORDER}, got {r}")
    kmax = min(r - 1, MAX_LEVEL)
    if not (0 <= k <= kmax or k == r - 1):
        parser.error(f"argument --k: bias level must lie in 0..{kmax} or equal {r - 1} for r={r}, got {k}")


def _resolve_order(parser, args, default=None):
    given = args.r is not None or args.k is not None
    if args.rule_of_thumb and given:
        parser.error("argument --rule-of-thumb: not allowed with --r/--k")
    if args.rule_of_thumb:
        return RULE_OF_THUMB
    if not given:
        if default is None:
            parser.error("the following arguments are required: --r, --k (or --rule-of-thumb)")
        return default
    if args.r is None or args.k is None:
        parser.error(f"argument {'--k' if args.k is None else '--r'}: required together with "
                     f"{'--r' if args.k is None else '--k'}")
    _check_order(parser, args.r, args.k)
    return args.r, args.k


def _error_model(parser, args):
    if args.gamma4 < 1:
        parser.error(f"argument --gamma4: must be at least 1, got {args.gamma4}")
    return ErrorModel(args.sigma, args.gamma3, args.gamma4)


def _mean_function(parser, text):
    try:
        return asymptotics.parse_mean_function(text)
    except ValueError as exc:
        parser.error(f"argument --g: {exc}")


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def read_xy_csv(text):
    """Parse CSV text with an ``x,y`` header into float lists."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError("empty CSV input") from None
    if "x" not in header or "y" not in header:
        raise InputError(f"CSV header must contain x and y, got {','.join(header)}")
    ix, iy = header.index("x"), header.index("y")
    xs, ys = [], []
    for row_number, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise InputError(f"row {row_number}: expected {len(header)} fields, got {len(row)}")
        try:
            x, y = float(row[ix]), float(row[iy])
        except ValueError:
            raise InputError(f"row {row_number}: non-numeric value in {row!r}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError(f"row {row_number}: non-finite value in {row!r}")
        xs.append(x)
        ys.append(y)
    return xs, ys


def _print_json(obj):
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _fmt(value, digits):
    # adding 0.0 turns a rounded -0.0 into 0.0
    return f"{round(value, digits) + 0.0:.{digits}f}"


def cmd_gen_seq(parser, args):
    r, k = _resolve_order(parser, args)
    if not 0 <= args.digits <= 17:
        parser.error(f"argument --digits: must lie in 0..17, got {args.digits}")
    seq = generate(r, k)
    if args.format == "json":
        _print_json(seq.to_dict())
    elif args.format == "csv":
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(("j", "d"))
        w.writerows((j, repr(float(v))) for j, v in enumerate(seq.coeffs))
        sys.stdout.write(out.getvalue())
    else:
        sys.stdout.write(" ".join(_fmt(v, args.digits) for v in seq.coeffs) + "\n")


def cmd_delta(parser, args):
    _check_order(parser, args.r, args.k)
    if args.exact:
        print(delta_k_exact(args.r, args.k))
    else:
        print(repr(delta_k(args.r, args.k)))


def cmd_estimate(parser, args):
    if args.seq is not None and (args.r is not None or args.k is not None or args.rule_of_thumb):
        parser.error("argument --seq: not allowed with --r/--k/--rule-of-thumb")
    if args.seq == "-" and args.data == "-":
        parser.error("argument --seq: stdin is already used by --data")
    if args.seq is not None:
        try:
            seq = DifferenceSequence.from_dict(json.loads(_read_text(args.seq)))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"unreadable sequence JSON: {exc}") from None
    else:
        seq = generate(*_resolve_order(parser, args, default=RULE_OF_THUMB))
    xs, ys = read_xy_csv(_read_text(args.data))
    sample = RegressionSample(xs, ys)
    sigma2 = float(estimate_variance(sample, seq))
    _print_json({"n": sample.n, "r": seq.r, "k": seq.k, "sigma2": sigma2, "sigma": math.sqrt(sigma2)})


def cmd_exact_mse(parser, args):
    r, k = _resolve_order(parser, args)
    err = _error_model(parser, args)
    g = _mean_function(parser, args.g)
    bias, variance, mse = exact_mse(g, args.n, generate(r, k), err)
    scaled = mse * args.n / err.var_eps2 if err.var_eps2 > 0 else None
    _print_json({"bias": bias, "variance": variance, "mse": mse, "rmse_scaled": scaled})


def cmd_asymptotics(parser, args):
    if args.rmax > MAX_ORDER:
        parser.error(f"argument --rmax: must be at most {MAX_ORDER}, got {args.rmax}")
    if args.n <= args.rmax:
        parser.error(f"argument --n: must exceed --rmax ({args.rmax}), got {args.n}")
    err = _error_model(parser, args)
    if err.var_eps2 <= 0:
        parser.error("argument --gamma4: scaling needs gamma4 > 1")
    reports = asymptotics.figure2_curves(_mean_function(parser, args.g), err, args.n, args.rmax)
    columns = ("r", "k", "rvar", "rsb", "rmse", "log_rvar", "log_rmse")
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for rep in reports:
        row = rep.row()
        w.writerow([row["r"], row["k"]] + [repr(float(row[c])) for c in columns[2:]])
    _write_text(args.out, out.getvalue())


def _write_text(path, text):
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_simulate(parser, args):
    if args.reps < montecarlo.MIN_REPLICATIONS:
        parser.error(f"argument --reps: must be at least {montecarlo.MIN_REPLICATIONS}, got {args.reps}")
    if not 0 <= args.seed < 2**64:
        parser.error(f"argument --seed: must be a 64-bit unsigned integer, got {args.seed}")
    overrides = {"replications": args.reps, "seed": args.seed,
                 "common_random_numbers": not args.no_crn}
    if args.n:
        overrides["n_values"] = tuple(args.n)
    try:
        cfg = montecarlo.preset(args.preset, **overrides)
    except OptimalKError as exc:
        parser.error(f"argument --n: {exc}")
    summary = montecarlo.best_candidate_heatmap(cfg, jobs=args.jobs)
    paths = montecarlo.write_outputs(summary, args.out)
    print(f"{len(cfg.cells())} cells x {len(cfg.candidates)} candidates -> {paths['summary.csv']}")


COMMANDS = {
    "gen-seq": cmd_gen_seq,
    "delta": cmd_delta,
    "estimate": cmd_estimate,
    "exact-mse": cmd_exact_mse,
    "asymptotics": cmd_asymptotics,
    "simulate": cmd_simulate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    subparser = args.command_parser
    try:
        COMMANDS[args.command](subparser, args)
    except SystemExit as exc:
        return exc.code
    except (OptimalKError, InputError, ValueError, OSError) as exc:
        print(f"optimalk {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0
