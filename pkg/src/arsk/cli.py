"""Command-line interface: fit, tune, simulate, bench, eval.

Exit codes: 0 success, 2 parse or configuration error, 3 degenerate
weights, 4 non-convergence, 5 tuning failed.
"""
import argparse
import csv
import json
import os
import sys
import warnings

import numpy as np

from . import bench
from .exceptions import (
    ArskError,
    InvalidInputError,
    NonConvergenceError,
    ParseError,
)
from .metrics import cer_with_outliers, outlier_confusion, tpr_tnr
from .model import DataMatrix, FitResult, PenaltySpec
from .simgen import SimConfig, gen_dataset
from .solver import ArskOptions, fit
from .tuning import TuneConfig, tune

THREADS_ENV = "ARSK_THREADS"


def read_csv(path, header=False):
    """Numeric matrix from a comma-separated file; errors carry the 1-based line and column."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    rows = []
    width = None
    with fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise ParseError(f"expected {width} fields, found {len(rec)}", line=lineno)
            row = []
            for col, cell in enumerate(rec, start=1):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise ParseError(f"non-numeric value {cell!r}", line=lineno, column=col) from None
            rows.append(row)
    if not rows:
        raise ParseError(f"{path} contains no data rows")
    X = np.array(rows)
    if not np.all(np.isfinite(X)):
        i, j = np.argwhere(~np.isfinite(X))[0]
        raise ParseError("non-finite value", line=int(i) + 1 + int(header), column=int(j) + 1)
    return X


def write_csv(path, X):
    np.savetxt(path, X, delimiter=",", fmt="%.17g")


def standardize(X):
    """Center each column and scale it to unit sample standard deviation (n - 1 denominator).

    Constant columns are only centered; their indices are returned in the
    diagnostics and a warning is issued.  Returns ``(DataMatrix, diagnostics)``.
    """
    A = X.values if isinstance(X, DataMatrix) else np.asarray(X, dtype=float)
    Z = A - A.mean(axis=0)
    sd = A.std(axis=0, ddof=1)
    constant = np.flatnonzero(~(sd > 0))
    if constant.size:
        warnings.warn(f"constant columns left unscaled: {constant.tolist()}", RuntimeWarning)
    Z[:, sd > 0] /= sd[sd > 0]
    return DataMatrix(Z), {"constant_columns": constant.tolist()}


def _dump(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from None


def _workers(args):
    if getattr(args, "threads", None) is not None:
        n = args.threads
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            n = int(raw)
        except ValueError:
            raise ParseError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ParseError("worker count must be at least 1")
    return n


def _load_data(args):
    X = read_csv(args.data, header=args.header)
    diag = {}
    if args.standardize:
        dm, diag = standardize(X)
        X = dm.values
    return X, diag


def cmd_fit(args):
    X, _ = _load_data(args)
    opts = ArskOptions(
        K=args.k,
        penalty_E=PenaltySpec(args.penalty_e, args.lambda1),
        penalty_w=PenaltySpec(args.penalty_w, args.lambda2),
        seed=args.seed,
        max_outer_iter=args.max_iter,
    )
    res = fit(X, opts)
    _dump(res.to_dict(), args.out)
    if not res.converged:
        raise NonConvergenceError(
            f"weights still changing after {res.outer_iterations} outer iterations"
        )
    return 0


def cmd_tune(args):
    X, _ = _load_data(args)
    cfg = TuneConfig(
        B=args.b,
        grid_size=args.grid_size,
        decay=args.decay,
        lambda1_dagger=args.lambda1_dagger,
        lambda1_max=args.lambda1_max,
        lambda2_max=args.lambda2_max,
        seed=args.seed,
        workers=_workers(args),
    )
    opts = ArskOptions(
        K=args.k,
        penalty_E=PenaltySpec(args.penalty_e, 1.0),
        penalty_w=PenaltySpec(args.penalty_w, 0.0),
        seed=args.seed,
    )
    res = tune(X, args.k, cfg, opts)
    _dump(res.to_dict(), args.out)
    return 0


def cmd_simulate(args):
    cfg = SimConfig(
        K=args.k,
        n_per_cluster=args.n_per_cluster,
        p=args.p,
        q=args.q,
        pi=args.pi,
        covariance=args.cov,
        seed=args.seed,
    )
    ds = gen_dataset(cfg)
    write_csv(args.out_prefix + ".csv", ds.X.values)
    _dump(ds.truth_dict(), args.out_prefix + ".truth.json")
    return 0


def cmd_bench(args):
    methods = args.methods.split(",") if args.methods else None
    plan = bench.load_plan(args.scenario_file, reps=args.reps, methods=methods)
    rows = bench.run_bench(plan, workers=_workers(args))
    text = bench.to_csv(rows)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


def cmd_eval(args):
    res = FitResult.from_dict(_load_json(args.result))
    truth = _load_json(args.truth)
    labels = np.asarray(truth["labels"])
    flags = np.asarray(truth.get("outlier_flags", [False] * labels.size), dtype=bool)
    if labels.size != res.model.n:
        raise InvalidInputError(
            f"result has {res.model.n} observations but truth has {labels.size}"
        )
    K = int(max(res.model.K, labels.max()))
    tpr, tnr = tpr_tnr(res.weights, truth.get("informative_set", []))
    tp, fp, fn, det = outlier_confusion(flags, res.outlier_indices)
    _dump(
        {
            "cer": cer_with_outliers(labels, flags, res.labels, res.outlier_indices, K),
            "tpr": tpr,
            "tnr": tnr,
            "outliers": {"true_pos": tp, "false_pos": fp, "false_neg": fn, "detected": det},
        },
        args.out,
    )
    return 0


def _add_data_args(p):
    p.add_argument("data", help="numeric CSV, one observation per row")
    p.add_argument("--k", type=int, default=3, help="number of clusters")
    p.add_argument("--header", action="store_true", help="skip the first line")
    p.add_argument("--standardize", action="store_true", help="center and scale columns first")
    p.add_argument("--penalty-e", choices=["soft", "scad"], default="soft")
    p.add_argument("--penalty-w", choices=["soft", "scad"], default="soft")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output JSON (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="arsk",
        description="Robust and sparse k-means with outlier detection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit at fixed lambda1 / lambda2")
    _add_data_args(p)
    p.add_argument("--lambda1", type=float, required=True, help="error-row threshold")
    p.add_argument("--lambda2", type=float, required=True, help="weight threshold")
    p.add_argument("--max-iter", type=int, default=50, help="outer iteration limit")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tune", help="choose lambda2 then lambda1 by the robust Gap")
    _add_data_args(p)
    p.add_argument("--b", type=int, default=25, help="permuted reference datasets")
    p.add_argument("--grid-size", type=int, default=10)
    p.add_argument("--decay", type=float, default=0.5)
    p.add_argument("--lambda1-dagger", type=float, default=None)
    p.add_argument("--lambda1-max", type=float, default=None, help="top of the lambda1 grid")
    p.add_argument("--lambda2-max", type=float, default=None, help="top of the lambda2 grid")
    p.add_argument("--threads", type=int, default=None, help=f"workers (overrides ${THREADS_ENV})")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("simulate", help="draw a contaminated mixture dataset")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n-per-cluster", type=int, default=50)
    p.add_argument("--p", type=int, default=50)
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--pi", type=float, default=0.0)
    p.add_argument("--cov", choices=["identity", "rotated"], default="identity")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True, help="writes PREFIX.csv and PREFIX.truth.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="Monte Carlo comparison of methods")
    p.add_argument("--scenario-file", required=True, help="JSON scenario file")
    p.add_argument("--reps", type=int, default=None, help="override the file's replicate count")
    p.add_argument("--methods", default=None, help=f"comma list from {','.join(bench.method_names())}")
    p.add_argument("--threads", type=int, default=None, help=f"workers (overrides ${THREADS_ENV})")
    p.add_argument("--out", default="-", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score a fit against ground truth")
    p.add_argument("result", help="fit result JSON")
    p.add_argument("truth", help="ground-truth JSON from simulate")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ArskError as exc:
        print(f"arsk {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
