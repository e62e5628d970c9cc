"""Monte Carlo bench harness: simulate, fit each method, summarize as mean and SE.

A scenario file is JSON::

    {
      "seed": 1,
      "reps": 20,
      "scenarios": [{"name": "p50_pi0", "p": 50, "q": 5, "pi": 0.0}],
      "methods": ["kc", "tkm", "arsk-soft-soft"],
      "lambda": {"policy": "gap", "B": 25, "grid_size": 10, "decay": 0.5}
    }

Scenario entries take any :class:`~arsk.simgen.SimConfig` field except the
seed.  ``lambda`` is either ``{"policy": "gap", ...TuneConfig fields}`` or
``{"policy": "fixed", "lambda1": .., "lambda2": ..}``.  ``tkm_alpha``
(default: the scenario's contamination rate) sets the trimming level.
"""
from concurrent.futures import ProcessPoolExecutor
import csv
import io
import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from ._rng import child_seed
from .exceptions import ArskError, InvalidParameterError
from .metrics import cer_with_outliers, tpr_tnr
from .model import PenaltySpec
from .simgen import SimConfig, gen_dataset
from .solver import ArskOptions, fit
from .tuning import TuneConfig, tune
from .wkmeans import KMeansOptions, kmeans, trimmed_kmeans

METRICS = ("cer", "tpr", "tnr", "outliers", "nonzero")
COLUMNS = (
    ("scenario", "method", "reps", "failures")
    + tuple(f"{m}_{s}" for m in METRICS for s in ("mean", "se"))
)
ARSK_PENALTIES = ("soft", "scad")


def method_names():
    names = ["kc", "tkm"]
    names += [f"arsk-{w}-{e}" for w in ARSK_PENALTIES for e in ARSK_PENALTIES]
    return names


def check_method(name):
    if name not in method_names():
        raise InvalidParameterError(
            f"unknown method {name!r}; choose from {', '.join(method_names())}"
        )
    return name


@dataclass(frozen=True)
class Scenario:
    name: str
    config: SimConfig
    tkm_alpha: float = None


@dataclass(frozen=True)
class BenchPlan:
    scenarios: tuple
    methods: tuple
    reps: int = 20
    seed: int = 0
    policy: str = "gap"
    tune: TuneConfig = field(default_factory=TuneConfig)
    lambda1: float = None
    lambda2: float = None

    def __post_init__(self):
        if self.reps < 1:
            raise InvalidParameterError("reps must be at least 1")
        if self.policy not in ("gap", "fixed"):
            raise InvalidParameterError(f"unknown lambda policy {self.policy!r}")
        if self.policy == "fixed" and (self.lambda1 is None or self.lambda2 is None):
            raise InvalidParameterError("fixed lambda policy needs lambda1 and lambda2")
        for m in self.methods:
            check_method(m)


_SIM_KEYS = {f.name for f in fields(SimConfig)} - {"seed"}
_TUNE_KEYS = {f.name for f in fields(TuneConfig)} - {"seed", "workers"}


def plan_from_dict(d, reps=None, methods=None):
    """Build a :class:`BenchPlan` from a parsed scenario file; CLI values override."""
    if not isinstance(d, dict) or "scenarios" not in d:
        raise InvalidParameterError("scenario file needs a 'scenarios' list")
    scenarios = []
    for i, s in enumerate(d["scenarios"]):
        s = dict(s)
        name = str(s.pop("name", f"scenario{i}"))
        alpha = s.pop("tkm_alpha", None)
        unknown = set(s) - _SIM_KEYS
        if unknown:
            raise InvalidParameterError(f"scenario {name!r}: unknown keys {sorted(unknown)}")
        scenarios.append(Scenario(name, SimConfig(**s), alpha))
    lam = dict(d.get("lambda", {"policy": "gap"}))
    policy = lam.pop("policy", "gap")
    l1 = lam.pop("lambda1", None)
    l2 = lam.pop("lambda2", None)
    unknown = set(lam) - _TUNE_KEYS
    if unknown:
        raise InvalidParameterError(f"lambda section: unknown keys {sorted(unknown)}")
    return BenchPlan(
        scenarios=tuple(scenarios),
        methods=tuple(methods if methods else d.get("methods", method_names())),
        reps=int(reps if reps is not None else d.get("reps", 20)),
        seed=int(d.get("seed", 0)),
        policy=policy,
        tune=TuneConfig(**lam),
        lambda1=l1,
        lambda2=l2,
    )


def load_plan(path, reps=None, methods=None):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(
                f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from None
    return plan_from_dict(d, reps, methods)


def _arsk_options(method, K, seed):
    # "arsk-A-B": A thresholds the weights, B the error rows
    _, pw, pe = method.split("-")
    return ArskOptions(K=K, penalty_E=PenaltySpec(pe, 1.0), penalty_w=PenaltySpec(pw, 0.0), seed=seed)


def run_one(plan, s_idx, rep, method):
    """Metrics of one method on one replicate: dict with the METRICS keys, or None on failure."""
    sc = plan.scenarios[s_idx]
    cfg = SimConfig(**{**sc.config.to_dict(), "seed": child_seed(plan.seed, "data", s_idx, rep)})
    ds = gen_dataset(cfg)
    X = ds.X.values
    K = cfg.K
    seed = child_seed(plan.seed, "method", s_idx, rep, method)
    p = X.shape[1]
    try:
        if method == "kc":
            labels = kmeans(X, K, KMeansOptions(seed=seed)).model.labels
            outliers, weights = frozenset(), np.ones(p)
        elif method == "tkm":
            alpha = sc.tkm_alpha if sc.tkm_alpha is not None else cfg.pi
            model, outliers = trimmed_kmeans(X, K, alpha, KMeansOptions(seed=seed))
            labels, weights = model.labels, np.ones(p)
        else:
            opts = _arsk_options(method, K, seed)
            if plan.policy == "gap":
                tc = TuneConfig(**{**_tune_kwargs(plan.tune), "seed": seed, "workers": 1})
                tr = tune(X, K, tc, opts)
                lam1, lam2 = tr.lambda1_star, tr.lambda2_star
            else:
                lam1, lam2 = plan.lambda1, plan.lambda2
            res = fit(X, opts.with_lambdas(lam1, lam2))
            labels, outliers, weights = res.labels, res.outlier_indices, res.weights.weights
    except ArskError:
        return None
    tpr, tnr = tpr_tnr(weights, ds.informative_set)
    return {
        "cer": cer_with_outliers(ds.true_labels, ds.outlier_flags, labels, outliers, K),
        "tpr": tpr,
        "tnr": tnr,
        "outliers": float(len(outliers)),
        "nonzero": float(np.count_nonzero(weights)),
    }


def _tune_kwargs(tc):
    return {k: getattr(tc, k) for k in _TUNE_KEYS}


def _task(args):
    return run_one(*args)


def run_plan(plan, workers=1):
    """Per-(scenario, method) lists of replicate metrics, in plan order."""
    tasks = [
        (plan, s, r, m)
        for s in range(len(plan.scenarios))
        for m in plan.methods
        for r in range(plan.reps)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=1))
    else:
        results = [_task(t) for t in tasks]
    out = {}
    for (_, s, r, m), res in zip(tasks, results):
        out.setdefault((s, m), []).append(res)
    return out


def summarize(plan, raw):
    """One report row per (scenario, method): mean and standard error of each metric."""
    rows = []
    for s, sc in enumerate(plan.scenarios):
        for m in plan.methods:
            reps = [r for r in raw[(s, m)] if r is not None]
            row = {
                "scenario": sc.name,
                "method": m,
                "reps": len(reps),
                "failures": len(raw[(s, m)]) - len(reps),
            }
            for key in METRICS:
                v = np.array([r[key] for r in reps], dtype=float)
                mean = float(v.mean()) if v.size else math.nan
                se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
                row[f"{key}_mean"] = mean
                row[f"{key}_se"] = se
            rows.append(row)
    return rows


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in COLUMNS])
    return buf.getvalue()


def from_csv(text):
    """Parse a bench table back into report rows (inverse of :func:`to_csv`)."""
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {"scenario": rec["scenario"], "method": rec["method"]}
        row["reps"] = int(rec["reps"])
        row["failures"] = int(rec["failures"])
        for c in COLUMNS[4:]:
            row[c] = float(rec[c])
        rows.append(row)
    return rows


def run_bench(plan, workers=1):
    return summarize(plan, run_plan(plan, workers))
