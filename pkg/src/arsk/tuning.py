"""Robust Gap statistic and the alternating lambda2 / lambda1 search."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import math

import numpy as np

from ._rng import child_seed, rng_for
from .exceptions import (
    DegenerateStructureError,
    DegenerateWeightsError,
    InvalidParameterError,
    TuningFailedError,
)
from .model import as_array
from .solver import ArskOptions, fit, robust_bcss_all
from .wkmeans import kmeans


@dataclass(frozen=True)
class TuneConfig:
    """Gap search settings.

    ``lambda1_dagger`` is the fixed lambda1 used while scanning lambda2;
    None picks :func:`default_dagger`.  Grid points whose fit flags at least
    ``max_outlier_fraction`` of the rows are treated as infeasible.  The grid maxima default to the
    data-driven saturation points described in :func:`lambda_maxima`.
    """

    B: int = 25
    grid_size: int = 10
    decay: float = 0.5
    lambda1_dagger: float = None
    lambda1_max: float = None
    lambda2_max: float = None
    max_outlier_fraction: float = 0.5
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.B < 1:
            raise InvalidParameterError("B must be at least 1")
        if self.grid_size < 1:
            raise InvalidParameterError("grid_size must be at least 1")
        if not 0 < self.decay < 1:
            raise InvalidParameterError("decay must lie in (0, 1)")
        if self.lambda1_dagger is not None and not self.lambda1_dagger > 0:
            raise InvalidParameterError("lambda1_dagger must be positive")
        if not 0 < self.max_outlier_fraction <= 1:
            raise InvalidParameterError("max_outlier_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class GapPoint:
    lam: float
    gap: float
    feasible: bool
    n_outliers: int = -1
    n_weights: int = -1

    def to_dict(self):
        return {
            "lambda": self.lam,
            "gap": self.gap if self.feasible else None,
            "feasible": self.feasible,
            "outliers": self.n_outliers,
            "nonzero_weights": self.n_weights,
        }


@dataclass(frozen=True)
class TuneResult:
    lambda2_star: float
    lambda1_star: float
    gap_grid_2: tuple
    gap_grid_1: tuple
    lambda1_dagger: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "lambda2_star": self.lambda2_star,
            "lambda1_star": self.lambda1_star,
            "lambda1_dagger": self.lambda1_dagger,
            "lambda2_grid": [g.lam for g in self.gap_grid_2],
            "gap2": [g.gap if g.feasible else None for g in self.gap_grid_2],
            "lambda1_grid": [g.lam for g in self.gap_grid_1],
            "gap1": [g.gap if g.feasible else None for g in self.gap_grid_1],
            "diagnostics2": [g.to_dict() for g in self.gap_grid_2],
            "diagnostics1": [g.to_dict() for g in self.gap_grid_1],
        }


def permute_dataset(X, seed):
    """Permute every column independently (marginals kept, dependence destroyed)."""
    X = np.asarray(X, dtype=float)
    rng = rng_for(seed, "permute")
    out = np.empty_like(X)
    for j in range(X.shape[1]):
        out[:, j] = X[rng.permutation(X.shape[0]), j]
    return out


def robust_d(X, fit_result):
    """Weighted robust between-cluster sum of squares ``sum_j w_j Q_j^R``."""
    X = as_array(X)
    w = fit_result.weights.weights
    q = robust_bcss_all(X, fit_result.errors.values, fit_result.model)
    d = float(w @ q)
    if not d > 0:
        raise DegenerateStructureError(f"weighted robust BCSS is {d:g}; log undefined")
    return d


def make_grid(lambda_max, size, decay):
    """Geometric grid ``lambda_max * decay**t`` for t = 0..size-1, descending."""
    if size < 1:
        raise InvalidParameterError("grid size must be at least 1")
    if not lambda_max > 0:
        raise InvalidParameterError("lambda_max must be positive")
    return [float(lambda_max * decay ** t) for t in range(size)]


def lambda_maxima(X, K, arsk_opts):
    """Saturation points of the two thresholds on `X`.

    lambda2: the largest column BCSS of a plain k-means fit (any larger
    value zeroes every weight).  lambda1: the largest row distance from the
    grand mean.
    """
    X = as_array(X)
    km = kmeans(X, K, arsk_opts.kmeans.reseeded(child_seed(arsk_opts.seed, "lambda-max")))
    lam2 = float(np.max(robust_bcss_all(X, None, km.model)))
    lam1 = float(np.max(np.linalg.norm(X - X.mean(axis=0), axis=1)))
    return lam1, lam2


def default_dagger(X, decay):
    """Median row distance from the grand mean times ``decay**2``.

    The median rather than the maximum keeps the value on the scale of the
    clean rows when a minority of rows is contaminated.
    """
    X = as_array(X)
    return float(np.median(np.linalg.norm(X - X.mean(axis=0), axis=1))) * decay ** 2


def _log_d(X, opts):
    res = fit(X, opts)
    return math.log(robust_d(X, res)), res


def gap(X, K, lambda1, lambda2, cfg=TuneConfig(), arsk_opts=None, permuted=None):
    """Robust Gap at one ``(lambda1, lambda2)`` pair.

    Each of the B reference datasets is refit from scratch.  `permuted`
    overrides the reference datasets (used in tests).  Raises
    DegenerateWeightsError / DegenerateStructureError when the fit on `X`
    itself is degenerate; degenerate reference fits make the point
    infeasible and return ``nan``.
    """
    return _gap_point(as_array(X), K, lambda1, lambda2, cfg, arsk_opts, permuted)[0]


def _gap_point(X, K, lambda1, lambda2, cfg, arsk_opts, permuted):
    # fit seeds depend only on the dataset (original or reference b), never on
    # the grid point, so gaps at neighbouring lambdas share their randomness
    base = arsk_opts if arsk_opts is not None else ArskOptions(K=K)
    base = base.with_lambdas(lambda1, lambda2)
    if base.K != K:
        base = replace(base, K=K)
    log_d, res = _log_d(X, base.with_lambdas(seed=child_seed(cfg.seed, "orig")))
    refs = permuted
    if refs is None:
        refs = [permute_dataset(X, child_seed(cfg.seed, "perm", b)) for b in range(cfg.B)]
    logs = []
    for b, Xb in enumerate(refs):
        try:
            lb, _ = _log_d(Xb, base.with_lambdas(seed=child_seed(cfg.seed, "ref", b)))
        except (DegenerateWeightsError, DegenerateStructureError):
            return float("nan"), res
        logs.append(lb)
    return log_d - float(np.mean(logs)), res


def _eval_point(args):
    X, K, lam1, lam2, cfg, arsk_opts, lam = args
    try:
        g, res = _gap_point(X, K, lam1, lam2, cfg, arsk_opts, None)
    except (DegenerateWeightsError, DegenerateStructureError):
        return GapPoint(lam, float("nan"), False)
    # a fit that flags at least this share of rows has no majority cluster structure left
    broken = len(res.outlier_indices) >= cfg.max_outlier_fraction * X.shape[0]
    return GapPoint(
        lam,
        g,
        bool(np.isfinite(g)) and not broken,
        len(res.outlier_indices),
        int(np.count_nonzero(res.weights.weights)),
    )


def _sweep(jobs, workers):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_eval_point, jobs))
    return [_eval_point(j) for j in jobs]


def _argmax(points):
    """Largest feasible gap; ties go to the smaller lambda."""
    best = None
    for pt in points:
        if not pt.feasible:
            continue
        if best is None or pt.gap > best.gap or (pt.gap == best.gap and pt.lam < best.lam):
            best = pt
    return best


def tune(X, K, cfg=TuneConfig(), arsk_opts=None):
    """Pick lambda2 at fixed lambda1_dagger, then lambda1 at the chosen lambda2."""
    X = as_array(X)
    arsk_opts = arsk_opts if arsk_opts is not None else ArskOptions(K=K)
    lam1_max, lam2_max = lambda_maxima(X, K, arsk_opts)
    if cfg.lambda1_max is not None:
        lam1_max = cfg.lambda1_max
    if cfg.lambda2_max is not None:
        lam2_max = cfg.lambda2_max
    dagger = cfg.lambda1_dagger if cfg.lambda1_dagger is not None else default_dagger(X, cfg.decay)
    grid2 = make_grid(lam2_max, cfg.grid_size, cfg.decay)
    grid1 = make_grid(lam1_max, cfg.grid_size, cfg.decay)

    jobs = [(X, K, dagger, l2, cfg, arsk_opts, l2) for l2 in grid2]
    pts2 = _sweep(jobs, cfg.workers)
    best2 = _argmax(pts2)
    if best2 is None:
        raise TuningFailedError(
            f"every lambda2 in {grid2} was infeasible at lambda1={dagger:g}"
        )
    jobs = [(X, K, l1, best2.lam, cfg, arsk_opts, l1) for l1 in grid1]
    pts1 = _sweep(jobs, cfg.workers)
    best1 = _argmax(pts1)
    if best1 is None:
        raise TuningFailedError(
            f"every lambda1 in {grid1} was infeasible at lambda2={best2.lam:g}"
        )
    return TuneResult(
        lambda2_star=best2.lam,
        lambda1_star=best1.lam,
        gap_grid_2=tuple(pts2),
        gap_grid_1=tuple(pts1),
        lambda1_dagger=dagger,
        meta={"lambda1_max": lam1_max, "lambda2_max": lam2_max},
    )
