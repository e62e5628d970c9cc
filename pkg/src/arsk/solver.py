"""Adaptively robust and sparse k-means: the block-coordinate outer loop.

Each outer iteration clusters the weighted, error-adjusted data, refits the
row-sparse error matrix for that partition, maps the errors back to the
original scale, and recomputes the variable weights from the robust
between-cluster sums of squares.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import _backend
from ._rng import child_seed
from .exceptions import DegenerateWeightsError, InvalidParameterError
from .model import (
    LASSO,
    SCAD,
    ClusterModel,
    ErrorMatrix,
    FitResult,
    PenaltySpec,
    WeightVector,
    as_array,
)
from .threshold import penalty_value, scalar_threshold
from .wkmeans import KMeansOptions, kmeans_weighted, weighted_data

RESTORE_MODES = ("sqrt", "linear")
WEIGHTINGS = ("linear", "sqrt")


@dataclass(frozen=True)
class ArskOptions:
    """Configuration of a single fit.

    ``penalty_E`` is the group penalty on error rows (lambda1) and
    ``penalty_w`` the scalar penalty on weights (lambda2).  ``weighting``
    scales the data by ``w_j`` or ``sqrt(w_j)`` before clustering and the
    error update; ``restore_mode`` divides the fitted errors by ``sqrt(w_j)``
    or ``w_j`` afterwards.
    """

    K: int = 3
    penalty_E: PenaltySpec = field(default_factory=lambda: PenaltySpec(LASSO, 1.0))
    penalty_w: PenaltySpec = field(default_factory=lambda: PenaltySpec(LASSO, 0.0))
    outer_tol: float = 1e-4
    max_outer_iter: int = 50
    inner_E_tol: float = 1e-6
    max_inner_E_iter: int = 100
    init_error_fraction: float = 0.8
    kmeans: KMeansOptions = field(default_factory=KMeansOptions)
    weighting: str = "linear"
    restore_mode: str = "sqrt"
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise InvalidParameterError("K must be at least 1")
        for name in ("outer_tol", "inner_E_tol"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.max_outer_iter < 1 or self.max_inner_E_iter < 1:
            raise InvalidParameterError("iteration limits must be at least 1")
        if not 0 <= self.init_error_fraction <= 1:
            raise InvalidParameterError("init_error_fraction must lie in [0, 1]")
        if self.restore_mode not in RESTORE_MODES:
            raise InvalidParameterError(f"restore_mode must be one of {RESTORE_MODES}")
        if self.weighting not in WEIGHTINGS:
            raise InvalidParameterError(f"weighting must be one of {WEIGHTINGS}")

    def with_lambdas(self, lambda1=None, lambda2=None, seed=None):
        kw = {}
        if lambda1 is not None:
            kw["penalty_E"] = self.penalty_E.with_lambda(lambda1)
        if lambda2 is not None:
            kw["penalty_w"] = self.penalty_w.with_lambda(lambda2)
        if seed is not None:
            kw["seed"] = seed
        return replace(self, **kw)


def _codes(model):
    return model.codes if isinstance(model, ClusterModel) else np.asarray(model) - 1


def bcss(x_col, model):
    """Between-cluster sum of squares of one column (total minus within SS)."""
    x = np.asarray(x_col, dtype=float).reshape(-1, 1)
    codes = _codes(model)
    K = int(codes.max()) + 1
    q = float(_backend.kernels.column_bcss(x, codes, K)[0])
    return q


def robust_bcss(x_col, e_col, model):
    """Between-cluster sum of squares of the error-adjusted column ``x - e``."""
    return bcss(np.asarray(x_col, float) - np.asarray(e_col, float), model)


def robust_bcss_all(X, E, model):
    """Vector of robust BCSS values, one per column."""
    codes = _codes(model)
    K = int(codes.max()) + 1
    Xa = np.asarray(X, float) - (0.0 if E is None else np.asarray(E, float))
    return _backend.kernels.column_bcss(np.ascontiguousarray(Xa), codes, K)


def _ev(E):
    return E.values if isinstance(E, ErrorMatrix) else np.asarray(E, float)


def _wv(w):
    return w.weights if isinstance(w, WeightVector) else np.asarray(w, float)


def full_objective(X, model, E, w, penalty_E, penalty_w):
    """Penalized objective: sum_j w_j Q_j^R - sum_i P1(||E_i||) - sum_j (P2(w_j) + w_j^2 / 2)."""
    X = as_array(X)
    E = _ev(E)
    w = _wv(w)
    pen_E = float(np.sum(penalty_value(penalty_E, np.linalg.norm(E, axis=1))))
    if not np.any(w):
        return -pen_E
    q = robust_bcss_all(X, E, model)
    pen_w = float(np.sum(penalty_value(penalty_w, w)))
    return float(w @ q) - pen_E - pen_w - 0.5 * float(w @ w)


def init_error_matrix(X, fraction=0.8, seed=None):
    """Copy the ``ceil(fraction n)`` rows farthest from the grand mean into E.

    Distance ties are broken by row index; `seed` is accepted for interface
    symmetry and unused, as the rule is deterministic.
    """
    X = as_array(X)
    n = X.shape[0]
    if not 0 <= fraction <= 1:
        raise InvalidParameterError("fraction must lie in [0, 1]")
    m = min(n, math.ceil(fraction * n - 1e-12))
    dist = np.linalg.norm(X - X.mean(axis=0), axis=1)
    order = np.argsort(-dist, kind="stable")
    E = np.zeros_like(X)
    E[order[:m]] = X[order[:m]]
    return ErrorMatrix(E)


def e_update_objective(Y, E, model_or_codes, spec):
    """Inner objective ``0.5 ||Y - E - M||^2 + sum_i P1(||E_i||)`` with M the cluster means of ``Y - E``."""
    Y = np.asarray(Y, float)
    E = np.asarray(E, float)
    codes = _codes(model_or_codes)
    K = int(codes.max()) + 1
    A = Y - E
    M = np.zeros((K, Y.shape[1]))
    np.add.at(M, codes, A)
    M /= np.bincount(codes, minlength=K)[:, None]
    r = A - M[codes]
    return 0.5 * float((r ** 2).sum()) + float(
        np.sum(penalty_value(spec, np.linalg.norm(E, axis=1)))
    )


def update_error_matrix_weighted(Y, model, E0, spec, tol=1e-6, max_iter=100, kernels=None):
    """Error update on already-weighted data `Y`, warm-started at `E0`.

    Returns ``(E, trace, converged)``; `trace` holds the inner objective
    after every sweep and is nonincreasing.
    """
    kern = kernels or _backend.kernels
    codes = _codes(model)
    K = int(codes.max()) + 1
    E, _, trace, converged = kern.e_update(
        np.ascontiguousarray(Y, dtype=float),
        np.ascontiguousarray(codes, dtype=np.int64),
        K,
        np.ascontiguousarray(E0, dtype=float),
        spec.lam,
        spec.a,
        spec.kind == SCAD,
        tol,
        max_iter,
    )
    return E, np.asarray(trace), bool(converged)


def update_error_matrix(X, model, weights, E_prev, spec, opts=ArskOptions()):
    """Refit the error matrix in the weighted space for a fixed partition.

    The weighted data is ``s_j X_ij`` with ``s_j = w_j`` (or ``sqrt(w_j)``);
    the previous errors enter in the same scale, so the first inner sweep
    starts from exactly the adjusted data that was clustered.  Returns
    ``(E_weighted, diagnostics)``.
    """
    X = as_array(X)
    w = _wv(weights)
    Yw = weighted_data(X, w, opts.weighting)
    Ew0 = weighted_data(_ev(E_prev), w, opts.weighting)
    E, trace, converged = update_error_matrix_weighted(
        Yw, model, Ew0, spec, opts.inner_E_tol, opts.max_inner_E_iter
    )
    return ErrorMatrix(E), {"inner_trace": trace, "inner_converged": converged}


def restore_error_matrix(E_weighted, weights, mode="sqrt"):
    """Map weighted errors back: divide column j by ``sqrt(w_j)`` (or ``w_j``); zero weights divide by one."""
    E = _ev(E_weighted)
    w = _wv(weights)
    div = np.sqrt(w) if mode == "sqrt" else w
    div = np.where(w > 0, div, 1.0)
    return ErrorMatrix(E / div)


def update_weights(Q_R, spec):
    """Threshold the robust BCSS values and project onto the unit sphere.

    Raises DegenerateWeightsError when every thresholded value is zero.
    """
    q = np.maximum(np.asarray(Q_R, dtype=float), 0.0)
    s = np.maximum(np.asarray(scalar_threshold(q, spec), dtype=float), 0.0)
    norm = float(np.linalg.norm(s))
    if norm == 0.0:
        raise DegenerateWeightsError(
            f"lambda2={spec.lam:g} eliminates every variable weight"
        )
    return WeightVector(s / norm)


def _relative_change(w_new, w_old):
    return float(np.abs(w_new - w_old).sum() / np.abs(w_old).sum())


def fit(X, opts=ArskOptions()):
    """Fit ARSK to the rows of `X`.

    Raises DegenerateWeightsError if lambda2 removes every variable and
    InvalidParameterError if K exceeds n.
    """
    X = as_array(X)
    n, p = X.shape
    if opts.K > n:
        raise InvalidParameterError(f"K={opts.K} exceeds n={n}")
    w = np.full(p, 1.0 / math.sqrt(p))
    E = _ev(init_error_matrix(X, opts.init_error_fraction))
    trace = []
    inner_ok = True
    converged = False
    model = None
    centers = None
    r = 0
    for r in range(1, opts.max_outer_iter + 1):
        km_opts = opts.kmeans.reseeded(child_seed(opts.seed, "outer", r))
        km = kmeans_weighted(X - E, w, opts.K, km_opts, opts.weighting, centers)
        model = km.model
        centers = model.centers
        Ew, diag = update_error_matrix(X, model, w, E, opts.penalty_E, opts)
        inner_ok &= diag["inner_converged"]
        E_new = restore_error_matrix(Ew, w, opts.restore_mode).values
        q = robust_bcss_all(X, E_new, model)
        w_new = update_weights(q, opts.penalty_w).weights
        trace.append(full_objective(X, model, E_new, w_new, opts.penalty_E, opts.penalty_w))
        change = _relative_change(w_new, w)
        E, w = E_new, w_new
        if change < opts.outer_tol:
            converged = True
            break
        # centers from the previous weights are a poor warm start once the scale changes
        centers = weighted_data(_cluster_means(X - E, model), w, opts.weighting)

    errors = ErrorMatrix(E)
    return FitResult(
        model=model,
        errors=errors,
        weights=WeightVector(w),
        outlier_indices=errors.active_rows.tolist(),
        objective_trace=trace,
        outer_iterations=r,
        converged=converged,
        diagnostics={"inner_converged": inner_ok},
    )


def _cluster_means(A, model):
    codes = model.codes
    M = np.zeros((model.K, A.shape[1]))
    np.add.at(M, codes, A)
    return M / np.bincount(codes, minlength=model.K)[:, None]
