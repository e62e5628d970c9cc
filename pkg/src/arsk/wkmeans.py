"""Weighted Lloyd k-means plus the k-means and trimmed k-means baselines."""
from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np

from . import _backend
from ._rng import rng_for
from .exceptions import DegenerateWeightsError, InvalidParameterError
from .model import ClusterModel, WeightVector, as_array

KMEANS_PP = "kmeans++"
RANDOM_PARTITION = "random"


@dataclass(frozen=True)
class KMeansOptions:
    restarts: int = 20
    max_iter: int = 100
    tol: float = 1e-8
    init: str = KMEANS_PP
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise InvalidParameterError("restarts must be at least 1")
        if self.max_iter < 1:
            raise InvalidParameterError("max_iter must be at least 1")
        if not self.tol > 0:
            raise InvalidParameterError("tol must be positive")
        if self.init not in (KMEANS_PP, RANDOM_PARTITION):
            raise InvalidParameterError(f"unknown init {self.init!r}")

    def reseeded(self, seed):
        return KMeansOptions(self.restarts, self.max_iter, self.tol, self.init, seed)


class KMeansFit(NamedTuple):
    model: ClusterModel
    objective: float
    trace: np.ndarray


def _random_partition_centers(Y, K, rng):
    n = Y.shape[0]
    codes = rng.integers(K, size=n)
    codes[rng.permutation(n)[:K]] = np.arange(K)
    centers = np.zeros((K, Y.shape[1]))
    np.add.at(centers, codes, Y)
    return centers / np.bincount(codes, minlength=K)[:, None]


def kmeans(Y, K, opts=KMeansOptions(), init_centers=None, kernels=None):
    """Best-of-restarts Lloyd k-means on the rows of `Y`.

    `init_centers` adds one extra start after the random ones (used to warm
    start from a previous partition).
    """
    Y = np.ascontiguousarray(Y, dtype=float)
    n = Y.shape[0]
    if not 1 <= K <= n:
        raise InvalidParameterError(f"need 1 <= K <= n, got K={K}, n={n}")
    kern = kernels or _backend.kernels
    rng = rng_for(opts.seed, "kmeans")
    extra = []
    if opts.init == KMEANS_PP:
        u = rng.random((opts.restarts, K))
    else:
        u = np.empty((0, K))
        extra = [_random_partition_centers(Y, K, rng) for _ in range(opts.restarts)]
    if init_centers is not None:
        extra.append(np.asarray(init_centers, dtype=float))
    extra = np.asarray(extra, dtype=float).reshape(len(extra), K, Y.shape[1])
    codes, centers, obj, trace, _ = kern.kmeans_best(
        Y, K, u, opts.max_iter, opts.tol, extra if len(extra) else None
    )
    return KMeansFit(ClusterModel.from_codes(codes, centers), float(obj), np.asarray(trace))


def weighted_data(X_adj, weights, weighting="linear"):
    """Scale column j by ``w_j`` (``"linear"``) or ``sqrt(w_j)`` (``"sqrt"``)."""
    w = weights.weights if isinstance(weights, WeightVector) else np.asarray(weights, float)
    scale = w if weighting == "linear" else np.sqrt(w)
    return as_array(X_adj) * scale


def lloyd_weighted(X_adj, weights, K, opts=KMeansOptions(), weighting="linear", init_centers=None):
    """Cluster the weighted data ``w_j * X_adj[:, j]``.

    Zero-weight columns are constant zero after weighting, so they are
    dropped from the distance computations; the returned centers live in the
    full weighted space.
    """
    w = weights.weights if isinstance(weights, WeightVector) else np.asarray(weights, float)
    if not np.any(w > 0):
        raise DegenerateWeightsError("all variable weights are zero")
    return kmeans_weighted(X_adj, w, K, opts, weighting, init_centers).model


def kmeans_weighted(X_adj, w, K, opts=KMeansOptions(), weighting="linear", init_centers=None):
    Y = weighted_data(X_adj, w, weighting)
    keep = np.flatnonzero(w > 0)
    sub = None if init_centers is None else np.asarray(init_centers)[:, keep]
    fit = kmeans(Y[:, keep], K, opts, sub)
    centers = np.zeros((K, Y.shape[1]))
    centers[:, keep] = fit.model.centers
    return KMeansFit(ClusterModel(fit.model.labels, centers), fit.objective, fit.trace)


def empty_cluster_repair(labels, centers, X_adj):
    """Reseed empty clusters at the farthest point from its assigned center.

    `labels` are 1-based and may leave some of the ``len(centers)`` clusters
    empty.  Returns repaired ``(labels, centers)`` copies; the input is
    returned unchanged when every cluster is occupied.
    """
    Y = as_array(X_adj)
    codes = np.asarray(labels, dtype=np.int64) - 1
    centers = np.array(centers, dtype=float)
    codes = codes.copy()
    _backend.kernels.repair_empty(Y, codes, centers)
    return codes + 1, centers


def within_ss(Y, labels):
    """Within-cluster sum of squares of `Y` under 1-based `labels`."""
    Y = np.asarray(Y, dtype=float)
    labels = np.asarray(labels)
    total = 0.0
    for k in np.unique(labels):
        part = Y[labels == k]
        total += float(((part - part.mean(axis=0)) ** 2).sum())
    return total


def trimmed_kmeans(X, K, alpha, opts=KMeansOptions()):
    """Trimmed k-means: repeatedly discard the ``ceil(alpha n)`` worst-fitting points.

    Each start alternates trimming the points farthest from their nearest
    center, recomputing centers on the kept points, and reassigning, until
    the trimmed set and the labels settle.  The starts are the ordinary
    k-means solution plus ``opts.restarts`` sets of K distinct random rows;
    the start with the smallest trimmed within-cluster sum of squares wins.
    Trimmed points keep the label of their nearest center.  Returns
    ``(model, outliers)`` with 0-based outlier row indices.
    """
    X = as_array(X)
    n = X.shape[0]
    if not 0 <= alpha < 1:
        raise InvalidParameterError(f"alpha must lie in [0, 1), got {alpha}")
    m = math.ceil(alpha * n - 1e-12)
    if K > n - m:
        raise InvalidParameterError(f"K={K} exceeds the {n - m} retained points")
    base = kmeans(X, K, opts).model
    if m == 0:
        return base, frozenset()

    rng = rng_for(opts.seed, "trimmed")
    starts = [base.centers] + [X[rng.choice(n, K, replace=False)] for _ in range(opts.restarts)]
    best = None
    for c0 in starts:
        res = _trim_from(X, K, m, np.array(c0, dtype=float), opts.max_iter)
        if best is None or res[2] < best[2]:
            best = res
    codes, trimmed, _, centers = best
    # repair_empty leaves every cluster with at least one kept member
    model = ClusterModel.from_codes(codes, centers)
    return model, frozenset(int(i) for i in trimmed)


def _trim_from(X, K, m, centers, max_iter):
    n = X.shape[0]
    kern = _backend.kernels
    codes = trimmed = None
    for _ in range(max_iter):
        diff = X[:, None, :] - centers[None]
        d = np.einsum("ikj,ikj->ik", diff, diff)
        new_codes = np.argmin(d, axis=1)
        dmin = d[np.arange(n), new_codes]
        order = np.argsort(-dmin, kind="stable")
        new_trimmed = np.sort(order[:m])
        keep = np.setdiff1d(np.arange(n), new_trimmed)
        kc = new_codes[keep].copy()
        kern.repair_empty(X[keep], kc, centers)
        new_codes[keep] = kc
        for k in range(K):
            centers[k] = X[keep][kc == k].mean(axis=0)
        done = (
            codes is not None
            and np.array_equal(new_codes, codes)
            and np.array_equal(new_trimmed, trimmed)
        )
        codes, trimmed = new_codes, new_trimmed
        if done:
            break
    keep = np.setdiff1d(np.arange(n), trimmed)
    resid = X[keep] - centers[codes[keep]]
    return codes, trimmed, float(np.einsum("ij,ij->", resid, resid)), centers
