"""Core value types shared across the package.

Arrays held by these objects are copied on construction and marked
read-only, so instances can be shared freely between workers.  Cluster
labels are 1-based everywhere outside the numerical kernels.
"""
from dataclasses import dataclass, field
import json

import numpy as np

from .exceptions import InvalidParameterError, InvalidInputError

LASSO = "lasso"
SCAD = "scad"
UNIT_NORM_TOL = 1e-10

_PENALTY_ALIASES = {"lasso": LASSO, "soft": LASSO, "scad": SCAD}


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _array_eq(a, b):
    return a.shape == b.shape and bool(np.array_equal(a, b))


@dataclass(frozen=True, eq=False)
class DataMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise InvalidInputError(f"data must be 2-dimensional, got shape {v.shape}")
        if v.shape[0] < 2 or v.shape[1] < 1:
            raise InvalidInputError(f"need n >= 2 and p >= 1, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("data contains non-finite entries")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def __eq__(self, other):
        return isinstance(other, DataMatrix) and _array_eq(self.values, other.values)


def as_array(X):
    """Return the float matrix behind `X`, validating plain arrays."""
    if isinstance(X, DataMatrix):
        return X.values
    return DataMatrix(X).values


@dataclass(frozen=True, eq=False)
class ClusterModel:
    """Partition into K nonempty clusters (labels in 1..K) plus centers."""

    labels: np.ndarray
    centers: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if labels.ndim != 1:
            raise InvalidInputError("labels must be a vector")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise InvalidInputError("labels must be integers")
        labels = labels.astype(np.int64)
        problems = _label_problems(labels, centers.shape[0])
        if problems:
            raise InvalidInputError("; ".join(problems))
        object.__setattr__(self, "labels", _frozen(labels, np.int64))
        object.__setattr__(self, "centers", _frozen(centers))

    @classmethod
    def from_codes(cls, codes, centers):
        """Build from 0-based kernel codes."""
        return cls(np.asarray(codes, dtype=np.int64) + 1, centers)

    @property
    def K(self):
        return self.centers.shape[0]

    @property
    def n(self):
        return self.labels.shape[0]

    @property
    def codes(self):
        return self.labels - 1

    @property
    def sizes(self):
        return np.bincount(self.codes, minlength=self.K)

    def __eq__(self, other):
        return (
            isinstance(other, ClusterModel)
            and _array_eq(self.labels, other.labels)
            and _array_eq(self.centers, other.centers)
        )


def _label_problems(labels, K):
    problems = []
    if K < 1:
        return ["labels: K must be at least 1"]
    if labels.size and (labels.min() < 1 or labels.max() > K):
        problems.append(f"labels: ids must lie in 1..{K}")
    else:
        missing = np.setdiff1d(np.arange(1, K + 1), labels)
        if missing.size:
            problems.append(f"labels: empty clusters {missing.tolist()}")
    return problems


@dataclass(frozen=True, eq=False)
class ErrorMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("error matrix contains non-finite entries")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def row_norms(self):
        return np.sqrt(np.einsum("ij,ij->i", self.values, self.values))

    @property
    def active_rows(self):
        """Indices (0-based) of rows with strictly positive norm."""
        return np.flatnonzero(self.row_norms > 0)

    def __eq__(self, other):
        return isinstance(other, ErrorMatrix) and _array_eq(self.values, other.values)


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Nonnegative weights on the unit L2 sphere.

    ``degenerate=True`` marks the all-zero terminal state, which is never
    returned from a successful fit.
    """

    weights: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidInputError("weights must be finite and nonnegative")
        if self.degenerate:
            if np.any(w != 0):
                raise InvalidInputError("degenerate weight vector must be all zero")
        elif abs(np.linalg.norm(w) - 1.0) > UNIT_NORM_TOL:
            raise InvalidInputError(
                f"unit-norm: weights have L2 norm {np.linalg.norm(w):.12g}, expected 1"
            )
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def uniform(cls, p):
        return cls(np.full(p, 1.0 / np.sqrt(p)))

    @classmethod
    def zeros(cls, p):
        return cls(np.zeros(p), degenerate=True)

    @property
    def p(self):
        return self.weights.shape[0]

    @property
    def support(self):
        return np.flatnonzero(self.weights > 0)

    def __eq__(self, other):
        return (
            isinstance(other, WeightVector)
            and self.degenerate == other.degenerate
            and _array_eq(self.weights, other.weights)
        )


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty kind plus its tuning parameter(s).

    ``kind`` is ``"lasso"`` (soft thresholding) or ``"scad"``; ``"soft"`` is
    accepted as an alias of ``"lasso"``.
    """

    kind: str = LASSO
    lam: float = 0.0
    a: float = 3.7

    def __post_init__(self):
        kind = _PENALTY_ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise InvalidParameterError(f"unknown penalty kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "a", float(self.a))
        if not self.lam >= 0 or not np.isfinite(self.lam):
            raise InvalidParameterError(f"lambda must be finite and nonnegative, got {self.lam}")
        if kind == SCAD and not self.a > 2:
            raise InvalidParameterError(f"SCAD parameter a must exceed 2, got {self.a}")

    def with_lambda(self, lam):
        return PenaltySpec(self.kind, lam, self.a)

    @property
    def label(self):
        return "soft" if self.kind == LASSO else "scad"


@dataclass(frozen=True, eq=False)
class FitResult:
    model: ClusterModel
    errors: ErrorMatrix
    weights: WeightVector
    outlier_indices: frozenset
    objective_trace: tuple = ()
    outer_iterations: int = 0
    converged: bool = False
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "outlier_indices", frozenset(int(i) for i in self.outlier_indices))
        object.__setattr__(self, "objective_trace", tuple(float(v) for v in self.objective_trace))

    @property
    def labels(self):
        return self.model.labels

    @property
    def outlier_mask(self):
        mask = np.zeros(self.model.n, dtype=bool)
        mask[list(self.outlier_indices)] = True
        return mask

    def __eq__(self, other):
        return (
            isinstance(other, FitResult)
            and self.model == other.model
            and self.errors == other.errors
            and self.weights == other.weights
            and self.outlier_indices == other.outlier_indices
            and self.objective_trace == other.objective_trace
            and self.outer_iterations == other.outer_iterations
            and self.converged == other.converged
        )

    def to_dict(self):
        """JSON-ready mapping; outlier ids are 0-based row indices."""
        return {
            "labels": self.model.labels.tolist(),
            "centers": self.model.centers.tolist(),
            "errors": self.errors.values.tolist(),
            "weights": self.weights.weights.tolist(),
            "outliers": sorted(self.outlier_indices),
            "objective_trace": list(self.objective_trace),
            "iterations": self.outer_iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            weights = np.asarray(d["weights"], dtype=float)
            return cls(
                model=ClusterModel(d["labels"], d["centers"]),
                errors=ErrorMatrix(d["errors"]),
                weights=WeightVector(weights, degenerate=not np.any(weights)),
                outlier_indices=d["outliers"],
                objective_trace=d.get("objective_trace", ()),
                outer_iterations=int(d.get("iterations", 0)),
                converged=bool(d.get("converged", False)),
            )
        except KeyError as exc:
            raise InvalidInputError(f"fit result is missing field {exc}") from None

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def validate(fit):
    """List every invariant violated by `fit` (empty when well formed).

    Works on objects that bypassed constructor checks, so each field is
    inspected directly rather than trusted.
    """
    out = []
    labels = np.asarray(fit.model.labels)
    centers = np.atleast_2d(np.asarray(fit.model.centers))
    out.extend(_label_problems(labels, centers.shape[0]))
    n = labels.shape[0]

    E = np.atleast_2d(np.asarray(fit.errors.values, dtype=float))
    if E.shape[0] != n:
        out.append(f"errors: expected {n} rows, got {E.shape[0]}")
    if not np.all(np.isfinite(E)):
        out.append("errors: non-finite entries")

    w = np.asarray(fit.weights.weights, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        out.append("weights: negative or non-finite entries")
    if getattr(fit.weights, "degenerate", False):
        out.append("weights: degenerate all-zero state")
    elif abs(np.linalg.norm(w) - 1.0) > UNIT_NORM_TOL:
        out.append(f"unit-norm: weight norm {np.linalg.norm(w):.6g} != 1")
    if E.ndim == 2 and E.shape[1] != w.shape[0]:
        out.append("errors: column count does not match weights")
    if centers.shape[1] != w.shape[0]:
        out.append("centers: column count does not match weights")

    if E.shape[0] == n:
        active = set(np.flatnonzero(np.sqrt((E ** 2).sum(axis=1)) > 0).tolist())
        if set(fit.outlier_indices) != active:
            out.append("outliers: indices differ from the active rows of the error matrix")
    return out
