"""Contaminated Gaussian mixture generator with sparse informative means."""
from dataclasses import dataclass, asdict

import numpy as np

from ._rng import rng_for
from .exceptions import InvalidParameterError
from .model import DataMatrix

IDENTITY = "identity"
ROTATED = "rotated"


@dataclass(frozen=True)
class SimConfig:
    K: int = 3
    n_per_cluster: int = 50
    p: int = 50
    q: int = 5
    pi: float = 0.0
    covariance: str = IDENTITY
    seed: int = 0

    def __post_init__(self):
        if self.K < 1 or self.n_per_cluster < 1 or self.p < 1:
            raise InvalidParameterError("K, n_per_cluster and p must be positive")
        if not 0 <= self.q <= self.p:
            raise InvalidParameterError(f"need 0 <= q <= p, got q={self.q}, p={self.p}")
        if not 0 <= self.pi <= 1:
            raise InvalidParameterError(f"pi must lie in [0, 1], got {self.pi}")
        if self.covariance not in (IDENTITY, ROTATED):
            raise InvalidParameterError(f"unknown covariance {self.covariance!r}")

    @property
    def n(self):
        return self.K * self.n_per_cluster

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SimDataset:
    X: DataMatrix
    true_labels: np.ndarray
    outlier_flags: np.ndarray
    informative_set: frozenset
    true_means: np.ndarray
    config: SimConfig

    def truth_dict(self):
        """Ground-truth sidecar: 1-based labels, 0-based variable and row ids."""
        return {
            "labels": self.true_labels.tolist(),
            "outlier_flags": [bool(f) for f in self.outlier_flags],
            "informative_set": sorted(self.informative_set),
            "true_means": self.true_means.tolist(),
            "config": self.config.to_dict(),
        }


def _two_sided_uniform(rng, size, lo, hi):
    mag = rng.uniform(lo, hi, size=size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    return sign * mag


def gen_means(K, p, q, seed):
    """K x p means: q shared informative columns with entries from U(-6,-3) or U(3,6).

    Returns ``(means, informative)`` with 0-based informative column ids.
    """
    if not 0 <= q <= p:
        raise InvalidParameterError(f"need 0 <= q <= p, got q={q}, p={p}")
    rng = rng_for(seed, "means")
    informative = np.sort(rng.choice(p, size=q, replace=False))
    means = np.zeros((K, p))
    means[:, informative] = _two_sided_uniform(rng, (K, q), 3.0, 6.0)
    return means, frozenset(int(j) for j in informative)


def random_rotation(p, rng):
    """Haar-distributed orthogonal matrix (QR of a Gaussian, sign-fixed)."""
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def gen_covariance(p, kind, seed):
    """Identity, or ``Q R Q^T`` with equicorrelation R (rho ~ U(0.1, 1)) and random rotation Q."""
    if kind == IDENTITY:
        return np.eye(p)
    if kind != ROTATED:
        raise InvalidParameterError(f"unknown covariance {kind!r}")
    rng = rng_for(seed, "covariance")
    while True:
        rho = rng.uniform(0.1, 1.0)
        if rho < 1.0:
            break
    R = np.full((p, p), rho)
    np.fill_diagonal(R, 1.0)
    Q = random_rotation(p, rng)
    S = Q @ R @ Q.T
    return 0.5 * (S + S.T)


def gen_dataset(cfg):
    """Draw one dataset; each row is an outlier independently with probability pi.

    Outliers are shifted on every coordinate by an offset drawn from
    U(-13,-7) or U(7,13).
    """
    means, informative = gen_means(cfg.K, cfg.p, cfg.q, cfg.seed)
    cov = gen_covariance(cfg.p, cfg.covariance, cfg.seed)
    rng = rng_for(cfg.seed, "observations")
    labels = np.repeat(np.arange(1, cfg.K + 1), cfg.n_per_cluster)
    n = labels.size
    flags = rng.random(n) < cfg.pi
    if cfg.covariance == IDENTITY:
        noise = rng.standard_normal((n, cfg.p))
    else:
        noise = rng.multivariate_normal(np.zeros(cfg.p), cov, size=n, method="eigh")
    offsets = _two_sided_uniform(rng, (n, cfg.p), 7.0, 13.0)
    X = means[labels - 1] + noise + np.where(flags[:, None], offsets, 0.0)
    return SimDataset(
        X=DataMatrix(X),
        true_labels=labels,
        outlier_flags=flags,
        informative_set=informative,
        true_means=means,
        config=cfg,
    )
