"""Clustering error rate, variable-selection rates and outlier confusion counts."""
import numpy as np

from .exceptions import InvalidInputError
from .model import WeightVector


def _pair_counts(labels):
    _, counts = np.unique(labels, return_counts=True)
    counts = counts.astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def cer(truth, predicted):
    """Fraction of observation pairs whose co-membership differs between two partitions.

    Computed from the contingency table: disagreeing pairs are
    ``same(truth) + same(pred) - 2 * same(both)``.
    """
    a = np.asarray(truth)
    b = np.asarray(predicted)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError(f"label vectors differ in shape: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise InvalidInputError("CER needs at least two observations")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    joint = ia.astype(np.int64) * (ib.max() + 1) + ib
    both = _pair_counts(joint)
    disagree = _pair_counts(ia) + _pair_counts(ib) - 2 * both
    return disagree / (n * (n - 1) // 2)


def cer_bruteforce(truth, predicted):
    """O(n^2) pair enumeration; reference for :func:`cer`."""
    a = np.asarray(truth)
    b = np.asarray(predicted)
    if a.shape != b.shape:
        raise InvalidInputError("label vectors differ in shape")
    n = a.size
    bad = 0
    for i in range(n):
        for j in range(i + 1, n):
            bad += (a[i] == a[j]) != (b[i] == b[j])
    return bad / (n * (n - 1) // 2)


def with_outlier_cluster(labels, outliers, K):
    """Relabel the given rows (boolean mask or index collection) as cluster K+1."""
    labels = np.array(labels, copy=True)
    mask = _as_mask(outliers, labels.size)
    labels[mask] = K + 1
    return labels


def _as_mask(outliers, n):
    arr = np.asarray(list(outliers) if isinstance(outliers, (set, frozenset)) else outliers)
    if arr.dtype == bool:
        if arr.size != n:
            raise InvalidInputError("outlier mask length does not match labels")
        return arr
    mask = np.zeros(n, dtype=bool)
    if arr.size:
        idx = arr.astype(np.int64)
        if idx.min() < 0 or idx.max() >= n:
            raise InvalidInputError("outlier index out of range")
        mask[idx] = True
    return mask


def cer_with_outliers(truth_labels, truth_flags, predicted_labels, predicted_outliers, K):
    """CER after moving true and detected outliers into an extra cluster K+1."""
    truth_labels = np.asarray(truth_labels)
    predicted_labels = np.asarray(predicted_labels)
    if truth_labels.shape != predicted_labels.shape:
        raise InvalidInputError("truth and prediction lengths differ")
    t = with_outlier_cluster(truth_labels, truth_flags, K)
    p = with_outlier_cluster(predicted_labels, predicted_outliers, K)
    return cer(t, p)


def tpr_tnr(weights, informative_set, p=None):
    """Share of informative variables with positive weight and of noise variables with zero weight.

    Variable ids in `informative_set` are 0-based.  TPR is 1 when there are
    no informative variables and TNR is 1 when every variable is informative.
    """
    if isinstance(weights, WeightVector):
        w = weights.weights
    else:
        w = np.asarray(weights, dtype=float)
    p = w.size if p is None else p
    if w.size != p:
        raise InvalidInputError("weight length does not match p")
    inf = np.zeros(p, dtype=bool)
    idx = np.fromiter(informative_set, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= p):
        raise InvalidInputError("informative index out of range")
    inf[idx] = True
    q = int(inf.sum())
    active = w > 0
    tpr = 1.0 if q == 0 else float(np.sum(active & inf)) / q
    tnr = 1.0 if q == p else float(np.sum(~active & ~inf)) / (p - q)
    return tpr, tnr


def outlier_confusion(truth_flags, detected):
    """``(true_pos, false_pos, false_neg, detected_count)`` for detected rows (0-based ids)."""
    flags = np.asarray(truth_flags, dtype=bool)
    det = _as_mask(detected, flags.size)
    tp = int(np.sum(flags & det))
    fp = int(np.sum(~flags & det))
    fn = int(np.sum(flags & ~det))
    return tp, fp, fn, int(det.sum())
