"""Pure numpy implementation of the hot loops.

Mirrors ``_kernels.pyx`` call for call; used when the compiled extension is
unavailable or when ``ARSK_BACKEND=python`` is set.
"""
import numpy as np


def _sqdist(Y, C):
    diff = Y[:, None, :] - C[None, :, :]
    return np.einsum("ikj,ikj->ik", diff, diff)


def _means(Y, codes, K):
    counts = np.bincount(codes, minlength=K).astype(float)
    sums = np.zeros((K, Y.shape[1]))
    np.add.at(sums, codes, Y)
    return sums / np.maximum(counts, 1.0)[:, None], counts


def repair_empty(Y, codes, centers):
    """Reseed empty clusters at the point farthest from its own center.

    Modifies `codes` and `centers` in place and returns the number of
    clusters reseeded.
    """
    K = centers.shape[0]
    counts = np.bincount(codes, minlength=K)
    if counts.min() > 0:
        return 0
    diff = Y - centers[codes]
    dist = np.einsum("ij,ij->i", diff, diff)
    fixed = 0
    for k in range(K):
        if counts[k] > 0:
            continue
        cand = np.where(counts[codes] > 1, dist, -1.0)
        i = int(np.argmax(cand))
        if cand[i] < 0:
            break
        counts[codes[i]] -= 1
        codes[i] = k
        counts[k] = 1
        dist[i] = 0.0
        centers[k] = Y[i]
        fixed += 1
    return fixed


def lloyd(Y, centers0, max_iter, tol):
    """Lloyd iterations from the given centers.

    Returns ``(codes, centers, objective, trace)`` where `trace` holds the
    within-cluster sum of squares after every iteration.
    """
    Y = np.ascontiguousarray(Y, dtype=float)
    centers = np.array(centers0, dtype=float)
    K = centers.shape[0]
    codes = None
    trace = []
    for _ in range(max_iter):
        new_codes = np.argmin(_sqdist(Y, centers), axis=1)
        repair_empty(Y, new_codes, centers)
        centers, _ = _means(Y, new_codes, K)
        diff = Y - centers[new_codes]
        obj = float(np.einsum("ij,ij->", diff, diff))
        trace.append(obj)
        stable = codes is not None and np.array_equal(new_codes, codes)
        codes = new_codes
        if stable:
            break
        if len(trace) > 1 and trace[-2] - obj <= tol * trace[-2]:
            break
    return codes.astype(np.int64), centers, trace[-1], np.asarray(trace)


def kmeanspp(Y, K, u):
    """k-means++ seeding driven by the K uniforms in `u`."""
    n = Y.shape[0]
    centers = np.empty((K, Y.shape[1]))
    first = min(int(u[0] * n), n - 1)
    centers[0] = Y[first]
    diff = Y - centers[0]
    closest = np.einsum("ij,ij->i", diff, diff)
    for k in range(1, K):
        total = closest.sum()
        if total <= 0.0:
            idx = min(int(u[k] * n), n - 1)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), u[k] * total, side="right"))
            idx = min(idx, n - 1)
        centers[k] = Y[idx]
        diff = Y - centers[k]
        closest = np.minimum(closest, np.einsum("ij,ij->i", diff, diff))
    return centers


def kmeans_best(Y, K, u, max_iter, tol, extra_centers=None):
    """Best of ``len(u)`` k-means++ restarts (plus optional given starts).

    Ties on the objective keep the earliest start.  Returns
    ``(codes, centers, objective, trace, best_start)``.
    """
    Y = np.ascontiguousarray(Y, dtype=float)
    starts = [kmeanspp(Y, K, row) for row in u]
    if extra_centers is not None:
        starts.extend(np.asarray(extra_centers, dtype=float))
    best = None
    for s, c0 in enumerate(starts):
        res = lloyd(Y, c0, max_iter, tol)
        if best is None or res[2] < best[2]:
            best = res + (s,)
    return best


def e_update(Y, codes, K, E0, lam, a, is_scad, tol, max_iter):
    """Alternate cluster means and row-group thresholding.

    Minimizes ``0.5 * ||Y - E - M[codes]||^2 + sum_i P(||E_i||; lam)`` by
    block coordinate descent from `E0`.  Returns
    ``(E, M, trace, converged)``.
    """
    Y = np.ascontiguousarray(Y, dtype=float)
    E = np.array(E0, dtype=float)
    trace = []
    converged = False
    M = None
    for _ in range(max_iter):
        M, _ = _means(Y - E, codes, K)
        R = Y - M[codes]
        norms = np.sqrt(np.einsum("ij,ij->i", R, R))
        fac = _factors(norms, lam, a, is_scad)
        E = fac[:, None] * R
        resid = R - E
        enorm = fac * norms
        obj = 0.5 * float(np.einsum("ij,ij->", resid, resid)) + float(
            _penalty(enorm, lam, a, is_scad).sum()
        )
        trace.append(obj)
        if len(trace) > 1:
            prev = trace[-2]
            if abs(prev - obj) <= tol * max(abs(prev), 1e-300):
                converged = True
                break
    return E, M, np.asarray(trace), converged


def _factors(norms, lam, a, is_scad):
    with np.errstate(divide="ignore", invalid="ignore"):
        soft = np.where(norms > lam, 1.0 - lam / norms, 0.0)
        if not is_scad:
            return soft
        lam2 = a * lam / (a - 1.0)
        mid = (a - 1.0) / (a - 2.0) * np.where(norms > lam2, 1.0 - lam2 / norms, 0.0)
    return np.where(norms <= 2.0 * lam, soft, np.where(norms <= a * lam, mid, 1.0))


def _penalty(v, lam, a, is_scad):
    if not is_scad:
        return lam * v
    return np.where(
        v <= lam,
        lam * v,
        np.where(
            v <= a * lam,
            -(v * v - 2.0 * a * lam * v + lam * lam) / (2.0 * (a - 1.0)),
            (a + 1.0) * lam * lam / 2.0,
        ),
    )


def column_bcss(Y, codes, K):
    """Between-cluster sum of squares per column (total SS minus within SS)."""
    Y = np.asarray(Y, dtype=float)
    total = Y - Y.mean(axis=0)
    M, _ = _means(Y, codes, K)
    within = Y - M[codes]
    return np.einsum("ij,ij->j", total, total) - np.einsum("ij,ij->j", within, within)
