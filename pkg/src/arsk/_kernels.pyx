# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops in ``_kernels_py``.

Same signatures and return values as the numpy fallback.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef inline double _sq(const double[:, ::1] Y, Py_ssize_t i, double[:, ::1] C, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t j
    cdef double s = 0.0, d
    for j in range(Y.shape[1]):
        d = Y[i, j] - C[k, j]
        s += d * d
    return s


cdef Py_ssize_t _repair(const double[:, ::1] Y, cnp.int64_t[::1] codes, double[:, ::1] C,
                        cnp.int64_t[::1] counts, double[::1] dist) noexcept nogil:
    cdef Py_ssize_t n = Y.shape[0], K = C.shape[0], p = Y.shape[1]
    cdef Py_ssize_t i, k, j, best, fixed = 0
    cdef double bestd
    cdef bint any_empty = False
    for k in range(K):
        if counts[k] == 0:
            any_empty = True
    if not any_empty:
        return 0
    for i in range(n):
        dist[i] = _sq(Y, i, C, codes[i])
    for k in range(K):
        if counts[k] > 0:
            continue
        best = -1
        bestd = -1.0
        for i in range(n):
            if counts[codes[i]] > 1 and dist[i] > bestd:
                bestd = dist[i]
                best = i
        if best < 0:
            break
        counts[codes[best]] -= 1
        codes[best] = k
        counts[k] = 1
        dist[best] = 0.0
        for j in range(p):
            C[k, j] = Y[best, j]
        fixed += 1
    return fixed


def repair_empty(Y, codes, centers):
    cdef const double[:, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef cnp.int64_t[::1] cv = codes
    cdef double[:, ::1] Cv = centers
    counts = np.bincount(codes, minlength=centers.shape[0]).astype(np.int64)
    cdef cnp.int64_t[::1] cnt = counts
    dist = np.empty(Yv.shape[0])
    cdef double[::1] dv = dist
    return int(_repair(Yv, cv, Cv, cnt, dv))


cdef double _lloyd(const double[:, ::1] Y, double[:, ::1] C, cnp.int64_t[::1] codes,
                   cnp.int64_t[::1] counts, double[::1] dist, double[::1] trace,
                   Py_ssize_t max_iter, double tol, Py_ssize_t* n_iter) noexcept nogil:
    cdef Py_ssize_t n = Y.shape[0], p = Y.shape[1], K = C.shape[0]
    cdef Py_ssize_t it, i, k, j, bk
    cdef double d, bd, obj = 0.0, diff
    cdef bint changed
    for i in range(n):
        codes[i] = -1
    n_iter[0] = 0
    for it in range(max_iter):
        changed = False
        for k in range(K):
            counts[k] = 0
        for i in range(n):
            bk = 0
            bd = _sq(Y, i, C, 0)
            for k in range(1, K):
                d = _sq(Y, i, C, k)
                if d < bd:
                    bd = d
                    bk = k
            if codes[i] != bk:
                changed = True
                codes[i] = bk
            counts[bk] += 1
        if _repair(Y, codes, C, counts, dist) > 0:
            changed = True
        for k in range(K):
            for j in range(p):
                C[k, j] = 0.0
        for i in range(n):
            k = codes[i]
            for j in range(p):
                C[k, j] += Y[i, j]
        for k in range(K):
            for j in range(p):
                C[k, j] /= counts[k]
        obj = 0.0
        for i in range(n):
            k = codes[i]
            for j in range(p):
                diff = Y[i, j] - C[k, j]
                obj += diff * diff
        trace[it] = obj
        n_iter[0] = it + 1
        if it > 0 and not changed:
            break
        if it > 0 and trace[it - 1] - obj <= tol * trace[it - 1]:
            break
    return obj


def lloyd(Y, centers0, Py_ssize_t max_iter, double tol):
    Yc = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] Yv = Yc
    C = np.array(centers0, dtype=np.float64, order="C")
    cdef Py_ssize_t n = Yc.shape[0], K = C.shape[0], n_iter = 0
    codes = np.empty(n, dtype=np.int64)
    counts = np.empty(K, dtype=np.int64)
    dist = np.empty(n)
    trace = np.empty(max_iter)
    cdef double obj = _lloyd(Yv, C, codes, counts, dist, trace, max_iter, tol, &n_iter)
    return codes, C, obj, trace[:n_iter].copy()


cdef void _kmeanspp(const double[:, ::1] Y, double[:, ::1] C, const double[::1] u,
                    double[::1] closest) noexcept nogil:
    cdef Py_ssize_t n = Y.shape[0], p = Y.shape[1], K = C.shape[0]
    cdef Py_ssize_t i, j, k, idx
    cdef double total, target, acc, d
    idx = <Py_ssize_t>(u[0] * n)
    if idx > n - 1:
        idx = n - 1
    for j in range(p):
        C[0, j] = Y[idx, j]
    for i in range(n):
        closest[i] = _sq(Y, i, C, 0)
    for k in range(1, K):
        total = 0.0
        for i in range(n):
            total += closest[i]
        if total <= 0.0:
            idx = <Py_ssize_t>(u[k] * n)
            if idx > n - 1:
                idx = n - 1
        else:
            target = u[k] * total
            acc = 0.0
            idx = n - 1
            for i in range(n):
                acc += closest[i]
                if acc > target:
                    idx = i
                    break
        for j in range(p):
            C[k, j] = Y[idx, j]
        for i in range(n):
            d = _sq(Y, i, C, k)
            if d < closest[i]:
                closest[i] = d


def kmeanspp(Y, Py_ssize_t K, u):
    Yc = np.ascontiguousarray(Y, dtype=np.float64)
    C = np.empty((K, Yc.shape[1]))
    closest = np.empty(Yc.shape[0])
    _kmeanspp(Yc, C, np.ascontiguousarray(u, dtype=np.float64), closest)
    return C


def kmeans_best(Y, Py_ssize_t K, u, Py_ssize_t max_iter, double tol, extra_centers=None):
    Yc = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] Yv = Yc
    cdef Py_ssize_t n = Yc.shape[0], p = Yc.shape[1]
    U = np.ascontiguousarray(u, dtype=np.float64).reshape(-1, K)
    cdef const double[:, ::1] Uv = U
    cdef Py_ssize_t n_pp = U.shape[0], n_extra = 0, s, total, n_iter = 0
    if extra_centers is not None:
        extra = np.ascontiguousarray(extra_centers, dtype=np.float64).reshape(-1, K, p)
        n_extra = extra.shape[0]
    total = n_pp + n_extra
    C = np.empty((K, p))
    cdef double[:, ::1] Cv = C
    codes = np.empty(n, dtype=np.int64)
    counts = np.empty(K, dtype=np.int64)
    dist = np.empty(n)
    trace = np.empty(max_iter)
    best_codes = np.empty(n, dtype=np.int64)
    best_C = np.empty((K, p))
    best_trace = None
    cdef double obj, best_obj = 0.0
    cdef Py_ssize_t best_s = -1
    for s in range(total):
        if s < n_pp:
            _kmeanspp(Yv, Cv, Uv[s], dist)
        else:
            C[:, :] = extra[s - n_pp]
        obj = _lloyd(Yv, Cv, codes, counts, dist, trace, max_iter, tol, &n_iter)
        if best_s < 0 or obj < best_obj:
            best_obj = obj
            best_s = s
            best_codes[:] = codes
            best_C[:, :] = C
            best_trace = trace[:n_iter].copy()
    return best_codes, best_C, best_obj, best_trace, best_s


cdef inline double _factor(double norm, double lam, double a, bint is_scad) noexcept nogil:
    cdef double lam2
    if not is_scad or norm <= 2.0 * lam:
        if norm > lam:
            return 1.0 - lam / norm
        return 0.0
    if norm <= a * lam:
        lam2 = a * lam / (a - 1.0)
        if norm > lam2:
            return (a - 1.0) / (a - 2.0) * (1.0 - lam2 / norm)
        return 0.0
    return 1.0


cdef inline double _pen(double v, double lam, double a, bint is_scad) noexcept nogil:
    if not is_scad:
        return lam * v
    if v <= lam:
        return lam * v
    if v <= a * lam:
        return -(v * v - 2.0 * a * lam * v + lam * lam) / (2.0 * (a - 1.0))
    return (a + 1.0) * lam * lam / 2.0


def e_update(Y, codes, Py_ssize_t K, E0, double lam, double a, bint is_scad,
             double tol, Py_ssize_t max_iter):
    Yc = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] Yv = Yc
    cdef const cnp.int64_t[::1] cv = np.ascontiguousarray(codes, dtype=np.int64)
    E = np.array(E0, dtype=np.float64, order="C")
    cdef double[:, ::1] Ev = E
    cdef Py_ssize_t n = Yc.shape[0], p = Yc.shape[1]
    M = np.zeros((K, p))
    cdef double[:, ::1] Mv = M
    counts_arr = np.bincount(codes, minlength=K).astype(np.float64)
    cdef double[::1] cnt = counts_arr
    trace = np.empty(max_iter)
    cdef double[::1] tv = trace
    cdef Py_ssize_t it, i, j, k, n_iter = 0
    cdef double r, norm, f, obj, prev
    cdef bint converged = False
    with nogil:
        for it in range(max_iter):
            for k in range(K):
                for j in range(p):
                    Mv[k, j] = 0.0
            for i in range(n):
                k = cv[i]
                for j in range(p):
                    Mv[k, j] += Yv[i, j] - Ev[i, j]
            for k in range(K):
                if cnt[k] > 0:
                    for j in range(p):
                        Mv[k, j] /= cnt[k]
            obj = 0.0
            for i in range(n):
                k = cv[i]
                norm = 0.0
                for j in range(p):
                    r = Yv[i, j] - Mv[k, j]
                    norm += r * r
                norm = sqrt(norm)
                f = _factor(norm, lam, a, is_scad)
                for j in range(p):
                    Ev[i, j] = f * (Yv[i, j] - Mv[k, j])
                obj += 0.5 * (1.0 - f) * (1.0 - f) * norm * norm + _pen(f * norm, lam, a, is_scad)
            tv[it] = obj
            n_iter = it + 1
            if it > 0:
                prev = tv[it - 1]
                if fabs(prev - obj) <= tol * (fabs(prev) if fabs(prev) > 1e-300 else 1e-300):
                    converged = True
                    break
    return E, M, trace[:n_iter].copy(), converged


def column_bcss(Y, codes, Py_ssize_t K):
    Yc = np.ascontiguousarray(Y, dtype=np.float64)
    cdef const double[:, ::1] Yv = Yc
    cdef const cnp.int64_t[::1] cv = np.ascontiguousarray(codes, dtype=np.int64)
    cdef Py_ssize_t n = Yc.shape[0], p = Yc.shape[1], i, j, k
    mean = np.zeros(p)
    M = np.zeros((K, p))
    out = np.zeros(p)
    cdef double[::1] mv = mean
    cdef double[:, ::1] Mv = M
    cdef double[::1] ov = out
    cnt_arr = np.bincount(codes, minlength=K).astype(np.float64)
    cdef double[::1] cnt = cnt_arr
    cdef double d, e
    for i in range(n):
        k = cv[i]
        for j in range(p):
            mv[j] += Yv[i, j]
            Mv[k, j] += Yv[i, j]
    for j in range(p):
        mv[j] /= n
    for k in range(K):
        if cnt[k] > 0:
            for j in range(p):
                Mv[k, j] /= cnt[k]
    for i in range(n):
        k = cv[i]
        for j in range(p):
            d = Yv[i, j] - mv[j]
            e = Yv[i, j] - Mv[k, j]
            ov[j] += d * d - e * e
    return out
