# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; mirrors wixup._kernels_py operation for operation."""

from libc.math cimport ceil, exp, floor, log

import numpy as np

NAME = "compiled"

TRUNCATION_SIGMAS = 9.0

cdef double _TRUNC = 9.0


def profile_accumulate(mus, int window_size, double sigma):
    """Superpose one unit-height Gaussian per mean over integer bins 0..W-1."""
    cdef double[::1] mv = np.ascontiguousarray(mus, dtype=np.float64)
    out = np.zeros(window_size, dtype=np.float64)
    cdef double[::1] values = out
    cdef double reach = _TRUNC * sigma
    cdef double mu, t
    cdef Py_ssize_t j, k, lo, hi
    for j in range(mv.shape[0]):
        mu = mv[j]
        lo = <Py_ssize_t>ceil(mu - reach)
        if lo < 0:
            lo = 0
        hi = <Py_ssize_t>floor(mu + reach)
        if hi > window_size - 1:
            hi = window_size - 1
        for k in range(lo, hi + 1):
            t = (k - mu) / sigma
            values[k] += exp(-0.5 * t * t)
    return out


cdef double _quad_log(double[::1] values, Py_ssize_t m, double x, bint* ok):
    cdef double f0 = values[m - 1]
    cdef double f1 = values[m]
    cdef double f2 = values[m + 1]
    cdef double l0, l1, l2, t
    if f0 <= 0.0 or f1 <= 0.0 or f2 <= 0.0:
        ok[0] = False
        return 0.0
    l0 = log(f0)
    l1 = log(f1)
    l2 = log(f2)
    t = x - m
    ok[0] = True
    return l1 + 0.5 * t * (l2 - l0) + 0.5 * t * t * (l2 - 2.0 * l1 + l0)


cdef double _height_at(double[::1] a, double[::1] b, double x,
                       Py_ssize_t i0, Py_ssize_t i1, Py_ssize_t n):
    cdef Py_ssize_t m
    cdef bint ok_a = False, ok_b = False
    cdef double la = 0.0, lb = 0.0, w, ha, hb
    if x - i0 <= 0.5:
        m = i0 if i0 - 1 >= 0 else i1
    else:
        m = i1 if i1 + 1 <= n - 1 else i0
    if m - 1 < 0 or m + 1 > n - 1:
        m = -1
    if m >= 0:
        la = _quad_log(a, m, x, &ok_a)
        lb = _quad_log(b, m, x, &ok_b)
    if ok_a and ok_b:
        return exp(0.5 * (la + lb))
    w = x - i0
    ha = a[i0] + w * (a[i1] - a[i0])
    hb = b[i0] + w * (b[i1] - b[i0])
    return 0.5 * (ha + hb)


cdef void _locate(double[::1] a, double[::1] b, Py_ssize_t i0, Py_ssize_t i1,
                  Py_ssize_t n, double* x_out, double* h_out):
    cdef double a0 = a[i0], a1 = a[i1], b0 = b[i0], b1 = b[i1]
    cdef double s0, s1, d0, d1, x
    if a0 > 0.0 and a1 > 0.0 and b0 > 0.0 and b1 > 0.0:
        s0 = log(a0) - log(b0)
        s1 = log(a1) - log(b1)
        x = i0 + s0 / (s0 - s1)
    else:
        d0 = a0 - b0
        d1 = a1 - b1
        x = i0 + d0 / (d0 - d1)
    x_out[0] = x
    h_out[0] = _height_at(a, b, x, i0, i1, n)


cdef double _run_height(double[::1] a, double x):
    cdef Py_ssize_t j0 = <Py_ssize_t>floor(x)
    if x == j0:
        return a[j0]
    if a[j0] > 0.0 and a[j0 + 1] > 0.0:
        return exp(0.5 * (log(a[j0]) + log(a[j0 + 1])))
    return 0.5 * (a[j0] + a[j0 + 1])


def intersection_scan(a_in, b_in, double eps):
    """Locate sign changes of a - b in one pass; see the reference kernel."""
    cdef double[::1] a = np.ascontiguousarray(a_in, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    if n != b.shape[0]:
        raise ValueError("profile length mismatch: %d vs %d" % (n, b.shape[0]))
    out_bins = []
    out_heights = []
    cdef int last_sign = 0, s
    cdef Py_ssize_t last_idx = -1, i
    cdef double d, x, h
    for i in range(n):
        d = a[i] - b[i]
        if d > 0.0:
            s = 1
        elif d < 0.0:
            s = -1
        else:
            continue
        if last_sign != 0 and s != last_sign:
            if i == last_idx + 1:
                _locate(a, b, last_idx, i, n, &x, &h)
            else:
                x = 0.5 * (last_idx + i)
                h = _run_height(a, x)
            if h > eps:
                out_bins.append(x)
                out_heights.append(h)
        last_sign = s
        last_idx = i
    return (
        np.asarray(out_bins, dtype=np.float64),
        np.asarray(out_heights, dtype=np.float64),
    )


def gaussian_weighted_average(queries, mus, columns, double sigma):
    """Average candidate columns with normalized Gaussian kernel weights."""
    cdef double[::1] q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef double[::1] m = np.ascontiguousarray(mus, dtype=np.float64)
    cdef double[:, ::1] cols = np.ascontiguousarray(columns, dtype=np.float64)
    cdef Py_ssize_t nq = q.shape[0]
    cdef Py_ssize_t p = m.shape[0]
    cdef Py_ssize_t c = cols.shape[1]
    out = np.zeros((nq, c), dtype=np.float64)
    if p == 0:
        return out
    cdef double[:, ::1] o = out
    cdef double inv2s2 = 1.0 / (2.0 * sigma * sigma)
    cdef double total, w, diff, best_d
    cdef Py_ssize_t k, j, col, best
    wbuf = np.empty(p, dtype=np.float64)
    cdef double[::1] weights = wbuf
    for k in range(nq):
        total = 0.0
        for j in range(p):
            diff = q[k] - m[j]
            w = exp(-diff * diff * inv2s2)
            weights[j] = w
            total += w
        if total == 0.0:
            best = 0
            best_d = abs(q[k] - m[0])
            for j in range(1, p):
                diff = abs(q[k] - m[j])
                if diff < best_d:
                    best_d = diff
                    best = j
            for col in range(c):
                o[k, col] = cols[best, col]
        else:
            for j in range(p):
                w = weights[j] / total
                for col in range(c):
                    o[k, col] += w * cols[j, col]
    return out
