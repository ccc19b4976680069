# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_fallback`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, floor, ceil, log, fabs, nearbyint

cnp.import_array()

# 2 pi split in two doubles; large arguments are reduced with them before sin()
cdef double TWO_PI_HI = 6.283185307179586
cdef double TWO_PI_LO = 2.4492935982947064e-16
cdef double INV_TWO_PI = 0.15915494309189535
cdef double REDUCE_ABOVE = 1e5
# past this half-phase a double holds no phase information (4 ulp > 1 rad)
cdef double PHASELESS_ABOVE = 1.125899906842624e15


cdef inline double _sin_reduced(double x) noexcept nogil:
    cdef double q
    if fabs(x) > REDUCE_ABOVE:
        q = nearbyint(x * INV_TWO_PI)
        x = (x - q * TWO_PI_HI) - q * TWO_PI_LO
    return sin(x)


cdef inline double _sin2(double x) noexcept nogil:
    cdef double t
    if fabs(x) >= PHASELESS_ABOVE:
        return 0.5
    t = _sin_reduced(x)
    return t * t


cdef inline void _neumaier(double x, double* s, double* c) noexcept nogil:
    cdef double t = s[0] + x
    if fabs(s[0]) >= fabs(x):
        c[0] += (s[0] - t) + x
    else:
        c[0] += (x - t) + s[0]
    s[0] = t


def omega2_series(kh, scales, weights):
    cdef double[::1] k = np.ascontiguousarray(kh, dtype=np.float64)
    cdef double[::1] sc = np.ascontiguousarray(scales, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = k.shape[0], m = sc.shape[0], i, j, peak
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double s, c, ln_n
    if m == 0:
        out[:] = 0.0
        return out
    ln_n = log(sc[1] / sc[0]) if m > 1 else 1.0
    with nogil:
        for i in range(n):
            s = 0.0
            c = 0.0
            if k[i] == 0.0:
                o[i] = 0.0
                continue
            # largest terms sit where kh * N**s ~ 1; add both tails inward to it
            peak = <Py_ssize_t>floor(-log(fabs(k[i]) * sc[0]) / ln_n) if m > 1 else 0
            if peak < 0:
                peak = 0
            if peak > m - 1:
                peak = m - 1
            for j in range(0, peak):
                _neumaier(w[j] * _sin2(0.5 * k[i] * sc[j]), &s, &c)
            j = m - 1
            while j >= peak:
                _neumaier(w[j] * _sin2(0.5 * k[i] * sc[j]), &s, &c)
                j -= 1
            o[i] = 4.0 * (s + c)
    return out


def shift_sum_lagrange(u, shifts, weights, int order):
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] sh = np.ascontiguousarray(shifts, dtype=np.float64)
    cdef double[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = uu.shape[0], ns = sh.shape[0]
    cdef Py_ssize_t q, j, i, jj, b, lo = -((order - 1) // 2)
    cdef int p, sg
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] o = out
    lw_arr = np.empty(order + 1, dtype=np.float64)
    cdef double[::1] lw = lw_arr
    cdef double pos, fr, acc, prod
    with nogil:
        for q in range(ns):
            for j in range(n):
                o[j] -= 2.0 * wt[q] * uu[j]
            for sg in range(2):
                pos = sh[q] if sg == 0 else -sh[q]
                b = <Py_ssize_t>floor(pos)
                fr = pos - b
                for i in range(order + 1):
                    prod = 1.0
                    for p in range(order + 1):
                        if p != i:
                            prod *= (fr - (lo + p)) / <double>(i - p)
                    lw[i] = prod
                for j in range(n):
                    acc = 0.0
                    for i in range(order + 1):
                        jj = (j + b + lo + i) % n
                        if jj < 0:
                            jj += n
                        acc += lw[i] * uu[jj]
                    o[j] += wt[q] * acc
    return out


def box_count(x, y, sizes):
    cdef double[::1] xx = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] ss = np.ascontiguousarray(sizes, dtype=np.float64)
    cdef Py_ssize_t n = xx.shape[0], m, j, col, ncol, prev
    cdef double eps, ymin, ymax, t, yb
    cdef long long total, lo, hi
    counts = np.empty(ss.shape[0], dtype=np.int64)
    cdef long long[::1] cnt = counts
    for m in range(ss.shape[0]):
        eps = ss[m]
        ncol = <Py_ssize_t>ceil(1.0 / eps - 1e-12)
        total = 0
        with nogil:
            prev = <Py_ssize_t>(xx[0] / eps)
            if prev > ncol - 1:
                prev = ncol - 1
            ymin = yy[0]
            ymax = yy[0]
            for j in range(1, n):
                col = <Py_ssize_t>(xx[j] / eps)
                if col > ncol - 1:
                    col = ncol - 1
                if col != prev:
                    t = (col * eps - xx[j - 1]) / (xx[j] - xx[j - 1])
                    yb = yy[j - 1] + t * (yy[j] - yy[j - 1])
                    if yb < ymin:
                        ymin = yb
                    if yb > ymax:
                        ymax = yb
                    lo = <long long>(ymin / eps)
                    hi = <long long>(ymax / eps)
                    if lo > ncol - 1:
                        lo = ncol - 1
                    if hi > ncol - 1:
                        hi = ncol - 1
                    total += hi - lo + 1
                    ymin = yb
                    ymax = yb
                    prev = col
                if yy[j] < ymin:
                    ymin = yy[j]
                if yy[j] > ymax:
                    ymax = yy[j]
            lo = <long long>(ymin / eps)
            hi = <long long>(ymax / eps)
            if lo > ncol - 1:
                lo = ncol - 1
            if hi > ncol - 1:
                hi = ncol - 1
            total += hi - lo + 1
        cnt[m] = total
    return counts
