# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the kernels in _pykernels."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()


cdef inline double _ppoly(const double[::1] x, const double[:, ::1] c, double u) noexcept nogil:
    cdef Py_ssize_t m = c.shape[1], k = c.shape[0], lo = 0, hi = m, mid, j
    # largest i with x[i] <= u, clipped to [0, m-1]
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if x[mid] <= u:
            lo = mid
        else:
            hi = mid
    cdef double s = u - x[lo], val = c[0, lo]
    for j in range(1, k):
        val = val * s + c[j, lo]
    return val


def eo_sweep(double[:, ::1] u, double lam, const double[::1] x, const double[:, ::1] cplus,
             const double[:, ::1] cminus):
    cdef Py_ssize_t nl = u.shape[0], n = u.shape[1], i, j
    out = np.empty((nl, n))
    cdef double[:, ::1] o = out
    cdef double[::1] F = np.empty(n)
    cdef double first_minus
    with nogil:
        for i in range(nl):
            first_minus = _ppoly(x, cminus, u[i, 0])
            for j in range(n - 1):
                F[j] = _ppoly(x, cplus, u[i, j]) + _ppoly(x, cminus, u[i, j + 1])
            F[n - 1] = _ppoly(x, cplus, u[i, n - 1]) + first_minus
            o[i, 0] = u[i, 0] - lam * (F[0] - F[n - 1])
            for j in range(1, n):
                o[i, j] = u[i, j] - lam * (F[j] - F[j - 1])
    return out


def superlevel_sum(ua, ub, w, levels):
    cdef const double[::1] a = np.ascontiguousarray(ua, dtype=np.float64).ravel()
    cdef const double[::1] b = np.ascontiguousarray(ub, dtype=np.float64).ravel()
    cdef const double[::1] ww = np.ascontiguousarray(w, dtype=np.float64).ravel()
    cdef const double[::1] lv = np.ascontiguousarray(np.atleast_1d(levels), dtype=np.float64)
    out = np.zeros(lv.shape[0])
    cdef double[::1] o = out
    cdef Py_ssize_t i, k, n = a.shape[0]
    cdef double v, acc, d, pa, pb
    with nogil:
        for i in range(lv.shape[0]):
            v = lv[i]
            acc = 0.0
            for k in range(n):
                d = b[k] - a[k]
                if fabs(d) < 1e-300:
                    if a[k] > v:
                        acc += ww[k]
                else:
                    pa = a[k] - v if a[k] > v else 0.0
                    pb = b[k] - v if b[k] > v else 0.0
                    acc += ww[k] * (pb - pa) / d
            o[i] = acc
    return out


cdef inline double _anti(double s, double lo, double width) noexcept nogil:
    cdef double t = s - lo
    if t <= 0:
        return 0.0
    if t < width:
        return 0.5 * t * t
    return width * (t - 0.5 * width)


def hypograph_sum(ua, ub, w, double lo, double width):
    cdef const double[::1] a = np.ascontiguousarray(ua, dtype=np.float64).ravel()
    cdef const double[::1] b = np.ascontiguousarray(ub, dtype=np.float64).ravel()
    cdef const double[::1] ww = np.ascontiguousarray(w, dtype=np.float64).ravel()
    cdef Py_ssize_t k, n = a.shape[0]
    cdef double acc = 0.0, d, m
    with nogil:
        for k in range(n):
            d = b[k] - a[k]
            if fabs(d) < 1e-12:
                m = 0.5 * (a[k] + b[k]) - lo
                if m < 0:
                    m = 0.0
                elif m > width:
                    m = width
                acc += ww[k] * m
            else:
                acc += ww[k] * (_anti(b[k], lo, width) - _anti(a[k], lo, width)) / d
    return acc
