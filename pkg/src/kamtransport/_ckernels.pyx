# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_pykernels.py``.

Signatures and operation order match the numpy versions so both backends
agree to rounding.
"""

import numpy as np
from libc.math cimport fabs, floor, fmax, fmin


def thomas(sub_in, diag_in, sup_in, rhs_in, double pivot_tol):
    cdef const double[::1] sub = np.ascontiguousarray(sub_in, dtype=np.float64)
    cdef const double[::1] diag = np.ascontiguousarray(diag_in, dtype=np.float64)
    cdef const double[::1] sup = np.ascontiguousarray(sup_in, dtype=np.float64)
    cdef const double[::1] rhs = np.ascontiguousarray(rhs_in, dtype=np.float64)
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double scale = 0.0, floor_, piv
    for i in range(sub.shape[0]):
        if fabs(sub[i]) > scale:
            scale = fabs(sub[i])
    for i in range(n):
        if fabs(diag[i]) > scale:
            scale = fabs(diag[i])
    for i in range(sup.shape[0]):
        if fabs(sup[i]) > scale:
            scale = fabs(sup[i])
    floor_ = pivot_tol * scale
    out = np.empty(n)
    cdef double[::1] x = out
    cdef double[::1] cp = np.empty(n)
    cdef double[::1] dp = np.empty(n)
    piv = diag[0]
    if fabs(piv) <= floor_:
        return out, False
    cp[0] = sup[0] / piv if n > 1 else 0.0
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i - 1] * cp[i - 1]
        if fabs(piv) <= floor_:
            return out, False
        cp[i] = sup[i] / piv if i < n - 1 else 0.0
        dp[i] = (rhs[i] - sub[i - 1] * dp[i - 1]) / piv
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return out, True


cdef inline double _sign(double v) nogil:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


cdef double _edge_slope(double d0, double d1) nogil:
    cdef double s = (3.0 * d0 - d1) / 2.0
    if _sign(s) != _sign(d0):
        return 0.0
    if _sign(d0) != _sign(d1) and fabs(s) > fabs(3.0 * d0):
        return 3.0 * d0
    return s


def pchip_slopes(y_in, double h):
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t i
    cdef double left, right
    out = np.zeros(n)
    cdef double[::1] d = out
    if n == 2:
        d[0] = (y[1] - y[0]) / h
        d[1] = d[0]
        return out
    for i in range(1, n - 1):
        left = (y[i] - y[i - 1]) / h
        right = (y[i + 1] - y[i]) / h
        if left * right > 0.0:
            d[i] = 2.0 / (1.0 / left + 1.0 / right)
        else:
            d[i] = 0.0
    d[0] = _edge_slope((y[1] - y[0]) / h, (y[2] - y[1]) / h)
    d[n - 1] = _edge_slope((y[n - 1] - y[n - 2]) / h, (y[n - 2] - y[n - 3]) / h)
    return out


cdef inline Py_ssize_t _cell(double a, double h, Py_ssize_t n, double x) nogil:
    cdef double kf = floor((x - a) / h)
    if kf < 0.0:
        return 0
    if kf > n - 2:
        return n - 2
    return <Py_ssize_t>kf


cdef inline double _hermite(const double[::1] y, const double[::1] d, double h,
                            Py_ssize_t k, double t) nogil:
    cdef double t2 = t * t
    cdef double t3 = t2 * t
    cdef double h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    cdef double h10 = t3 - 2.0 * t2 + t
    cdef double h01 = -2.0 * t3 + 3.0 * t2
    cdef double h11 = t3 - t2
    return y[k] * h00 + h * d[k] * h10 + y[k + 1] * h01 + h * d[k + 1] * h11


cdef inline double _hermite_deriv(const double[::1] y, const double[::1] d, double h,
                                  Py_ssize_t k, double t) nogil:
    cdef double t2 = t * t
    cdef double g00 = 6.0 * t2 - 6.0 * t
    cdef double g10 = 3.0 * t2 - 4.0 * t + 1.0
    cdef double g01 = -6.0 * t2 + 6.0 * t
    cdef double g11 = 3.0 * t2 - 2.0 * t
    return (y[k] * g00 + y[k + 1] * g01) / h + d[k] * g10 + d[k + 1] * g11


def _flat(xq):
    arr = np.ascontiguousarray(xq, dtype=np.float64)
    return arr.reshape(-1), arr.shape


def linear_eval(y_in, double a, double h, xq_in, bint linear_extrap):
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    flat, shape = _flat(xq_in)
    cdef const double[::1] xq = flat
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t m = xq.shape[0]
    cdef Py_ssize_t i, k
    cdef double b = a + (n - 1) * h
    cdef double s0 = (y[1] - y[0]) / h
    cdef double s1 = (y[n - 1] - y[n - 2]) / h
    cdef double x, t
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            x = xq[i]
            if x <= a:
                o[i] = y[0] + s0 * (x - a) if linear_extrap else y[0]
            elif x >= b:
                o[i] = y[n - 1] + s1 * (x - b) if linear_extrap else y[n - 1]
            else:
                k = _cell(a, h, n, x)
                t = (x - (a + k * h)) / h
                o[i] = y[k] * (1.0 - t) + y[k + 1] * t
    return out.reshape(shape)


def hermite_eval(y_in, d_in, double a, double h, xq_in, bint linear_extrap):
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(d_in, dtype=np.float64)
    flat, shape = _flat(xq_in)
    cdef const double[::1] xq = flat
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t m = xq.shape[0]
    cdef Py_ssize_t i, k
    cdef double b = a + (n - 1) * h
    cdef double s0 = (y[1] - y[0]) / h
    cdef double s1 = (y[n - 1] - y[n - 2]) / h
    cdef double x, t
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            x = xq[i]
            if x <= a:
                o[i] = y[0] + s0 * (x - a) if linear_extrap else y[0]
            elif x >= b:
                o[i] = y[n - 1] + s1 * (x - b) if linear_extrap else y[n - 1]
            else:
                k = _cell(a, h, n, x)
                t = (x - (a + k * h)) / h
                o[i] = _hermite(y, d, h, k, t)
    return out.reshape(shape)


cdef inline Py_ssize_t _search(const double[::1] y, double target) nogil:
    # largest k in [0, n-2] with y[k] <= target (y increasing)
    cdef Py_ssize_t lo = 0, hi = y.shape[0] - 1, mid
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if y[mid] <= target:
            lo = mid
        else:
            hi = mid
    return lo


def linear_invert(y_in, double a, double h, targets_in, bint linear_extrap):
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    flat, shape = _flat(targets_in)
    cdef const double[::1] tg = flat
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t m = tg.shape[0]
    cdef Py_ssize_t i, k
    cdef double b = a + (n - 1) * h
    cdef double s0 = (y[1] - y[0]) / h
    cdef double s1 = (y[n - 1] - y[n - 2]) / h
    cdef double t, xk
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            t = tg[i]
            if t <= y[0]:
                o[i] = a + (t - y[0]) / s0 if linear_extrap else a
            elif t >= y[n - 1]:
                o[i] = b + (t - y[n - 1]) / s1 if linear_extrap else b
            else:
                k = _search(y, t)
                xk = a + k * h
                if t == y[k]:
                    o[i] = xk
                else:
                    o[i] = xk + h * (t - y[k]) / (y[k + 1] - y[k])
    return out.reshape(shape)


def hermite_invert(y_in, d_in, double a, double h, targets_in, double tol,
                   int maxiter, bint linear_extrap):
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(d_in, dtype=np.float64)
    flat, shape = _flat(targets_in)
    cdef const double[::1] tg = flat
    cdef Py_ssize_t n = y.shape[0]
    cdef Py_ssize_t m = tg.shape[0]
    cdef Py_ssize_t i, k
    cdef int it
    cdef double b = a + (n - 1) * h
    cdef double s0 = (y[1] - y[0]) / h
    cdef double s1 = (y[n - 1] - y[n - 2]) / h
    cdef double t, lo, hi, mid, f, g, width, s, cand, xk
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for i in range(m):
            t = tg[i]
            if t <= y[0]:
                o[i] = a + (t - y[0]) / s0 if linear_extrap else a
                continue
            if t >= y[n - 1]:
                o[i] = b + (t - y[n - 1]) / s1 if linear_extrap else b
                continue
            k = _search(y, t)
            xk = a + k * h
            if t == y[k]:
                o[i] = xk
                continue
            lo = 0.0
            hi = 1.0
            width = 1.0
            it = 0
            while width * h > tol and it < maxiter:
                mid = 0.5 * (lo + hi)
                f = _hermite(y, d, h, k, mid) - t
                if f < 0.0:
                    lo = mid
                else:
                    hi = mid
                width *= 0.5
                it += 1
            s = 0.5 * (lo + hi)
            f = _hermite(y, d, h, k, s) - t
            g = _hermite_deriv(y, d, h, k, s)
            if g > 0.0:
                cand = fmin(fmax(s - f / (g * h), lo), hi)
                if fabs(_hermite(y, d, h, k, cand) - t) < fabs(f):
                    s = cand
            o[i] = xk + s * h
    return out.reshape(shape)
