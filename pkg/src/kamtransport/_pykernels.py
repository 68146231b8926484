"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same floating point operation order; the compiled module is used
when it is importable (see ``kernels.py``).

Conventions: a uniform grid is described by its left node ``a``, spacing
``h`` and node count ``n = len(y)``.  ``linear_extrap`` selects linear
extrapolation with the end secant slope instead of clamping.
"""

import numpy as np


def thomas(sub, diag, sup, rhs, pivot_tol):
    """Solve a tridiagonal system without pivoting.

    Returns ``(x, ok)``.  ``ok`` is False, and ``x`` meaningless, when a pivot
    falls below ``pivot_tol`` times the largest band magnitude.
    """
    n = diag.shape[0]
    scale = 0.0
    for band in (sub, diag, sup):
        if band.shape[0]:
            scale = max(scale, float(np.max(np.abs(band))))
    floor = pivot_tol * scale
    cp = np.empty(n)
    dp = np.empty(n)
    x = np.empty(n)
    piv = diag[0]
    if abs(piv) <= floor:
        return x, False
    cp[0] = sup[0] / piv if n > 1 else 0.0
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i - 1] * cp[i - 1]
        if abs(piv) <= floor:
            return x, False
        cp[i] = sup[i] / piv if i < n - 1 else 0.0
        dp[i] = (rhs[i] - sub[i - 1] * dp[i - 1]) / piv
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x, True


def pchip_slopes(y, h):
    """Fritsch-Butland node slopes for a shape-preserving cubic on a uniform grid."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    delta = (y[1:] - y[:-1]) / h
    d = np.zeros(n)
    if n == 2:
        d[:] = delta[0]
        return d
    left, right = delta[:-1], delta[1:]
    same = (left * right) > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        hm = 2.0 / (1.0 / left + 1.0 / right)
    d[1:-1] = np.where(same, hm, 0.0)
    d[0] = _edge_slope(delta[0], delta[1])
    d[-1] = _edge_slope(delta[-1], delta[-2])
    return d


def _edge_slope(d0, d1):
    s = (3.0 * d0 - d1) / 2.0
    if np.sign(s) != np.sign(d0):
        return 0.0
    if np.sign(d0) != np.sign(d1) and abs(s) > abs(3.0 * d0):
        return 3.0 * d0
    return s


def _locate(a, h, n, xq):
    k = np.floor((xq - a) / h)
    k = np.clip(k, 0, n - 2).astype(np.intp)
    t = (xq - (a + k * h)) / h
    return k, t


def linear_eval(y, a, h, xq, linear_extrap):
    y = np.asarray(y, dtype=float)
    xq = np.asarray(xq, dtype=float)
    n = y.shape[0]
    b = a + (n - 1) * h
    k, t = _locate(a, h, n, xq)
    out = y[k] * (1.0 - t) + y[k + 1] * t
    lo = xq <= a
    hi = xq >= b
    if linear_extrap:
        s0 = (y[1] - y[0]) / h
        s1 = (y[n - 1] - y[n - 2]) / h
        out = np.where(lo, y[0] + s0 * (xq - a), out)
        out = np.where(hi, y[n - 1] + s1 * (xq - b), out)
    else:
        out = np.where(lo, y[0], out)
        out = np.where(hi, y[n - 1], out)
    return out


def _hermite_cell(y, d, h, k, t):
    t2 = t * t
    t3 = t2 * t
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + t
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    return y[k] * h00 + h * d[k] * h10 + y[k + 1] * h01 + h * d[k + 1] * h11


def _hermite_cell_deriv(y, d, h, k, t):
    t2 = t * t
    g00 = 6.0 * t2 - 6.0 * t
    g10 = 3.0 * t2 - 4.0 * t + 1.0
    g01 = -6.0 * t2 + 6.0 * t
    g11 = 3.0 * t2 - 2.0 * t
    return (y[k] * g00 + y[k + 1] * g01) / h + d[k] * g10 + d[k + 1] * g11


def hermite_eval(y, d, a, h, xq, linear_extrap):
    y = np.asarray(y, dtype=float)
    xq = np.asarray(xq, dtype=float)
    n = y.shape[0]
    b = a + (n - 1) * h
    k, t = _locate(a, h, n, xq)
    out = _hermite_cell(y, d, h, k, t)
    lo = xq <= a
    hi = xq >= b
    if linear_extrap:
        s0 = (y[1] - y[0]) / h
        s1 = (y[n - 1] - y[n - 2]) / h
        out = np.where(lo, y[0] + s0 * (xq - a), out)
        out = np.where(hi, y[n - 1] + s1 * (xq - b), out)
    else:
        out = np.where(lo, y[0], out)
        out = np.where(hi, y[n - 1], out)
    return out


def _outside(y, a, h, targets, linear_extrap):
    n = y.shape[0]
    b = a + (n - 1) * h
    if linear_extrap:
        s0 = (y[1] - y[0]) / h
        s1 = (y[n - 1] - y[n - 2]) / h
        lo = a + (targets - y[0]) / s0
        hi = b + (targets - y[n - 1]) / s1
    else:
        lo = np.full_like(targets, a)
        hi = np.full_like(targets, b)
    return lo, hi


def linear_invert(y, a, h, targets, linear_extrap):
    """Exact inverse of the piecewise linear interpolant of increasing ``y``."""
    y = np.asarray(y, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n = y.shape[0]
    k = np.searchsorted(y, targets, side="right") - 1
    k = np.clip(k, 0, n - 2)
    xk = a + k * h
    out = xk + h * (targets - y[k]) / (y[k + 1] - y[k])
    out = np.where(targets == y[k], xk, out)
    lo, hi = _outside(y, a, h, targets, linear_extrap)
    out = np.where(targets <= y[0], lo, out)
    out = np.where(targets >= y[n - 1], hi, out)
    return out


def hermite_invert(y, d, a, h, targets, tol, maxiter, linear_extrap):
    """Invert the monotone cubic interpolant by bisection plus one Newton polish.

    Bisection runs until the bracket is no wider than ``tol`` (or ``maxiter``
    halvings); the Newton step from the midpoint is clipped to the bracket and
    kept only if it lowers the residual.
    """
    y = np.asarray(y, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n = y.shape[0]
    k = np.searchsorted(y, targets, side="right") - 1
    k = np.clip(k, 0, n - 2)
    lo = np.zeros_like(targets)
    hi = np.ones_like(targets)
    width = 1.0
    it = 0
    while width * h > tol and it < maxiter:
        mid = 0.5 * (lo + hi)
        f = _hermite_cell(y, d, h, k, mid) - targets
        below = f < 0.0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        width *= 0.5
        it += 1
    s = 0.5 * (lo + hi)
    f = _hermite_cell(y, d, h, k, s) - targets
    g = _hermite_cell_deriv(y, d, h, k, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = np.minimum(np.maximum(s - f / (g * h), lo), hi)
        ok = (g > 0.0) & (np.abs(_hermite_cell(y, d, h, k, cand) - targets) < np.abs(f))
    s = np.where(ok, cand, s)
    xk = a + k * h
    out = xk + s * h
    out = np.where(targets == y[k], xk, out)
    olo, ohi = _outside(y, a, h, targets, linear_extrap)
    out = np.where(targets <= y[0], olo, out)
    out = np.where(targets >= y[n - 1], ohi, out)
    return out
