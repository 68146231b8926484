"""One-dimensional optimal transport oracle.

In 1D the monotone (increasing) rearrangement ``F_nu^{-1} o F_mu`` is the
optimal map for every convex cost, and the Wasserstein-1 distance is the L1
distance between quantile functions.  :class:`Density1D` supplies the CDF and
quantile of an unnormalized density on an interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grid import MONOTONE_CUBIC, Grid, GridFunction

CACHE_CELLS = 4096
W1_NODES = 4096
QUANTILE_TOL = 1e-8

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _gl_integral(fn, lo, hi):
    """8-point Gauss-Legendre on each ``[lo_k, hi_k]`` (vectorized)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[..., None] + half[..., None] * _GL_X
    return half * np.sum(_GL_W * np.asarray(fn(pts), dtype=float), axis=-1)


@dataclass(frozen=True, eq=False)
class Density1D:
    """Unnormalized density ``rho`` on ``[a, b]`` with a cumulative cache.

    The cache holds ``int_a^{x_k} rho`` at ``cells + 1`` equispaced nodes,
    each cell integrated by 8-point Gauss-Legendre (exact for polynomials up
    to degree 15, so exact to rounding for the polynomial catalog densities).
    """

    rho: object
    a: float
    b: float
    label: str = ""
    cells: int = CACHE_CELLS
    Z: float = field(init=False)
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not float(self.a) < float(self.b):
            raise DomainError(f"invalid interval [{self.a}, {self.b}]")
        edges = np.linspace(self.a, self.b, self.cells + 1)
        with np.errstate(all="ignore"):
            parts = _gl_integral(self.rho, edges[:-1], edges[1:])
        if not np.all(np.isfinite(parts)) or np.any(parts < -1e-14 * np.max(np.abs(parts))):
            raise DomainError(f"density {self.label!r} is negative or not finite on [{self.a}, {self.b}]")
        cum = np.concatenate([[0.0], np.cumsum(np.maximum(parts, 0.0))])
        if not cum[-1] > 0:
            raise DomainError(f"density {self.label!r} has zero mass")
        cum.setflags(write=False)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "Z", float(cum[-1]))
        object.__setattr__(self, "_cum", cum)

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.cells

    def pdf(self, x):
        """Normalized density (zero outside ``[a, b]``)."""
        x = np.asarray(x, dtype=float)
        inside = (x >= self.a) & (x <= self.b)
        with np.errstate(all="ignore"):
            vals = np.where(inside, np.asarray(self.rho(np.clip(x, self.a, self.b)), dtype=float), 0.0)
        return vals / self.Z

    def _mass(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.a, self.b)
        k = np.clip(np.floor((x - self.a) / self.h).astype(np.int64), 0, self.cells - 1)
        left = self.a + k * self.h
        return self._cum[k] + _gl_integral(self.rho, left, x)

    def cdf(self, x):
        """Normalized CDF; 0 left of ``a`` and 1 right of ``b``."""
        xa = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(xa)):
            raise DomainError("cdf needs finite arguments")
        out = np.clip(self._mass(xa) / self.Z, 0.0, 1.0)
        out = np.where(xa <= self.a, 0.0, np.where(xa >= self.b, 1.0, out))
        return float(out) if out.ndim == 0 else out

    def quantile(self, u, tol=QUANTILE_TOL):
        """Inverse CDF: safeguarded Newton inside the bracketing cache cell.

        ``|cdf(quantile(u)) - u| <= tol``.  Raises :class:`DomainError` for
        ``u`` outside ``[0, 1]``.
        """
        ua = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(ua)) or np.any(ua < 0.0) or np.any(ua > 1.0):
            raise DomainError("quantile level must lie in [0, 1]")
        flat = ua.reshape(-1)
        target = flat * self.Z
        k = np.clip(np.searchsorted(self._cum, target, side="right") - 1, 0, self.cells - 1)
        left = self.a + k * self.h
        base = self._cum[k]
        cell_mass = self._cum[k + 1] - base
        with np.errstate(all="ignore"):
            frac = np.where(cell_mass > 0, (target - base) / cell_mass, 0.0)
        x = left + self.h * np.clip(frac, 0.0, 1.0)
        lo, hi = left.copy(), left + self.h
        ftol = 0.1 * min(tol, 1e-10) * self.Z
        active = np.flatnonzero((flat > 0.0) & (flat < 1.0))
        for _ in range(100):
            if active.size == 0:
                break
            xa = x[active]
            g = base[active] + _gl_integral(self.rho, left[active], xa) - target[active]
            done = np.abs(g) <= ftol
            neg = g < 0
            lo[active] = np.where(neg, xa, lo[active])
            hi[active] = np.where(neg, hi[active], xa)
            with np.errstate(all="ignore"):
                step = xa - g / np.asarray(self.rho(xa), dtype=float)
            la, ha = lo[active], hi[active]
            ok = np.isfinite(step) & (step > la) & (step < ha)
            x[active] = np.where(done, xa, np.where(ok, step, 0.5 * (la + ha)))
            tiny = (ha - la) <= 4.0 * np.finfo(float).eps * max(1.0, abs(self.a), abs(self.b))
            active = active[~(done | tiny)]
        x = np.where(flat <= 0.0, self._left_support(), x)
        x = np.where(flat >= 1.0, self._right_support(), x)
        out = x.reshape(ua.shape)
        return float(out) if out.ndim == 0 else out

    def _left_support(self):
        k = int(np.flatnonzero(np.diff(self._cum) > 0)[0])
        return self.a + k * self.h if k > 0 else self.a

    def _right_support(self):
        k = int(np.flatnonzero(np.diff(self._cum) > 0)[-1])
        return self.a + (k + 1) * self.h if k < self.cells - 1 else self.b


@dataclass(frozen=True, eq=False)
class PushforwardMeasure:
    """``T_# mu`` for an increasing map ``T``: its quantile is ``T o F_mu^{-1}``."""

    T: object
    source: Density1D

    def quantile(self, u):
        return np.asarray(self.T(self.source.quantile(u)), dtype=float)


def increasing_rearrangement(mu: Density1D, nu: Density1D, grid: Grid) -> GridFunction:
    """``T_OT = F_nu^{-1} o F_mu`` at the nodes of ``grid`` (monotone cubic)."""
    vals = np.asarray(nu.quantile(mu.cdf(grid.nodes)), dtype=float)
    return GridFunction(grid, vals, MONOTONE_CUBIC)


@dataclass(frozen=True)
class W1Result:
    value: float
    error: float

    def __float__(self):
        return self.value


def _w1_midpoint(mu, nu, n):
    u = (np.arange(n) + 0.5) / n
    return float(np.mean(np.abs(np.asarray(mu.quantile(u)) - np.asarray(nu.quantile(u)))))


def wasserstein1(mu, nu, nodes=W1_NODES) -> W1Result:
    """``int_0^1 |F_mu^{-1} - F_nu^{-1}| du`` by the midpoint rule on ``nodes``
    quantile levels; ``error`` is the difference to the rule on half as many."""
    w = _w1_midpoint(mu, nu, nodes)
    w_half = _w1_midpoint(mu, nu, nodes // 2)
    return W1Result(w, abs(w - w_half))


def transport_defect(mu: Density1D, nu: Density1D, T: GridFunction) -> float:
    """``max_x |F_nu(T(x)) - F_mu(x)|`` at the nodes of ``T.grid``."""
    x = T.grid.nodes
    return float(np.max(np.abs(np.asarray(nu.cdf(T.values)) - np.asarray(mu.cdf(x)))))
