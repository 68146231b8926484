"""Uniform grids and scalar functions sampled on them.

A :class:`GridFunction` is the numerical stand-in for every scalar field in
the package (perturbations ``v``, maps ``T``, scores ``p`` and ``q``).  It
evaluates off the grid by piecewise interpolation, either linear or a
shape-preserving (monotone) cubic, and outside ``[a, b]`` by clamping or by
linear extrapolation with the end secant slope.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, NotInvertibleError

LINEAR = "linear"
MONOTONE_CUBIC = "monotone_cubic"
CLAMP = "clamp"
EXTRAPOLATE = "linear"

_INTERPS = (LINEAR, MONOTONE_CUBIC)
_EXTRAPS = (CLAMP, EXTRAPOLATE)

INVERSION_MAXITER = 200


@dataclass(frozen=True)
class Grid:
    """``n`` equispaced nodes on ``[a, b]``."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
            raise DomainError(f"invalid interval [{self.a}, {self.b}]")
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"grid needs at least 3 nodes, got {self.n}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n)

    @property
    def interior(self) -> slice:
        return slice(1, self.n - 1)

    def default_tol_inv(self) -> float:
        return 1e-10 * (self.b - self.a)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values of a scalar function on ``grid`` plus an evaluation policy."""

    grid: Grid
    values: np.ndarray
    interp: str = LINEAR
    extrapolation: str = CLAMP
    _slopes: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise DomainError(f"expected {self.grid.n} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid function values must be finite")
        if self.interp not in _INTERPS:
            raise DomainError(f"unknown interpolation {self.interp!r}")
        if self.extrapolation not in _EXTRAPS:
            raise DomainError(f"unknown extrapolation {self.extrapolation!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.interp == MONOTONE_CUBIC:
            d = kernels.pchip_slopes(vals, self.grid.h)
            d.setflags(write=False)
            object.__setattr__(self, "_slopes", d)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def __call__(self, x):
        return interp_eval(self, x)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values, self.interp, self.extrapolation)

    def with_policy(self, interp=None, extrapolation=None) -> "GridFunction":
        return GridFunction(
            self.grid,
            self.values,
            interp or self.interp,
            extrapolation or self.extrapolation,
        )

    def to_csv(self, path_or_buf=None) -> str | None:
        return write_csv(path_or_buf, self.grid.nodes, {"value": self.values})

    @classmethod
    def from_csv(cls, path_or_buf, column="value", **policy) -> "GridFunction":
        return read_csv(path_or_buf, **policy)[column]


def from_function(grid: Grid, fn, **policy) -> GridFunction:
    """Sample ``fn`` at the nodes of ``grid``."""
    return GridFunction(grid, np.asarray(fn(grid.nodes), dtype=float), **policy)


def identity(grid: Grid, interp=MONOTONE_CUBIC, extrapolation=CLAMP) -> GridFunction:
    return GridFunction(grid, grid.nodes, interp, extrapolation)


def interp_eval(f: GridFunction, x):
    """Evaluate ``f`` at ``x`` (scalar or array).

    Raises :class:`DomainError` for non-finite ``x``.
    """
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)):
        raise DomainError("interp_eval needs finite abscissae")
    g = f.grid
    lin = f.extrapolation == EXTRAPOLATE
    if f.interp == LINEAR:
        out = kernels.linear_eval(f.values, g.a, g.h, xa, lin)
    else:
        out = kernels.hermite_eval(f.values, f._slopes, g.a, g.h, xa, lin)
    out = np.asarray(out).reshape(xa.shape)
    return float(out) if out.ndim == 0 else out


def _d1(y, h):
    g = np.empty_like(y)
    g[1:-1] = (y[2:] - y[:-2]) / (2.0 * h)
    g[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
    g[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)
    return g


def _d2(y, h):
    g = np.empty_like(y)
    h2 = h * h
    g[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / h2
    if y.shape[0] >= 4:
        g[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / h2
        g[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / h2
    else:
        g[0] = g[1]
        g[-1] = g[-2]
    return g


def derivative(f: GridFunction) -> GridFunction:
    """Second-order finite-difference derivative (one-sided at the ends)."""
    return GridFunction(f.grid, _d1(np.asarray(f.values), f.grid.h), LINEAR, f.extrapolation)


def second_derivative(f: GridFunction) -> GridFunction:
    """Centered second difference inside, second-order one-sided at the ends."""
    return GridFunction(f.grid, _d2(np.asarray(f.values), f.grid.h), LINEAR, f.extrapolation)


def compose(f: GridFunction, g: GridFunction) -> GridFunction:
    """``f o g`` sampled at the nodes of ``g.grid``; keeps ``f``'s evaluation policy."""
    return GridFunction(g.grid, interp_eval(f, g.values), f.interp, f.extrapolation)


def first_nonincreasing(values) -> int | None:
    """Index ``i`` of the first node with ``values[i+1] <= values[i]``, or None."""
    bad = np.flatnonzero(np.diff(values) <= 0.0)
    return int(bad[0]) if bad.size else None


def inverse_at(T: GridFunction, y, tol=None):
    """Evaluate the inverse of strictly increasing ``T`` at ``y``."""
    bad = first_nonincreasing(T.values)
    if bad is not None:
        raise NotInvertibleError(bad)
    g = T.grid
    ya = np.asarray(y, dtype=float)
    lin = T.extrapolation == EXTRAPOLATE
    if T.interp == LINEAR:
        out = kernels.linear_invert(T.values, g.a, g.h, ya, lin)
    else:
        tol = g.default_tol_inv() if tol is None else tol
        out = kernels.hermite_invert(T.values, T._slopes, g.a, g.h, ya, tol, INVERSION_MAXITER, lin)
    out = np.asarray(out).reshape(ya.shape)
    return float(out) if out.ndim == 0 else out


def invert_monotone(T: GridFunction, tol=None) -> GridFunction:
    """Inverse map of ``T`` resampled at the nodes of ``T.grid``.

    Nodes outside ``[T(a), T(b)]`` follow ``T``'s extrapolation policy (clamped
    to ``a``/``b`` by default).
    """
    return T.with_values(inverse_at(T, T.grid.nodes, tol))


def interior_sup(values) -> float:
    v = np.asarray(values)[1:-1]
    return float(np.max(np.abs(v))) if v.size else 0.0


def interior_l2(values) -> float:
    """Root-mean-square over interior nodes."""
    v = np.asarray(values)[1:-1]
    return float(np.sqrt(np.mean(v * v))) if v.size else 0.0


# -- CSV ---------------------------------------------------------------------

def fmt(x: float) -> str:
    """17 significant digits, round-trip exact."""
    return format(float(x), ".17g")


def write_csv(path_or_buf, x, columns: dict, xname="x") -> str | None:
    """Write ``x`` plus named columns; returns the text if no target is given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    w.writerow([xname] + names)
    cols = [np.asarray(columns[k], dtype=float) for k in names]
    for i, xi in enumerate(np.asarray(x, dtype=float)):
        w.writerow([fmt(xi)] + [fmt(c[i]) for c in cols])
    text = buf.getvalue()
    if path_or_buf is None:
        return text
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
    return None


def read_csv(path_or_buf, **policy) -> dict:
    """Parse a node CSV into ``{column: GridFunction}``.

    The first column holds equispaced nodes; every other column becomes a
    GridFunction on the recovered grid.
    """
    if hasattr(path_or_buf, "read"):
        text = path_or_buf.read()
    else:
        with open(path_or_buf, newline="") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], [r for r in rows[1:] if r]
    data = np.array([[float(v) for v in r] for r in body])
    x = data[:, 0]
    grid = Grid(x[0], x[-1], len(x))
    if not np.allclose(x, grid.nodes, rtol=0.0, atol=1e-9 * (grid.b - grid.a)):
        raise DomainError("CSV nodes are not equispaced")
    return {name: GridFunction(grid, data[:, j + 1], **policy) for j, name in enumerate(header[1:])}
