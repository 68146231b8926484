"""The linearized score operator and its discrete boundary-value problem.

In one dimension the frozen linearization around the target score ``q`` is

    L(q) v = v'' + q v' + q' v.

:func:`assemble` discretizes it with centered differences on the interior
nodes of a grid and :func:`solve` inverts it with a tridiagonal (Thomas)
elimination, falling back to a dense LU solve when a pivot is too small.

Two boundary treatments are available.  ``"dirichlet"`` imposes
``v(a) = v(b) = 0``.  ``"linear"`` imposes ``v'' = 0`` at both ends, i.e.
``v_0 = 2 v_1 - v_2``; it reproduces affine solutions exactly and is used for
problems on truncated unbounded domains (the Gaussian example).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import AssemblyError, DomainError, SingularOperatorError
from .grid import CLAMP, EXTRAPOLATE, LINEAR, Grid, GridFunction, write_csv
from .score import SCORE_CAP, as_score, sample_score

DIRICHLET = "dirichlet"
LINEAR_BC = "linear"
BOUNDARIES = (DIRICHLET, LINEAR_BC)

PIVOT_TOL = 1e-12
RESIDUAL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class EllipticOperator:
    """Tridiagonal system for ``L(q)`` on the ``n - 2`` interior unknowns.

    ``sub`` and ``sup`` have length ``n - 3``; ``sub[k]`` multiplies unknown
    ``k`` in row ``k + 1`` and ``sup[k]`` multiplies unknown ``k + 1`` in row
    ``k``.  Boundary elimination is already folded into the bands.
    """

    grid: Grid
    q_vals: np.ndarray
    qprime_vals: np.ndarray
    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    boundary: str = DIRICHLET

    @property
    def size(self) -> int:
        return self.diag.shape[0]

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = self.diag * v
        out[1:] += self.sub * v[:-1]
        out[:-1] += self.sup * v[1:]
        return out

    def norm_inf(self) -> float:
        row = np.abs(self.diag).copy()
        row[1:] += np.abs(self.sub)
        row[:-1] += np.abs(self.sup)
        return float(row.max())

    def dump_csv(self, path_or_buf=None, rhs=None):
        """Write ``x, sub, diag, sup[, rhs]`` per interior row (``sub`` of row 0
        and ``sup`` of the last row are 0)."""
        m = self.size
        lower = np.zeros(m)
        upper = np.zeros(m)
        lower[1:] = self.sub
        upper[:-1] = self.sup
        cols = {"sub": lower, "diag": self.diag, "sup": upper}
        if rhs is not None:
            cols["rhs"] = np.asarray(rhs, dtype=float)
        return write_csv(path_or_buf, self.grid.nodes[1:-1], cols)


def _interior_values(f, grid, cap=SCORE_CAP):
    if isinstance(f, GridFunction):
        if f.grid != grid:
            raise DomainError("right-hand side lives on a different grid")
        return np.array(f.values[1:-1])
    if callable(f):
        return np.asarray(f(grid.nodes[1:-1]), dtype=float)
    vals = np.asarray(f, dtype=float)
    if vals.shape == (grid.n,):
        return vals[1:-1].copy()
    if vals.shape == (grid.n - 2,):
        return vals.copy()
    raise DomainError(f"right-hand side has shape {vals.shape}")


def assemble(q, grid: Grid, boundary=DIRICHLET, cap=SCORE_CAP) -> EllipticOperator:
    """Discretize ``v'' + q v' + q' v`` on the interior nodes of ``grid``.

    ``q`` is a :class:`~kamtransport.score.ScoreModel` (or gridded score);
    ``q'`` comes from its ``deriv``.  Non-finite coefficients at an interior
    node raise :class:`AssemblyError`.
    """
    if boundary not in BOUNDARIES:
        raise DomainError(f"unknown boundary condition {boundary!r}")
    if grid.n < 4:
        raise DomainError("need at least 4 nodes (2 interior unknowns)")
    q = as_score(q)
    xi = grid.nodes[1:-1]
    with np.errstate(all="ignore"):
        qv = np.asarray(q(xi), dtype=float)
        dqv = np.asarray(q.deriv(xi), dtype=float)
    for name, arr in (("q", qv), ("q'", dqv)):
        bad = np.flatnonzero(~np.isfinite(arr))
        if bad.size:
            raise AssemblyError(f"{name} is not finite at interior node {bad[0] + 1}")
    qv = np.clip(qv, -cap, cap)
    dqv = np.clip(dqv, -cap, cap)
    h = grid.h
    lower = 1.0 / h**2 - qv / (2.0 * h)
    upper = 1.0 / h**2 + qv / (2.0 * h)
    diag = -2.0 / h**2 + dqv
    sub = lower[1:].copy()
    sup = upper[:-1].copy()
    if boundary == LINEAR_BC:
        # eliminate v_0 = 2 v_1 - v_2 and v_{n-1} = 2 v_{n-2} - v_{n-3}
        diag[0] += 2.0 * lower[0]
        sup[0] -= lower[0]
        diag[-1] += 2.0 * upper[-1]
        sub[-1] -= upper[-1]
    for arr in (qv, dqv, sub, diag, sup):
        arr.setflags(write=False)
    return EllipticOperator(grid, qv, dqv, sub, diag, sup, boundary)


def _relative_residual(op, v, f):
    r = op.matvec(v) - f
    scale = op.norm_inf() * np.max(np.abs(v), initial=0.0) + np.max(np.abs(f), initial=0.0)
    return float(np.max(np.abs(r)) / scale) if scale > 0 else 0.0


def solve_interior(op: EllipticOperator, f) -> np.ndarray:
    """Solve the interior system; returns the ``n - 2`` unknowns."""
    rhs = _interior_values(f, op.grid)
    if not np.all(np.isfinite(rhs)):
        raise DomainError("right-hand side is not finite at interior nodes")
    v, ok = kernels.thomas(op.sub, op.diag, op.sup, rhs, PIVOT_TOL)
    v = np.asarray(v)
    if ok and np.all(np.isfinite(v)) and _relative_residual(op, v, rhs) <= RESIDUAL_TOL:
        return v
    A = op.dense()
    try:
        v = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        raise SingularOperatorError(float(np.linalg.cond(A))) from None
    if not np.all(np.isfinite(v)) or _relative_residual(op, v, rhs) > 1e3 * RESIDUAL_TOL:
        raise SingularOperatorError(float(np.linalg.cond(A)))
    return v


def solve(op: EllipticOperator, f, extrapolation=None) -> GridFunction:
    """Solve ``L(q) v = f`` at interior nodes and attach boundary values.

    ``f`` may be a GridFunction on ``op.grid``, a callable, or an array of
    ``n`` (all nodes) or ``n - 2`` (interior) values.  The returned function
    uses linear interpolation; its extrapolation defaults to clamping for
    Dirichlet and linear for the ``v'' = 0`` condition.
    """
    inner = solve_interior(op, f)
    v = np.zeros(op.grid.n)
    v[1:-1] = inner
    if op.boundary == LINEAR_BC:
        v[0] = 2.0 * v[1] - v[2]
        v[-1] = 2.0 * v[-2] - v[-3]
    if extrapolation is None:
        extrapolation = EXTRAPOLATE if op.boundary == LINEAR_BC else CLAMP
    return GridFunction(op.grid, v, LINEAR, extrapolation)


def apply(op: EllipticOperator, v) -> np.ndarray:
    """Discrete ``L(q) v`` at interior nodes for nodal values ``v`` that satisfy
    the operator's boundary condition."""
    vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
    return op.matvec(vals[1:-1])


def sampled_rhs(p, q, grid: Grid, cap=SCORE_CAP) -> GridFunction:
    """``p - q`` sampled on ``grid`` with the score endpoint policy."""
    pg, _ = sample_score(p, grid, cap)
    qg, _ = sample_score(q, grid, cap)
    return pg.with_values(pg.values - qg.values)
