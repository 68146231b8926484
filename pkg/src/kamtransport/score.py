"""Scores and the 1D score transformation operator.

For a strictly increasing map ``U`` the pushforward of a measure with score
``s`` has score

    G(s, U)(y) = [s(x) - U''(x) / U'(x)] / U'(x),    x = U^{-1}(y).

:func:`score_operator_1d` evaluates this on a grid; the multivariate
pointwise form lives in :mod:`kamtransport.scoreop_nd`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateJacobianError, DomainError, NotInvertibleError, SingularDensityError
from .grid import (
    LINEAR,
    MONOTONE_CUBIC,
    Grid,
    GridFunction,
    derivative,
    first_nonincreasing,
    inverse_at,
    second_derivative,
)

CLOSED_FORM = "closed_form"
GRIDDED = "gridded"

SCORE_CAP = 1e6
TOL_JAC = 1e-8


@dataclass(frozen=True, eq=False)
class ScoreModel:
    """A score ``s = d/dx log rho`` with access to ``s'``.

    Use :meth:`closed_form` or :meth:`gridded` rather than the raw constructor.
    """

    kind: str
    eval: Callable
    deriv: Callable
    label: str = ""
    grid_function: GridFunction | None = None

    def __call__(self, x):
        return self.eval(x)

    @classmethod
    def closed_form(cls, fn, dfn, label=""):
        return cls(CLOSED_FORM, fn, dfn, label)

    @classmethod
    def gridded(cls, gf: GridFunction, label=""):
        return cls(GRIDDED, gf, derivative(gf), label, gf)


def as_score(s) -> ScoreModel:
    if isinstance(s, ScoreModel):
        return s
    if isinstance(s, GridFunction):
        return ScoreModel.gridded(s)
    raise TypeError(f"cannot interpret {type(s).__name__} as a score")


def _fill_ends(vals):
    vals[0] = 2.0 * vals[1] - vals[2]
    vals[-1] = 2.0 * vals[-2] - vals[-3]


def _score_values_policy(vals, cap, label=""):
    inner = vals[1:-1]
    if not np.all(np.isfinite(inner)):
        i = int(np.flatnonzero(~np.isfinite(inner))[0]) + 1
        raise SingularDensityError(f"score {label!r} is singular at interior node {i}")
    over = np.abs(inner) > cap
    clipped = int(np.count_nonzero(over))
    if clipped:
        warnings.warn(f"{clipped} score values clipped to magnitude {cap:g}", RuntimeWarning, stacklevel=3)
        vals[1:-1] = np.clip(inner, -cap, cap)
    for end, (n1, n2) in ((0, (1, 2)), (-1, (-2, -3))):
        if not np.isfinite(vals[end]) or abs(vals[end]) > cap:
            vals[end] = 2.0 * vals[n1] - vals[n2]
    return vals, clipped


def sample_score(s, grid: Grid, cap=SCORE_CAP, extrapolation=None) -> tuple[GridFunction, int]:
    """Sample a score on ``grid``.

    Interior values beyond ``cap`` in magnitude are clipped (the count is
    returned and a warning issued).  Endpoint values that are non-finite or
    beyond ``cap`` -- a density vanishing at the boundary -- are replaced by
    linear extrapolation from the two neighbouring interior nodes.
    """
    s = as_score(s)
    if s.kind == GRIDDED and s.grid_function.grid == grid:
        gf = s.grid_function
        return (gf if extrapolation is None else gf.with_policy(extrapolation=extrapolation)), 0
    with np.errstate(all="ignore"):
        vals = np.array(s(grid.nodes), dtype=float)
    vals, clipped = _score_values_policy(vals, cap, s.label)
    return GridFunction(grid, vals, LINEAR, extrapolation or "clamp"), clipped


def score_from_log_density(logrho, grid: Grid, dlogrho=None, label="", cap=SCORE_CAP) -> ScoreModel:
    """Gridded score of an (unnormalized) log-density.

    Uses ``dlogrho`` when supplied, otherwise central differences of
    ``logrho`` with step ``eps**(1/3) * max(1, |x|)``.  The density may vanish
    at the endpoints; ``logrho == -inf`` at an interior node raises
    :class:`SingularDensityError`.
    """
    x = grid.nodes
    with np.errstate(all="ignore"):
        ell = np.asarray(logrho(x), dtype=float)
        if not np.all(np.isfinite(ell[1:-1])):
            i = int(np.flatnonzero(~np.isfinite(ell[1:-1]))[0]) + 1
            raise SingularDensityError(f"log-density is not finite at interior node {i}")
        if dlogrho is not None:
            vals = np.array(dlogrho(x), dtype=float)
        else:
            step = np.finfo(float).eps ** (1.0 / 3.0) * np.maximum(1.0, np.abs(x))
            vals = (np.asarray(logrho(x + step)) - np.asarray(logrho(x - step))) / (2.0 * step)
    for end in (0, -1):
        if not np.isfinite(ell[end]):
            vals[end] = np.nan
    vals, _ = _score_values_policy(vals, cap, label)
    return ScoreModel.gridded(GridFunction(grid, vals), label)


def transported_score_values(s, du, d2u):
    """``[s - U''/U'] / U'`` elementwise; the 1D change-of-variables identity."""
    return (s - d2u / du) / du


def score_operator_1d(s, U: GridFunction, *, tol_jac=TOL_JAC, endpoints="extrapolate", tol_inv=None) -> GridFunction:
    """Score of ``U_# mu`` on ``U.grid`` where ``s`` is the score of ``mu``.

    ``endpoints="extrapolate"`` (default) replaces the two endpoint values by
    linear extrapolation from the interior; ``"formula"`` keeps the operator
    value there.  The result uses linear interpolation and ``U``'s
    extrapolation policy.
    """
    if endpoints not in ("extrapolate", "formula"):
        raise DomainError(f"unknown endpoint policy {endpoints!r}")
    bad = first_nonincreasing(U.values)
    if bad is not None:
        raise NotInvertibleError(bad)
    dU = derivative(U)
    d2U = second_derivative(U)
    low = np.flatnonzero(dU.values < tol_jac)
    if low.size:
        raise DegenerateJacobianError(f"U' = {dU.values[low[0]]:.3e} < {tol_jac:g} at node {low[0]}")
    grid = U.grid
    s_eval = s if isinstance(s, GridFunction) else as_score(s).eval
    if np.array_equal(U.values, grid.nodes):
        # U = Id: skip differencing so that G(s, Id) = s holds exactly
        vals = np.array(s_eval(grid.nodes), dtype=float)
        return GridFunction(grid, vals, LINEAR, U.extrapolation)
    x = inverse_at(U, grid.nodes, tol_inv)
    vals = transported_score_values(np.asarray(s_eval(x), dtype=float), dU(x), d2U(x))
    if endpoints == "extrapolate":
        _fill_ends(vals)
    return GridFunction(grid, vals, LINEAR, U.extrapolation)


def score_residual(p, T, q, *, cap=SCORE_CAP, tol_jac=TOL_JAC) -> GridFunction:
    """``G(p, T) - q`` at interior nodes; the endpoint entries are set to 0.

    ``T`` may be a :class:`~kamtransport.kam.TransportMap` or a map GridFunction.
    """
    if hasattr(T, "flatten"):
        T = T.flatten()
    pushed = score_operator_1d(p, T, tol_jac=tol_jac)
    qg, _ = sample_score(q, T.grid, cap)
    r = pushed.values - qg.values
    r[0] = 0.0
    r[-1] = 0.0
    return GridFunction(T.grid, r, LINEAR, T.extrapolation)


def _tol_group(refinement_err):
    """Ten times the differencing/interpolation error estimated by refinement."""
    return 10.0 * refinement_err


def group_property_check(s, U1, U2, a, b, n):
    """Compare ``G(s, U1 o U2)`` with ``G(G(s, U2), U1)`` on an ``n``-node grid.

    ``U1`` and ``U2`` are increasing callables mapping ``[a, b]`` onto itself.
    Returns ``(defect, tol)``: the max interior difference and ``tol_group``.
    The tolerance is ten times the error of both sides, estimated by their
    change when recomputed on ``2n - 1`` nodes (which contain the ``n`` nodes).
    """
    def sides(m):
        g = Grid(a, b, m)
        u1 = GridFunction(g, U1(g.nodes), MONOTONE_CUBIC)
        u2 = GridFunction(g, U2(g.nodes), MONOTONE_CUBIC)
        lhs = score_operator_1d(s, GridFunction(g, U1(U2(g.nodes)), MONOTONE_CUBIC)).values
        rhs = score_operator_1d(score_operator_1d(s, u2), u1).values
        return lhs, rhs

    lhs, rhs = sides(n)
    lhs2, rhs2 = sides(2 * n - 1)
    inner = slice(1, -1)
    err = np.abs(lhs - lhs2[::2])[inner] + np.abs(rhs - rhs2[::2])[inner]
    return float(np.max(np.abs(lhs - rhs)[inner])), _tol_group(float(np.max(err)))


def shift_property_check(s, c, a, b, n):
    """Compare ``G(s, x + c)(y)`` with ``s(y - c)`` at interior nodes with
    ``y - c`` in ``[a, b]``; returns ``(defect, tol)`` as
    :func:`group_property_check`."""
    def side(m):
        g = Grid(a, b, m)
        return score_operator_1d(s, GridFunction(g, g.nodes + c, MONOTONE_CUBIC)).values, g

    got, g = side(n)
    fine, _ = side(2 * n - 1)
    x = g.nodes - c
    keep = (x >= a) & (x <= b)
    keep[[0, -1]] = False
    if not np.any(keep):
        raise DomainError("shift moves every node outside the interval")
    want = np.asarray(as_score(s)(x[keep]), dtype=float)
    err = float(np.max(np.abs(got - fine[::2])[keep]))
    return float(np.max(np.abs(got[keep] - want))), _tol_group(err)
