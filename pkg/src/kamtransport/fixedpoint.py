"""Fixed-point construction ``T_{n+1} = H(T_n)`` with optional relaxation.

For a strictly increasing ``T`` the score of ``T_# mu`` pulled back to the
source points is ``[p - T''/T'] / T'`` (no map inversion needed).  Matching it
to the target score ``q`` at ``T(x)`` and solving for ``T(x)`` gives

    H(T)(x) = q^{-1}( [p(x) - T''(x)/T'(x)] / T'(x) ),

which requires ``q`` to be strictly monotone.  The relaxed update
``T_{n+1} = (1 - omega) T_n + omega H(T_n)`` is used because the plain map is
not contractive even for Gaussians: with ``q`` the score of ``N(0, sigma^2)``,
``p(x) = -x`` and ``T = alpha x``, one gets ``alpha -> sigma^2 / alpha`` (a
2-cycle), while ``omega = 1/2`` gives the Babylonian square-root recurrence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateJacobianError, DomainError, KamTransportError, PreconditionError
from .grid import (
    CLAMP,
    LINEAR,
    MONOTONE_CUBIC,
    _EXTRAPS,
    Grid,
    GridFunction,
    derivative,
    first_nonincreasing,
    identity,
    interior_sup,
    interp_eval,
    second_derivative,
)
from .score import SCORE_CAP, TOL_JAC, as_score, sample_score, score_operator_1d, transported_score_values

RANGE_NODES = 4097


@dataclass(frozen=True)
class FpOptions:
    max_iters: int = 50
    tol: float = 1e-8
    omega: float = 0.5
    extrapolation: str = CLAMP
    score_cap: float = SCORE_CAP
    tol_jac: float = TOL_JAC

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if not 0.0 < self.omega <= 1.0:
            raise DomainError("omega must lie in (0, 1]")
        if self.extrapolation not in _EXTRAPS:
            raise DomainError(f"unknown extrapolation {self.extrapolation!r}")


def check_q_invertible(q, grid: Grid, n_range=RANGE_NODES, cap=SCORE_CAP, extrapolation=CLAMP) -> GridFunction:
    """``q^{-1}`` on a uniform grid over the range of ``q`` at interior nodes.

    The inverse is the exact inverse of the piecewise-linear interpolant of
    ``q`` at the interior nodes of ``grid``.  Raises :class:`PreconditionError`
    unless ``q`` is strictly monotone there; multi-modal targets have
    non-monotone scores and cannot be handled by this construction.
    """
    qv, _ = sample_score(q, grid, cap)
    xi = grid.nodes[1:-1]
    zi = np.asarray(qv.values[1:-1])
    dz = np.diff(zi)
    if np.all(dz < 0):
        xi, zi = xi[::-1], zi[::-1]
    elif not np.all(dz > 0):
        k = int(np.flatnonzero(np.sign(dz) != np.sign(dz[0]))[0]) + 1 if np.any(dz) else 1
        raise PreconditionError(
            "target score is not strictly monotone (needed for q to be a homeomorphism "
            f"onto its image; multi-modal targets are excluded); first change at interior node {k}"
        )
    rgrid = Grid(zi[0], zi[-1], n_range)
    return GridFunction(rgrid, np.interp(rgrid.nodes, zi, xi), LINEAR, extrapolation)


def pulled_back_score(T: GridFunction, p, tol_jac=TOL_JAC) -> np.ndarray:
    """``[p - T''/T'] / T'`` at the nodes of ``T.grid``."""
    dT = derivative(T).values
    low = np.flatnonzero(dT < tol_jac)
    if low.size:
        raise DegenerateJacobianError(f"T' = {dT[low[0]]:.3e} < {tol_jac:g} at node {low[0]}")
    x = T.grid.nodes
    pv = np.asarray(as_score(p)(x), dtype=float) if not isinstance(p, GridFunction) else np.asarray(p.values)
    return transported_score_values(pv, dT, second_derivative(T).values)


def fixed_point_step(T: GridFunction, p, q_inv: GridFunction, omega=0.5, tol_jac=TOL_JAC):
    """One relaxed step; returns ``(T_next, n_out_of_range)``.

    ``n_out_of_range`` counts nodes where the pulled-back score fell outside
    the range of ``q``; those are clamped or linearly extrapolated according
    to ``q_inv.extrapolation``.
    """
    bad = first_nonincreasing(T.values)
    if bad is not None:
        raise DomainError(f"T is not strictly increasing at node {bad}")
    z = pulled_back_score(T, p, tol_jac)
    rg = q_inv.grid
    out = int(np.count_nonzero((z < rg.a) | (z > rg.b)))
    H = np.asarray(interp_eval(q_inv, z))
    new = (1.0 - omega) * np.asarray(T.values) + omega * H
    return T.with_values(new), out


@dataclass(frozen=True, eq=False)
class FpResult:
    T: GridFunction
    history: tuple
    converged: bool
    maps: tuple
    out_of_range: int
    residual_sup: float = math.nan
    failure: str = ""

    @property
    def status(self) -> str:
        return "converged" if self.converged else "not_converged"

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def residency_constant(self) -> float:
        """``|G(p, T) - q| / |T_{n+1} - T_n|`` at the last step."""
        last = self.history[-1] if self.history else 0.0
        return self.residual_sup / last if last > 0 else math.inf


def run_fixed_point(p, q, grid: Grid, opts: FpOptions = FpOptions(), T0: GridFunction | None = None) -> FpResult:
    """Iterate from ``T0`` (default ``Id``) until ``max|T_{n+1} - T_n| <= tol``.

    Non-convergence is reported through ``converged=False``; if an iterate
    stops being increasing the run ends early and ``failure`` says why.  The
    history holds the sup-norm increment of every step.
    """
    q_inv = check_q_invertible(q, grid, cap=opts.score_cap, extrapolation=opts.extrapolation)
    p_eval, _ = sample_score(p, grid, opts.score_cap)
    T = T0 if T0 is not None else identity(grid, MONOTONE_CUBIC, opts.extrapolation)
    history, maps, out_total = [], [T], 0
    converged, failure = False, ""
    for _ in range(opts.max_iters):
        try:
            T_next, out = fixed_point_step(T, p_eval, q_inv, opts.omega, opts.tol_jac)
        except (DomainError, DegenerateJacobianError) as exc:
            failure = str(exc)
            break
        out_total += out
        inc = float(np.max(np.abs(T_next.values - T.values)))
        history.append(inc)
        maps.append(T_next)
        T = T_next
        if inc <= opts.tol:
            converged = True
            break
    try:
        qg, _ = sample_score(q, grid, opts.score_cap)
        pushed = score_operator_1d(p, maps[-2] if len(maps) > 1 else T, tol_jac=opts.tol_jac)
        res = interior_sup(pushed.values - qg.values)
    except KamTransportError:  # diagnostics only; a folded map has no residual
        res = math.nan
    return FpResult(T, tuple(history), converged, tuple(maps), out_total, res, failure)
