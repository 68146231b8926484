"""KAM-Newton construction of a transport map by score matching.

Given a source score ``p`` and a target score ``q``, iteration ``n`` solves

    L(q) v_n = p_n - q

with the operator frozen at ``q`` (assembled once), then updates

    T_{n+1} = (Id + v_n) o T_n,        p_{n+1} = G(p_n, Id + v_n),

where ``G`` is the score transformation operator.  ``p_n`` is the score of
``(T_n)_# mu``, so ``p_n = q`` means ``T_n`` transports ``mu`` to ``nu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .elliptic import BOUNDARIES, DIRICHLET, EllipticOperator, assemble, solve
from .errors import DomainError, FlattenError, StepFailureError
from .grid import (
    CLAMP,
    MONOTONE_CUBIC,
    Grid,
    GridFunction,
    _EXTRAPS,
    derivative,
    first_nonincreasing,
    fmt,
    interior_l2,
    interior_sup,
    interp_eval,
)
from .score import SCORE_CAP, TOL_JAC, ScoreModel, sample_score, score_operator_1d

CONVERGED = "converged"
NOT_CONVERGED = "not_converged"
RUNNING = "running"

HISTORY_COLUMNS = ("iter", "v_sup", "residual_sup", "residual_l2")


@dataclass(frozen=True, eq=False)
class TransportMap:
    """``T = (Id + v_{k-1}) o ... o (Id + v_0)`` stored as the list of ``v_k``.

    Each factor ``Id + v_k`` is evaluated with a monotone cubic interpolant so
    that it stays increasing between nodes.
    """

    grid: Grid
    stack: tuple = ()
    extrapolation: str = CLAMP

    def __len__(self):
        return len(self.stack)

    def factor(self, k: int) -> GridFunction:
        v = self.stack[k]
        return GridFunction(self.grid, self.grid.nodes + v.values, MONOTONE_CUBIC, self.extrapolation)

    def push(self, v: GridFunction) -> "TransportMap":
        """Left-compose ``Id + v`` onto the map."""
        if v.grid != self.grid:
            raise DomainError("perturbation lives on a different grid")
        return replace(self, stack=self.stack + (v,))

    def __call__(self, x):
        y = np.asarray(x, dtype=float)
        for k in range(len(self.stack)):
            y = np.asarray(interp_eval(self.factor(k), y))
        return float(y) if y.ndim == 0 else y

    def flatten(self) -> GridFunction:
        return flatten(self)


def flatten(T: TransportMap) -> GridFunction:
    """Nodal values of the full composition as one monotone cubic GridFunction.

    Raises :class:`FlattenError` if the composed values are not strictly
    increasing.
    """
    vals = T(T.grid.nodes)
    bad = first_nonincreasing(vals)
    if bad is not None:
        raise FlattenError(f"flattened map is not strictly increasing at node {bad}")
    return GridFunction(T.grid, vals, MONOTONE_CUBIC, T.extrapolation)


@dataclass(frozen=True)
class HistoryRecord:
    """Norms of iteration ``iter``: ``v_sup`` is ``|v_n|`` (after damping) and
    the residuals are those of ``u_n = p_n - q`` before the step."""

    iter: int
    v_sup: float
    residual_sup: float
    residual_l2: float
    omega: float = 1.0


@dataclass(frozen=True)
class KamOptions:
    max_iters: int = 20
    tol_v: float = 1e-8
    tol_residual: float = 1e-8
    damping: float = 1.0
    monotonicity_guard: bool = True
    max_halvings: int = 6
    boundary: str = DIRICHLET
    extrapolation: str = CLAMP
    score_cap: float = SCORE_CAP
    tol_jac: float = TOL_JAC

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError("max_iters must be at least 1")
        if not (self.tol_v > 0 and self.tol_residual > 0):
            raise DomainError("tolerances must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise DomainError("damping must lie in (0, 1]")
        if self.boundary not in BOUNDARIES:
            raise DomainError(f"unknown boundary condition {self.boundary!r}")
        if self.extrapolation not in _EXTRAPS:
            raise DomainError(f"unknown extrapolation {self.extrapolation!r}")


@dataclass(frozen=True, eq=False)
class KamState:
    iter: int
    p: ScoreModel
    T: TransportMap
    history: tuple = ()
    status: str = RUNNING
    final_residual_sup: float = math.nan
    final_residual_l2: float = math.nan

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def not_converged(self) -> bool:
        return self.status == NOT_CONVERGED

    @property
    def v_norms(self) -> np.ndarray:
        return np.array([r.v_sup for r in self.history])

    @property
    def residual_norms(self) -> np.ndarray:
        return np.array([r.residual_sup for r in self.history])

    def history_csv(self, path_or_buf=None):
        return history_to_csv(self.history, path_or_buf)


def history_to_csv(history, path_or_buf=None):
    """``iter,v_sup,residual_sup,residual_l2`` rows; returns text if no target."""
    lines = [",".join(HISTORY_COLUMNS)]
    lines += [f"{r.iter},{fmt(r.v_sup)},{fmt(r.residual_sup)},{fmt(r.residual_l2)}" for r in history]
    text = "\n".join(lines) + "\n"
    if path_or_buf is None:
        return text
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
    return None


def initial_state(p, grid: Grid, opts: KamOptions = KamOptions()) -> KamState:
    pg, _ = sample_score(p, grid, opts.score_cap, opts.extrapolation)
    return KamState(0, ScoreModel.gridded(pg, getattr(p, "label", "")), TransportMap(grid, (), opts.extrapolation))


def _residual(p: ScoreModel, qg: GridFunction) -> np.ndarray:
    u = np.asarray(p.grid_function.values) - qg.values
    u[0] = u[-1] = 0.0
    return u


def _folds(grid, w):
    if first_nonincreasing(grid.nodes + w) is not None:
        return True
    return float(np.min(1.0 + derivative(GridFunction(grid, w)).values)) <= 0.0


def kam_step(state: KamState, q, op: EllipticOperator, opts: KamOptions = KamOptions(), qg=None) -> KamState:
    """One KAM-Newton iteration.

    ``qg`` (the gridded target score) may be passed to avoid resampling.
    Raises :class:`StepFailureError` when ``Id + omega v`` folds for every
    admissible damping.
    """
    grid = op.grid
    if qg is None:
        qg, _ = sample_score(q, grid, opts.score_cap)
    u = _residual(state.p, qg)
    v = solve(op, u, extrapolation=opts.extrapolation)
    omega = opts.damping
    halvings = opts.max_halvings if opts.monotonicity_guard else 0
    w = omega * v.values
    tries = 0
    while _folds(grid, w):
        if tries >= halvings:
            raise StepFailureError(
                f"Id + omega*v folds at iteration {state.iter} (omega={omega:g})",
                {"iter": state.iter, "omega": omega, "v_sup": interior_sup(v.values),
                 "residual_sup": interior_sup(u)},
            )
        omega *= 0.5
        w = omega * v.values
        tries += 1
    U = GridFunction(grid, grid.nodes + w, MONOTONE_CUBIC, opts.extrapolation)
    p_next = score_operator_1d(state.p.grid_function, U, tol_jac=opts.tol_jac)
    rec = HistoryRecord(state.iter, interior_sup(w), interior_sup(u), interior_l2(u), omega)
    return KamState(
        state.iter + 1,
        ScoreModel.gridded(p_next, state.p.label),
        state.T.push(v.with_values(w)),
        state.history + (rec,),
    )


def run_kam(p, q, grid: Grid, opts: KamOptions = KamOptions()) -> KamState:
    """Iterate :func:`kam_step` from ``T_0 = Id``, ``p_0 = p``.

    Stops after a step with ``|v_n| <= tol_v`` or a pre-step residual
    ``<= tol_residual`` (status ``converged``), or after ``max_iters`` steps
    (status ``not_converged``; no exception).
    """
    op = assemble(q, grid, opts.boundary, opts.score_cap)
    qg, _ = sample_score(q, grid, opts.score_cap)
    state = initial_state(p, grid, opts)
    status = NOT_CONVERGED
    for _ in range(opts.max_iters):
        state = kam_step(state, q, op, opts, qg)
        last = state.history[-1]
        if last.v_sup <= opts.tol_v or last.residual_sup <= opts.tol_residual:
            status = CONVERGED
            break
    u = _residual(state.p, qg)
    return replace(state, status=status, final_residual_sup=interior_sup(u), final_residual_l2=interior_l2(u))


def quadratic_contraction_report(history, key="residual_sup") -> list:
    """Ratios ``r_n = |u_{n+1}| / |u_n|^2`` over consecutive history entries.

    ``history`` is a sequence of :class:`HistoryRecord` or of norms.  Returns
    an empty list when fewer than three entries are nonzero.
    """
    norms = [float(getattr(r, key, r)) for r in history]
    if sum(1 for u in norms if u > 0.0) < 3:
        return []
    return [b / (a * a) if a > 0.0 else math.inf for a, b in zip(norms[:-1], norms[1:])]


def map_consistency(p, state: KamState, tol_jac=TOL_JAC) -> float:
    """``max |G(p, flatten(T_n)) - p_n|`` at interior nodes.

    Small for smooth maps.  Near an endpoint where the exact map has an
    unbounded derivative (a target density vanishing there) the finite
    differences of the flattened map are inaccurate and this diagnostic is
    dominated by the first few nodes.
    """
    pushed = score_operator_1d(p, flatten(state.T), tol_jac=tol_jac)
    return interior_sup(pushed.values - state.p.grid_function.values)


__all__ = [
    "TransportMap",
    "HistoryRecord",
    "KamOptions",
    "KamState",
    "CONVERGED",
    "NOT_CONVERGED",
    "flatten",
    "initial_state",
    "kam_step",
    "run_kam",
    "quadratic_contraction_report",
    "map_consistency",
    "history_to_csv",
]
