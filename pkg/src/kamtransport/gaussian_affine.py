"""Closed-form KAM-Newton iteration for a Gaussian target.

With target score ``q(x) = -(x - m) / sigma**2`` and an affine current score
``p_n(x) = a_n x + b_n``, the Newton step is affine, ``v_n(x) = (A_n - 1) x + B_n``,
and the updates reduce to four scalar recurrences:

    A_n     = 1/2 - a_n sigma**2 / 2
    B_n     = m A_n - b_n sigma**2
    a_{n+1} = a_n / A_n**2
    b_{n+1} = b_n / A_n - a_n B_n / A_n**2

The last line follows from applying the score operator to ``x -> A_n x + B_n``.
The fixed point is ``a = -1/sigma**2``, ``b = m/sigma**2`` (``A = 1``, ``B = 0``)
and the error ``|a_n + 1/sigma**2|`` is squared (up to a constant) each step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateStepError, DomainError
from .score import ScoreModel


@dataclass(frozen=True)
class AffineState:
    """Current score ``a x + b`` and the step ``A x + B`` it induces."""

    a: float
    b: float
    A: float
    B: float
    m: float
    sigma: float

    @property
    def err_a(self) -> float:
        return abs(self.a + 1.0 / self.sigma**2)

    @property
    def err_b(self) -> float:
        return abs(self.b - self.m / self.sigma**2)


def step_coefficients(a, b, m, sigma):
    """``(A, B)`` of the Newton step from score ``a x + b``."""
    s2 = sigma * sigma
    A = 0.5 - a * s2 / 2.0
    B = m * A - b * s2
    return A, B


def make_state(m, sigma, a, b) -> AffineState:
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    A, B = step_coefficients(a, b, m, sigma)
    return AffineState(float(a), float(b), A, B, float(m), float(sigma))


def affine_step(st: AffineState) -> AffineState:
    """Advance one iteration; raises :class:`DegenerateStepError` if ``A_n = 0``."""
    A, B = st.A, st.B
    if A == 0.0:
        raise DegenerateStepError(f"A_n = 0 at a = {st.a!r}")
    a_next = st.a / (A * A)
    b_next = st.b / A - st.a * B / (A * A)
    return make_state(st.m, st.sigma, a_next, b_next)


@dataclass(frozen=True)
class AffineTrajectory:
    """States ``0..n_iters`` and the coefficients of ``T_n`` (``T_0 = Id``)."""

    states: tuple
    slopes: tuple
    intercepts: tuple

    @property
    def final(self) -> AffineState:
        return self.states[-1]

    @property
    def slope(self) -> float:
        return self.slopes[-1]

    @property
    def intercept(self) -> float:
        return self.intercepts[-1]

    def err_a(self) -> np.ndarray:
        return np.array([s.err_a for s in self.states])

    def err_b(self) -> np.ndarray:
        return np.array([s.err_b for s in self.states])

    def table(self):
        """Rows ``(n, a, b, A, B, err_a, err_b)``."""
        return [(n, s.a, s.b, s.A, s.B, s.err_a, s.err_b) for n, s in enumerate(self.states)]


def run_affine(m, sigma, a0, b0, n_iters) -> AffineTrajectory:
    """Iterate :func:`affine_step` ``n_iters`` times from ``(a0, b0)``.

    ``T_{n+1} = (A_n x + B_n) o T_n``, so slope and intercept update as
    ``(A_n c, A_n d + B_n)``.
    """
    if n_iters < 1:
        raise DomainError("n_iters must be at least 1")
    st = make_state(m, sigma, a0, b0)
    states, slopes, intercepts = [st], [1.0], [0.0]
    for _ in range(n_iters):
        c, d = slopes[-1], intercepts[-1]
        slopes.append(st.A * c)
        intercepts.append(st.A * d + st.B)
        st = affine_step(st)
        states.append(st)
    return AffineTrajectory(tuple(states), tuple(slopes), tuple(intercepts))


def contraction_constants(errors, floor=1e-14) -> np.ndarray:
    """``e_{n+1} / e_n**2`` for consecutive errors with ``e_n < 1``.

    Pairs where either error is at or below ``floor`` are skipped: once an
    error reaches round-off it cannot keep squaring.
    """
    e = np.asarray(errors, dtype=float)
    out = [e[i + 1] / e[i] ** 2 for i in range(len(e) - 1) if floor < e[i] < 1.0 and e[i + 1] > floor]
    return np.array(out)


def affine_fit(x, y):
    """Least-squares ``(slope, intercept)`` and the max deviation from the fit."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    X = np.column_stack([x, np.ones_like(x)])
    (c, d), *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(c), float(d), float(np.max(np.abs(c * x + d - y)))


def gaussian_score(m, sigma):
    """Closed-form score of ``N(m, sigma**2)``."""
    s2 = float(sigma) ** 2
    return ScoreModel.closed_form(
        lambda x: -(np.asarray(x, dtype=float) - m) / s2,
        lambda x: np.full(np.shape(x), -1.0 / s2),
        f"gaussian({m:g},{sigma:g})",
    )


__all__ = [
    "AffineState",
    "AffineTrajectory",
    "affine_step",
    "make_state",
    "run_affine",
    "step_coefficients",
    "contraction_constants",
    "affine_fit",
    "gaussian_score",
]
