"""Pointwise multivariate score transformation.

For a diffeomorphism ``U`` of R^d and a measure with score ``s`` (a row
vector), the score of ``U_# mu`` at ``y = U(x)`` is

    (s(x) - t(x)) J(x)^{-1},      t_i = tr(J^{-1} d_i J),

with ``J = grad U`` (``J[j, k] = d_k U_j``).  This is ``log rho(x) -
log|det J(x)|`` differentiated along ``U``, using Jacobi's formula for the
derivative of the determinant.  The tensor ``H[i] = d_i J`` (so ``H[i][j, k] =
d_i d_k U_j``) carries the second derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateJacobianError, DomainError

TOL_DET = 1e-10
_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class PointJet:
    """Everything the score transformation needs at one point ``x``."""

    x: np.ndarray
    s_x: np.ndarray
    J: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        d = x.shape[0]
        s = np.atleast_1d(np.asarray(self.s_x, dtype=float))
        J = np.asarray(self.J, dtype=float).reshape(d, d)
        H = np.asarray(self.H, dtype=float).reshape(d, d, d)
        if s.shape != (d,):
            raise DomainError(f"score has shape {s.shape}, expected ({d},)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "s_x", s)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "H", H)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    def mixed_symmetry_defect(self) -> float:
        """``max |H[i][j, k] - H[k][j, i]|`` (equality of mixed partials)."""
        return float(np.max(np.abs(self.H - np.transpose(self.H, (2, 1, 0)))))


def _check_det(J, tol_det):
    det = float(np.linalg.det(J))
    if not abs(det) >= tol_det:
        raise DegenerateJacobianError(f"|det J| = {abs(det):.3e} < {tol_det:g}")


def log_det_gradient(jet: PointJet, tol_det=TOL_DET) -> np.ndarray:
    """``t_i = tr(J^{-1} H[i])``."""
    _check_det(jet.J, tol_det)
    M = np.linalg.solve(jet.J, jet.H.transpose(1, 0, 2).reshape(jet.dim, -1))
    M = M.reshape(jet.dim, jet.dim, jet.dim)  # M[a, i, k] = (J^{-1} H[i])[a, k]
    return np.einsum("aia->i", M)


def pushforward_score_at_point(jet: PointJet, tol_det=TOL_DET) -> np.ndarray:
    """Score of ``U_# mu`` at ``U(x)``; solves with ``J^T`` instead of inverting."""
    t = log_det_gradient(jet, tol_det)
    return np.linalg.solve(jet.J.T, jet.s_x - t)


def _fd_jacobian(U, x, d):
    J = np.empty((d, d))
    for k in range(d):
        step = _EPS ** (1.0 / 3.0) * max(1.0, abs(x[k]))
        e = np.zeros(d)
        e[k] = step
        J[:, k] = (np.asarray(U(x + e), dtype=float) - np.asarray(U(x - e), dtype=float)) / (2.0 * step)
    return J


def _fd_hessian(U, x, d):
    H = np.empty((d, d, d))
    steps = 10.0 * _EPS ** 0.25 * np.maximum(1.0, np.abs(x))
    f0 = np.asarray(U(x), dtype=float)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = steps[i]
        H[i, :, i] = (np.asarray(U(x + ei)) - 2.0 * f0 + np.asarray(U(x - ei))) / steps[i] ** 2
        for k in range(i + 1, d):
            ek = np.zeros(d)
            ek[k] = steps[k]
            mixed = (
                np.asarray(U(x + ei + ek)) - np.asarray(U(x + ei - ek))
                - np.asarray(U(x - ei + ek)) + np.asarray(U(x - ei - ek))
            ) / (4.0 * steps[i] * steps[k])
            H[i, :, k] = mixed
            H[k, :, i] = mixed
    return H


def _fd_hessian_from_grad(gradU, x, d):
    H = np.empty((d, d, d))
    for i in range(d):
        step = _EPS ** (1.0 / 3.0) * max(1.0, abs(x[i]))
        e = np.zeros(d)
        e[i] = step
        H[i] = (np.asarray(gradU(x + e), dtype=float) - np.asarray(gradU(x - e), dtype=float)) / (2.0 * step)
    return H


def jet_from_map(U, gradU=None, x=None, s=None, hessU=None) -> PointJet:
    """Build a :class:`PointJet` for ``U`` at ``x`` with source score ``s``.

    ``J`` is ``gradU(x)`` when supplied, else central differences with step
    ``eps**(1/3) * max(1, |x|)``.  ``H`` is ``hessU(x)`` when supplied, else
    central differences of ``gradU``, else second differences of ``U`` with
    step ``10 * eps**(1/4) * max(1, |x|)`` (balances truncation against
    rounding for a second derivative).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.shape[0]

    def vec(f, shape):
        # scalar maps (d = 1) may be written in terms of a plain float
        return lambda z: np.asarray(f(z[0] if d == 1 else z), dtype=float).reshape(shape)

    Uv = vec(U, (d,))
    J = vec(gradU, (d, d))(x) if gradU is not None else _fd_jacobian(Uv, x, d)
    if hessU is not None:
        H = vec(hessU, (d, d, d))(x)
    elif gradU is not None:
        H = _fd_hessian_from_grad(vec(gradU, (d, d)), x, d)
    else:
        H = _fd_hessian(Uv, x, d)
    s_x = vec(s, (d,))(x) if callable(s) else s
    return PointJet(x, s_x, J, H)


def chain_jets(outer: PointJet, inner: PointJet) -> PointJet:
    """Jet of ``U1 o U2`` at ``inner.x``, from ``outer`` (``U1`` at ``U2(x)``)
    and ``inner`` (``U2`` at ``x``); the score is ``inner``'s."""
    J1, H1, J2, H2 = outer.J, outer.H, inner.J, inner.H
    J = J1 @ J2
    H = np.einsum("ajb,ai,bk->ijk", H1, J2, J2) + np.einsum("ja,iak->ijk", J1, H2)
    return PointJet(inner.x, inner.s_x, J, H)


def pushforward_1d(s_x, du, d2u) -> float:
    """d = 1 form ``[s - U''/U'] / U'``."""
    return float(pushforward_score_at_point(PointJet([0.0], [s_x], [[du]], [[[d2u]]]))[0])
