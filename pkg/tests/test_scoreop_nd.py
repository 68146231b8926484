import numpy as np
import pytest
from scipy.optimize import fsolve

from kamtransport.errors import DegenerateJacobianError, DomainError
from kamtransport.grid import MONOTONE_CUBIC, Grid, GridFunction
from kamtransport.score import ScoreModel, score_operator_1d
from kamtransport.scoreop_nd import (
    PointJet, chain_jets, jet_from_map, log_det_gradient, pushforward_1d, pushforward_score_at_point,
)


def _rot(t):
    return np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])


def test_linear_maps_of_standard_gaussian():
    # [DERIVED] N(0, I) under A x + c is N(c, A A^T), score -(A A^T)^{-1} (y - c)
    rng = np.random.default_rng(0)
    for d in (1, 2, 3, 5):
        A = rng.normal(size=(d, d)) + 3 * np.eye(d)
        c = rng.normal(size=d)
        x = rng.normal(size=d)
        jet = PointJet(x, -x, A, np.zeros((d, d, d)))
        y = A @ x + c
        np.testing.assert_allclose(pushforward_score_at_point(jet), -np.linalg.solve(A @ A.T, y - c), atol=1e-10)


def test_rotation_and_scaling_with_both_jet_kinds():
    x = np.array([0.4, -0.9])
    R = _rot(1.1)
    for jet in (jet_from_map(lambda z: R @ z, lambda z: R, x, lambda z: -z, lambda z: np.zeros((2, 2, 2))),
                jet_from_map(lambda z: R @ z, None, x, lambda z: -z)):
        np.testing.assert_allclose(pushforward_score_at_point(jet), -(R @ x), atol=1e-6)
    D = np.diag([0.5, 4.0])
    jet = jet_from_map(lambda z: D @ z, None, x, lambda z: -z)
    np.testing.assert_allclose(pushforward_score_at_point(jet), -x / np.diag(D), atol=1e-6)


def _U(z):
    return np.array([z[0] + 0.1 * z[0] ** 3, z[1] + 0.3 * np.sin(z[0])])


def test_nonlinear_map_against_density_oracle():
    # [DERIVED] log-density of U_# N(0, I) via numerical inversion and change of
    # variables, differentiated by central differences
    def logdens(y):
        x = fsolve(lambda z: _U(z) - y, y, xtol=1e-14)
        det = (1 + 0.3 * x[0] ** 2) * 1.0
        return -0.5 * x @ x - np.log(det)

    x = np.array([0.7, -0.2])
    y = _U(x)
    h = 1e-5
    want = np.array([(logdens(y + h * e) - logdens(y - h * e)) / (2 * h) for e in np.eye(2)])
    got = pushforward_score_at_point(jet_from_map(_U, None, x, lambda z: -z))
    np.testing.assert_allclose(got, want, atol=1e-6)


def test_log_det_gradient_matches_finite_difference():
    x = np.array([0.7, -0.2])
    jet = jet_from_map(_U, None, x, np.zeros(2))
    h = 1e-6

    def logdet(z):
        return np.log(abs(np.linalg.det(jet_from_map(_U, None, z, np.zeros(2)).J)))

    fd = [(logdet(x + h * e) - logdet(x - h * e)) / (2 * h) for e in np.eye(2)]
    np.testing.assert_allclose(log_det_gradient(jet), fd, atol=1e-5)


def test_one_dimensional_reduction_matches_grid_operator():
    g = Grid(0.0, 1.0, 257)
    U = GridFunction(g, g.nodes + 0.1 * g.nodes**2, MONOTONE_CUBIC)
    s = ScoreModel.closed_form(lambda x: -2 * x, lambda x: -2 + 0 * x)
    grid_val = score_operator_1d(s, U)(1.1 * 0.5 + 0.1 * 0.25 - 0.05)  # U(0.5) = 0.525
    point = pushforward_1d(-1.0, 1.1, 0.2)
    assert point == pytest.approx(grid_val, abs=1e-4)
    assert pushforward_1d(0.3, 2.0, 0.5) == (0.3 - 0.25) / 2.0


def test_scalar_maps_accept_plain_floats():
    jet = jet_from_map(lambda t: t + t**3, None, 0.5, lambda t: -t)
    assert jet.J[0, 0] == pytest.approx(1.75, abs=1e-8)
    assert jet.H[0, 0, 0] == pytest.approx(3.0, abs=1e-5)


def test_chain_rule_for_jets():
    x = np.array([0.2, 0.5])
    A = np.array([[2.0, 0.3], [0.0, 1.5]])
    inner = jet_from_map(_U, None, x, lambda z: -z)
    outer = jet_from_map(lambda z: A @ z + np.array([z[1] ** 2, 0.0]), None, _U(x), np.zeros(2))
    whole = jet_from_map(lambda z: A @ _U(z) + np.array([_U(z)[1] ** 2, 0.0]), None, x, lambda z: -z)
    comp = chain_jets(outer, inner)
    np.testing.assert_allclose(comp.J, whole.J, atol=1e-8)
    np.testing.assert_allclose(comp.H, whole.H, atol=1e-5)


def test_hessian_mixed_symmetry():
    jet = jet_from_map(lambda z: np.array([z[0] * z[1] ** 2, np.exp(z[0]) + z[1]]), None, [0.3, 0.4], np.zeros(2))
    assert jet.mixed_symmetry_defect() <= 1e-12


def test_degenerate_jacobian():
    jet = PointJet([0.0, 0.0], [1.0, 1.0], [[1.0, 1.0], [1.0, 1.0]], np.zeros((2, 2, 2)))
    with pytest.raises(DegenerateJacobianError):
        pushforward_score_at_point(jet)


def test_shape_validation():
    with pytest.raises(DomainError):
        PointJet([0.0, 0.0], [1.0, 2.0, 3.0], np.eye(2), np.zeros((2, 2, 2)))
