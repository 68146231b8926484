import io

import numpy as np
import pytest
from scipy.interpolate import PchipInterpolator

from kamtransport.errors import DomainError, NotInvertibleError
from kamtransport.grid import (
    CLAMP, EXTRAPOLATE, LINEAR, MONOTONE_CUBIC, Grid, GridFunction, compose, derivative, first_nonincreasing,
    fmt, from_function, identity, interior_l2, interior_sup, inverse_at, invert_monotone, read_csv,
    second_derivative, write_csv,
)


@pytest.mark.parametrize("a,b,n", [(1.0, 1.0, 10), (2.0, 1.0, 10), (0.0, np.inf, 10), (0.0, 1.0, 2), (0.0, 1.0, 4.5)])
def test_grid_rejects_bad_input(a, b, n):
    with pytest.raises(DomainError):
        Grid(a, b, n)


def test_grid_nodes_and_spacing():
    g = Grid(-1.0, 3.0, 5)
    assert g.h == 1.0
    np.testing.assert_array_equal(g.nodes, [-1, 0, 1, 2, 3])


def test_gridfunction_rejects_nonfinite_and_wrong_shape():
    g = Grid(0, 1, 5)
    with pytest.raises(DomainError):
        GridFunction(g, [0, 1, np.nan, 2, 3])
    with pytest.raises(DomainError):
        GridFunction(g, np.zeros(4))
    with pytest.raises(DomainError):
        GridFunction(g, np.zeros(5), interp="spline")


def test_values_are_immutable():
    f = identity(Grid(0, 1, 5))
    with pytest.raises(ValueError):
        f.values[0] = 3.0


def test_linear_interp_matches_numpy():
    g = Grid(0.0, 2.0, 17)
    f = from_function(g, np.sin, interp=LINEAR)
    x = np.linspace(0, 2, 301)
    np.testing.assert_allclose(f(x), np.interp(x, g.nodes, f.values), rtol=0, atol=1e-15)


def test_monotone_cubic_matches_scipy_pchip():
    # [DERIVED] scipy's PCHIP uses the same harmonic-mean slopes and
    # three-point end formula on a uniform grid
    g = Grid(0.0, 1.0, 23)
    y = np.cumsum(np.random.default_rng(1).uniform(0.01, 1.0, 23))
    f = GridFunction(g, y, MONOTONE_CUBIC)
    x = np.linspace(0, 1, 997)
    np.testing.assert_allclose(f(x), PchipInterpolator(g.nodes, y)(x), rtol=0, atol=1e-12)


def test_monotone_cubic_preserves_monotonicity():
    g = Grid(0.0, 1.0, 12)
    y = np.array([0, 0.01, 0.02, 0.5, 0.51, 0.52, 0.9, 0.91, 0.95, 0.99, 0.995, 1.0])
    f = GridFunction(g, y, MONOTONE_CUBIC)
    vals = f(np.linspace(0, 1, 5001))
    assert np.all(np.diff(vals) >= 0)


def test_extrapolation_policies():
    g = Grid(0.0, 1.0, 11)
    f = from_function(g, lambda x: 2 * x + 1, interp=MONOTONE_CUBIC, extrapolation=CLAMP)
    assert f(-1.0) == 1.0 and f(2.0) == 3.0
    lin = f.with_policy(extrapolation=EXTRAPOLATE)
    assert lin(-1.0) == pytest.approx(-1.0, abs=1e-13)
    assert lin(2.0) == pytest.approx(5.0, abs=1e-13)


def test_interp_rejects_nonfinite_abscissae():
    f = identity(Grid(0, 1, 5))
    with pytest.raises(DomainError):
        f(np.nan)


def test_scalar_in_scalar_out():
    f = identity(Grid(0, 1, 5))
    assert isinstance(f(0.3), float)


def test_derivative_exact_on_quadratics_including_ends():
    g = Grid(-1.0, 2.0, 13)
    f = from_function(g, lambda x: 3 * x * x - x + 2)
    np.testing.assert_allclose(derivative(f).values, 6 * g.nodes - 1, atol=1e-12)


def test_second_derivative_exact_on_cubics_including_ends():
    g = Grid(-1.0, 2.0, 13)
    f = from_function(g, lambda x: x**3 - 2 * x * x)
    np.testing.assert_allclose(second_derivative(f).values, 6 * g.nodes - 4, atol=1e-10)


def test_derivative_second_order():
    errs = []
    for n in (33, 65, 129):
        g = Grid(0.0, 1.0, n)
        errs.append(np.max(np.abs(derivative(from_function(g, np.exp)).values - np.exp(g.nodes))))
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_compose_with_identity():
    g = Grid(0.0, 1.0, 40)
    f = from_function(g, lambda x: x**2, interp=MONOTONE_CUBIC)
    np.testing.assert_array_equal(compose(f, identity(g)).values, f.values)


def test_inverse_round_trip():
    g = Grid(0.0, 1.0, 64)
    T = from_function(g, lambda x: x + 0.3 * np.sin(np.pi * x) / np.pi, interp=MONOTONE_CUBIC)
    y = np.linspace(T.values[0], T.values[-1], 333)
    np.testing.assert_allclose(T(inverse_at(T, y)), y, atol=1e-9)
    Tl = T.with_policy(interp=LINEAR)
    np.testing.assert_allclose(Tl(inverse_at(Tl, y)), y, atol=1e-13)


def test_inverse_of_affine_map():
    g = Grid(0.0, 1.0, 21)
    T = from_function(g, lambda x: 0.5 * x + 0.25, interp=MONOTONE_CUBIC)
    S = invert_monotone(T)
    inside = (g.nodes >= 0.25) & (g.nodes <= 0.75)
    np.testing.assert_allclose(S.values[inside], 2 * g.nodes[inside] - 0.5, atol=1e-10)
    assert S.values[0] == 0.0 and S.values[-1] == 1.0


def test_inverse_requires_increasing():
    g = Grid(0.0, 1.0, 5)
    T = GridFunction(g, [0, 0.3, 0.2, 0.6, 1.0])
    assert first_nonincreasing(T.values) == 1
    with pytest.raises(NotInvertibleError) as exc:
        inverse_at(T, 0.5)
    assert exc.value.index == 1


def test_interior_norms_skip_endpoints():
    v = np.array([100.0, 3.0, -4.0, 100.0])
    assert interior_sup(v) == 4.0
    assert interior_l2(v) == pytest.approx(np.sqrt(12.5))


def test_fmt_round_trips_doubles():
    rng = np.random.default_rng(5)
    for x in np.concatenate([rng.normal(size=200) * 10.0 ** rng.integers(-300, 300, 200), [0.1, 1 / 3, -0.0]]):
        assert float(fmt(x)) == x


def test_csv_round_trip_is_bit_exact(tmp_path):
    g = Grid(-0.3, 1.7, 31)
    rng = np.random.default_rng(2)
    cols = {"u": rng.normal(size=31), "w": np.exp(rng.normal(size=31))}
    path = tmp_path / "f.csv"
    write_csv(path, g.nodes, cols)
    back = read_csv(path)
    assert set(back) == {"u", "w"}
    for k in cols:
        np.testing.assert_array_equal(back[k].values, cols[k])
        assert back[k].grid.n == 31
    text = path.read_text()
    assert text.splitlines()[0] == "x,u,w"
    assert write_csv(None, g.nodes, cols) == text


def test_gridfunction_csv_methods():
    f = from_function(Grid(0, 1, 9), np.cos)
    buf = io.StringIO(f.to_csv())
    g = GridFunction.from_csv(buf)
    np.testing.assert_array_equal(g.values, f.values)
