"""Invariants checked on generated inputs."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from kamtransport.config import parse_config, to_text
from kamtransport.elliptic import apply, assemble, solve
from kamtransport.gaussian_affine import affine_step, make_state, run_affine
from kamtransport.grid import MONOTONE_CUBIC, Grid, GridFunction, fmt, identity, inverse_at
from kamtransport.kam import TransportMap, flatten
from kamtransport.score import ScoreModel, score_operator_1d
from kamtransport.scoreop_nd import PointJet, pushforward_1d, pushforward_score_at_point

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def increasing_values(draw, n_min=4, n_max=40):
    n = draw(st.integers(n_min, n_max))
    steps = draw(st.lists(st.floats(1e-3, 10.0), min_size=n - 1, max_size=n - 1))
    start = draw(st.floats(-100, 100))
    return np.concatenate([[start], start + np.cumsum(steps)])


@SETTINGS
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trip(x):
    assert float(fmt(x)) == x


@SETTINGS
@given(increasing_values(), st.floats(0, 1))
def test_monotone_cubic_inverse_round_trip(vals, frac):
    g = Grid(0.0, 1.0, len(vals))
    T = GridFunction(g, vals, MONOTONE_CUBIC)
    y = vals[0] + frac * (vals[-1] - vals[0])
    x = inverse_at(T, y)
    assert 0.0 <= x <= 1.0
    assert abs(T(x) - y) <= 1e-8 * max(1.0, abs(y))


@SETTINGS
@given(increasing_values())
def test_monotone_cubic_stays_monotone(vals):
    g = Grid(0.0, 1.0, len(vals))
    out = GridFunction(g, vals, MONOTONE_CUBIC)(np.linspace(0, 1, 400))
    assert np.all(np.diff(out) >= -1e-12 * np.max(np.abs(vals)))


@SETTINGS
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3))
def test_score_identity_exact(c0, c1, c2):
    g = Grid(-1.0, 1.0, 33)
    s = ScoreModel.closed_form(lambda x: c0 + c1 * x + c2 * x**2, lambda x: c1 + 2 * c2 * x)
    np.testing.assert_array_equal(score_operator_1d(s, identity(g)).values, s(g.nodes))


@SETTINGS
@given(st.floats(-0.3, 0.3), st.floats(-2, 2), st.floats(-2, 2))
def test_score_shift(c, c0, c1):
    g = Grid(-1.0, 1.0, 41)
    s = ScoreModel.closed_form(lambda x: c0 + c1 * x, lambda x: c1 + 0 * x)
    out = score_operator_1d(s, GridFunction(g, g.nodes + c, MONOTONE_CUBIC)).values
    mask = (g.nodes >= -1 + c) & (g.nodes <= 1 + c)
    mask[[0, -1]] = False
    np.testing.assert_allclose(out[mask], s(g.nodes[mask] - c), atol=1e-8)


@SETTINGS
@given(st.floats(0.2, 3), st.floats(-1, 1), finite)
def test_affine_maps_exact(A, B, s0):
    # under x -> A x + B a constant score s0 becomes s0 / A
    g = Grid(-1.0, 1.0, 21)
    U = GridFunction(g, A * g.nodes + B, MONOTONE_CUBIC, "linear")
    out = score_operator_1d(ScoreModel.closed_form(lambda x: s0 + 0 * x, lambda x: 0 * x), U).values
    # differences of exact affine values carry rounding (~ eps |U| / h^2 in U'');
    # preimages outside [a, b] see U' and U'' noise linearly extrapolated
    floor = 100 * np.finfo(float).eps * np.max(np.abs(U.values)) / (g.h**2 * A**2)
    x = (g.nodes - B) / A
    reach = 1.0 + np.maximum(0.0, np.abs(x) - 1.0) / g.h
    reach[[0, -1]] = np.maximum(reach[[0, -1]], 2.0 * reach[[1, -2]])  # extrapolated ends
    assert np.all(np.abs(out - s0 / A) <= (1e-12 * abs(s0 / A) + floor) * reach)


@SETTINGS
@given(finite, st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_nd_reduces_to_1d(s, du, d2u):
    got = pushforward_score_at_point(PointJet([0.3], [s], [[du]], [[[d2u]]]))[0]
    want = (s - d2u / du) / du
    assert abs(got - want) <= 1e-12 * max(1.0, abs(want))
    assert pushforward_1d(s, du, d2u) == got


@SETTINGS
@given(st.integers(0, 2**32 - 1))
def test_nd_orthogonal_invariance(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 6))
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    x = rng.normal(size=d)
    out = pushforward_score_at_point(PointJet(x, -x, Q, np.zeros((d, d, d))))
    np.testing.assert_allclose(out, -(Q @ x), atol=1e-10)


@SETTINGS
@given(st.floats(-3, 3), st.floats(0.3, 3), st.floats(-3, 3))
def test_affine_recurrence_converges(m, sigma, b0):
    # any start with A_0 > 0 (a_0 < 1 / sigma^2) and a_0 < 0 reaches the fixed point
    a0 = -0.7 / sigma**2
    t = run_affine(m, sigma, a0, b0, 40)
    assert t.final.err_a <= 1e-12 / sigma**2
    assert t.final.err_b <= 1e-9 * (1 + abs(m)) / sigma**2
    assert abs(t.slope - sigma * np.sqrt(-a0)) <= 1e-8 * sigma


@SETTINGS
@given(st.floats(-3, 3), st.floats(0.3, 3))
def test_affine_fixed_point_invariant(m, sigma):
    st_ = make_state(m, sigma, -1 / sigma**2, m / sigma**2)
    nxt = affine_step(st_)
    assert abs(nxt.a - st_.a) <= 1e-15 / sigma**2 and abs(nxt.b - st_.b) <= 1e-14 * (1 + abs(m)) / sigma**2


@SETTINGS
@given(st.integers(8, 120), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_elliptic_apply_inverts_solve(n, slope, seed):
    g = Grid(0.0, 1.0, n)
    q = ScoreModel.closed_form(lambda x: slope * (x - 0.5), lambda x: slope + 0 * x)
    op = assemble(q, g)
    f = np.random.default_rng(seed).normal(size=n)
    np.testing.assert_allclose(apply(op, solve(op, f)), f[1:-1], rtol=1e-8, atol=1e-8)


@SETTINGS
@given(st.lists(st.floats(-0.04, 0.04), min_size=1, max_size=4))
def test_flatten_matches_sequential_evaluation(amps):
    g = Grid(0.0, 1.0, 33)
    T = TransportMap(g)
    for k, a in enumerate(amps):
        T = T.push(GridFunction(g, a * np.sin((k + 1) * np.pi * g.nodes)))
    np.testing.assert_array_equal(flatten(T).values, T(g.nodes))


@SETTINGS
@given(
    st.sampled_from(["kam", "fixed_point"]),
    st.integers(16, 512),
    st.floats(0.05, 1.0),
    st.integers(0, 2**31),
)
def test_config_text_round_trip(method, n, omega, seed):
    text = (f"[experiment]\nsource = uniform\ntarget = cubic_paper\ngrid_n = {n}\nmethod = {method}\n"
            f"output_dir = /tmp/x\n[fixed_point]\nomega = {omega!r}\n[sampling]\nseed = {seed}\n")
    cfg = parse_config(text)
    assert parse_config(to_text(cfg)) == cfg
