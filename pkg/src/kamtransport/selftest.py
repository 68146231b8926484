"""Quick invariant suite behind the ``selftest`` and ``check-nd`` subcommands.

Each check returns ``(passed, detail)``; :func:`run_checks` prints one line
per check.  The full test-suite lives in ``tests/``; these are the fast,
dependency-free versions.
"""

from __future__ import annotations

import numpy as np

from . import _pykernels, kernels
from .catalog import cubic_paper, quadratic_paper, uniform
from .elliptic import assemble, solve
from .fixedpoint import FpOptions, run_fixed_point
from .gaussian_affine import affine_fit, gaussian_score, run_affine
from .grid import Grid, GridFunction, MONOTONE_CUBIC, compose, derivative, from_function, invert_monotone
from .kam import KamOptions, flatten, run_kam
from .ot import increasing_rearrangement, transport_defect
from .sampling import sample_source
from .score import ScoreModel, group_property_check, score_operator_1d
from .scoreop_nd import chain_jets, jet_from_map, pushforward_1d, pushforward_score_at_point


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


# -- d-dimensional operator ---------------------------------------------------

def nd_rotation():
    R = _rotation(0.7)
    x = np.array([0.3, -1.2])
    exact = jet_from_map(lambda z: R @ z, lambda z: R, x, lambda z: -z, hessU=lambda z: np.zeros((2, 2, 2)))
    fd = jet_from_map(lambda z: R @ z, None, x, lambda z: -z)
    e1 = np.max(np.abs(pushforward_score_at_point(exact) + R @ x))
    e2 = np.max(np.abs(pushforward_score_at_point(fd) + R @ x))
    return e1 <= 1e-10 and e2 <= 1e-6, f"analytic {e1:.1e}, finite-difference {e2:.1e}"


def nd_scaling():
    sig = np.array([0.5, 3.0])
    x = np.array([1.1, -0.4])
    D = np.diag(sig)
    exact = jet_from_map(lambda z: D @ z, lambda z: D, x, lambda z: -z, hessU=lambda z: np.zeros((2, 2, 2)))
    fd = jet_from_map(lambda z: D @ z, None, x, lambda z: -z)
    want = -x / sig
    e1 = np.max(np.abs(pushforward_score_at_point(exact) - want))
    e2 = np.max(np.abs(pushforward_score_at_point(fd) - want))
    return e1 <= 1e-10 and e2 <= 1e-6, f"analytic {e1:.1e}, finite-difference {e2:.1e}"


def nd_one_dimensional():
    worst = 0.0
    for s, du, d2u in [(0.3, 2.0, 0.5), (-1.7, 0.25, -3.0), (4.0, 1.5, 0.0)]:
        worst = max(worst, abs(pushforward_1d(s, du, d2u) - (s - d2u / du) / du))
    return worst <= 1e-12, f"max deviation {worst:.1e}"


def nd_composition():
    A = np.array([[1.2, 0.3], [-0.1, 0.8]])

    def U1(z):
        return np.array([z[0] + 0.1 * z[1] ** 2, z[1] + 0.05 * z[0] ** 3])

    def gU1(z):
        return np.array([[1.0, 0.2 * z[1]], [0.15 * z[0] ** 2, 1.0]])

    def hU1(z):
        H = np.zeros((2, 2, 2))
        H[1, 0, 1] = 0.2
        H[0, 1, 0] = 0.3 * z[0]
        return H

    def U2(z):
        return A @ z + np.array([0.1 * np.sin(z[0]), 0.0])

    def gU2(z):
        return A + np.array([[0.1 * np.cos(z[0]), 0.0], [0.0, 0.0]])

    def hU2(z):
        H = np.zeros((2, 2, 2))
        H[0, 0, 0] = -0.1 * np.sin(z[0])
        return H

    x = np.array([0.4, -0.7])
    s = np.array([-0.4, 0.7])
    inner = jet_from_map(U2, gU2, x, s, hU2)
    outer = jet_from_map(U1, gU1, U2(x), pushforward_score_at_point(inner), hU1)
    seq = pushforward_score_at_point(outer)
    whole = pushforward_score_at_point(chain_jets(outer, inner))
    err = float(np.max(np.abs(seq - whole)))
    return err <= 1e-8, f"sequential vs composed {err:.1e}"


def nd_hessian_symmetry():
    def U(z):
        return np.array([z[0] + z[1] ** 2, z[1] + np.sin(z[0] * z[1])])

    jet = jet_from_map(U, None, np.array([0.3, 0.9]), lambda z: -z)
    d = jet.mixed_symmetry_defect()
    return d <= 1e-8, f"mixed-partial defect {d:.1e}"


ND_CHECKS = [
    ("nd: rotation invariance of the Gaussian score", nd_rotation),
    ("nd: diagonal scaling", nd_scaling),
    ("nd: d=1 reduces to the 1D formula", nd_one_dimensional),
    ("nd: composition through chained jets", nd_composition),
    ("nd: finite-difference Hessian symmetry", nd_hessian_symmetry),
]


# -- one-dimensional library --------------------------------------------------

def grid_stencils():
    g = Grid(0.0, 1.0, 33)
    d = derivative(from_function(g, lambda x: x * x)).values
    err = np.max(np.abs(d - 2 * g.nodes)[1:-1])
    errs = []
    for n in (65, 129):
        gg = Grid(0.0, 1.0, n)
        f = from_function(gg, lambda x: np.sin(2 * np.pi * x))
        errs.append(np.max(np.abs(derivative(f).values - 2 * np.pi * np.cos(2 * np.pi * gg.nodes))[1:-1]))
    ratio = errs[0] / errs[1]
    return err <= 1e-12 and 3.2 <= ratio <= 4.8, f"quadratic {err:.1e}, refinement ratio {ratio:.2f}"


def grid_inversion():
    g = Grid(0.0, 1.0, 64)
    T = GridFunction(g, g.nodes + 0.3 * g.nodes**3, MONOTONE_CUBIC)
    S = invert_monotone(GridFunction(g, T.values, MONOTONE_CUBIC))
    back = compose(T, S).values
    mask = g.nodes <= T.values[-1]
    err = float(np.max(np.abs(back - g.nodes)[mask]))
    return err <= 1e-8, f"T(T^-1(y)) - y = {err:.1e}"


def score_identity_shift():
    g = Grid(0.0, 1.0, 128)
    s = ScoreModel.closed_form(lambda x: np.sin(3 * x), lambda x: 3 * np.cos(3 * x))
    ident = score_operator_1d(s, GridFunction(g, g.nodes, MONOTONE_CUBIC)).values
    e_id = float(np.max(np.abs(ident - s(g.nodes))))
    c = 0.1
    shifted = score_operator_1d(s, GridFunction(g, g.nodes + c, MONOTONE_CUBIC)).values
    mask = (g.nodes >= c) & (np.arange(g.n) > 0) & (np.arange(g.n) < g.n - 1)
    e_sh = float(np.max(np.abs(shifted - s(g.nodes - c))[mask]))
    return e_id == 0.0 and e_sh <= 1e-8, f"identity {e_id:.1e}, shift {e_sh:.1e}"


def score_group():
    rng = np.random.default_rng(7)
    s = ScoreModel.closed_form(lambda x: -4 * (x - 0.3), lambda x: np.full(np.shape(x), -4.0))
    fails = 0
    for _ in range(10):
        a1, b1, a2, b2 = rng.uniform(-0.3, 0.3, 4)
        defect, tol = group_property_check(
            s, lambda x: x + x * (1 - x) * (a1 + b1 * x), lambda x: x + x * (1 - x) * (a2 + b2 * x), 0.0, 1.0, 64
        )
        fails += defect > tol
    return fails == 0, f"{fails} of 10 random map pairs outside tol_group"


def elliptic_order():
    g = Grid(0.0, 1.0, 101)
    zero = ScoreModel.closed_form(lambda x: 0 * x, lambda x: 0 * x)
    v = solve(assemble(zero, g), lambda x: np.full(np.shape(x), 2.0)).values
    exact_err = float(np.max(np.abs(v - (g.nodes**2 - g.nodes))))
    q = ScoreModel.closed_form(lambda x: -x, lambda x: np.full(np.shape(x), -1.0))

    def f(x):
        return -np.pi**2 * np.sin(np.pi * x) - x * np.pi * np.cos(np.pi * x) - np.sin(np.pi * x)

    errs = []
    for n in (64, 128, 256):
        gg = Grid(0.0, 1.0, n)
        errs.append(np.max(np.abs(solve(assemble(q, gg), f).values - np.sin(np.pi * gg.nodes))))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = exact_err <= 1e-10 and all(3.6 <= r <= 4.4 for r in ratios)
    return ok, f"quadratic {exact_err:.1e}, ratios {ratios[0]:.3f}, {ratios[1]:.3f}"


def affine_recurrence():
    t = run_affine(1.0, 2.0, -1.0, 0.0, 12)
    fin = t.final
    ok = fin.err_a <= 1e-12 and fin.err_b <= 1e-12 and abs(t.slope - 2) <= 1e-10 and abs(t.intercept - 1) <= 1e-10
    return ok, f"err_a {fin.err_a:.1e}, err_b {fin.err_b:.1e}, map {t.slope:.12g} x + {t.intercept:.12g}"


def kam_gaussian_oracle():
    g = Grid(-7.0, 9.0, 256)
    st = run_kam(gaussian_score(0, 1), gaussian_score(1, 2), g,
                 KamOptions(max_iters=6, boundary="linear", extrapolation="linear"))
    t = run_affine(1.0, 2.0, -1.0, 0.0, 6)
    worst = 0.0
    for k, v in enumerate(st.T.stack):
        c, d, _ = affine_fit(g.nodes[1:-1], v.values[1:-1])
        worst = max(worst, abs(c - (t.states[k].A - 1)), abs(d - t.states[k].B))
    return worst <= 1e-4, f"max coefficient deviation {worst:.1e}"


def fixed_point_gaussian():
    g = Grid(-8.0, 8.0, 33)
    p, q = gaussian_score(0, 1), gaussian_score(0, 2)
    osc = run_fixed_point(p, q, g, FpOptions(omega=1.0, max_iters=4, extrapolation="linear"))
    slopes = [affine_fit(g.nodes, T.values)[0] for T in osc.maps]
    e_osc = max(abs(sl - (1.0 if k % 2 == 0 else 4.0)) for k, sl in enumerate(slopes))
    rel = run_fixed_point(p, q, g, FpOptions(omega=0.5, max_iters=8, extrapolation="linear"))
    slope = affine_fit(g.nodes, rel.T.values)[0]
    ok = e_osc <= 1e-10 and rel.converged and abs(slope - 2.0) <= 1e-5
    return ok, f"oscillation {e_osc:.1e}, relaxed slope {slope:.12g} after {rel.iterations} steps"


def ot_oracle():
    mu = uniform().density(0.0, 1.0)
    d1, d2 = cubic_paper().density(0.0, 1.0), quadratic_paper().density(0.0, 1.0)
    g = Grid(0.0, 1.0, 128)
    defect = max(transport_defect(mu, d, increasing_rearrangement(mu, d, g)) for d in (d1, d2))
    ez = max(abs(d1.Z - 11 / 28), abs(d2.Z - 5 / 9))
    return ez <= 1e-12 and defect <= 1e-6, f"normalization {ez:.1e}, CDF defect {defect:.1e}"


def kam_reproduction():
    g = Grid(0.0, 1.0, 128)
    mu = uniform().density(0.0, 1.0)
    msgs, ok = [], True
    for entry in (quadratic_paper(), cubic_paper()):
        st = run_kam(uniform().score, entry.score, g)
        err = float(np.max(np.abs(flatten(st.T).values - increasing_rearrangement(mu, entry.density(0, 1), g).values)))
        ok &= st.converged and err <= 5e-2
        msgs.append(f"{entry.name}: {st.iter} its, map error {err:.1e}")
    return ok, "; ".join(msgs)


def sampling_determinism():
    d = quadratic_paper().density(0.0, 1.0)
    a = sample_source(d, 1000, 42).values
    b = sample_source(d, 1000, 42).values
    return bool(np.array_equal(a, b)), "identical batches for identical seeds"


def kernel_backends():
    rng = np.random.default_rng(3)
    y = np.cumsum(rng.uniform(0.1, 1.0, 50))
    xq = rng.uniform(-0.5, 50.0, 200)
    d1 = kernels.pchip_slopes(y, 1.0)
    d2 = _pykernels.pchip_slopes(y, 1.0)
    e1 = np.max(np.abs(kernels.hermite_eval(y, d1, 0.0, 1.0, xq, True) - _pykernels.hermite_eval(y, d2, 0.0, 1.0, xq, True)))
    t = rng.uniform(y[0], y[-1], 200)
    e2 = np.max(np.abs(kernels.hermite_invert(y, d1, 0.0, 1.0, t, 1e-12, 200, False)
                       - _pykernels.hermite_invert(y, d2, 0.0, 1.0, t, 1e-12, 200, False)))
    err = max(float(e1), float(e2))
    return err <= 1e-12, f"{kernels.BACKEND} vs python: {err:.1e}"


CHECKS = [
    ("grid: stencils exact on quadratics, second order", grid_stencils),
    ("grid: monotone inversion round trip", grid_inversion),
    ("score: identity and shift properties", score_identity_shift),
    ("score: group property", score_group),
    ("elliptic: exact on quadratics, second-order convergence", elliptic_order),
    ("affine: recurrence reaches the Gaussian fixed point", affine_recurrence),
    ("kam: numerical steps match the affine oracle", kam_gaussian_oracle),
    ("fixed point: 2-cycle and relaxed convergence", fixed_point_gaussian),
    ("ot: normalization and rearrangement", ot_oracle),
    ("kam: uniform source to both polynomial targets", kam_reproduction),
    ("sampling: seeded determinism", sampling_determinism),
    ("kernels: compiled and numpy backends agree", kernel_backends),
] + ND_CHECKS


def run_checks(checks, out=print) -> bool:
    all_ok = True
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
    return all_ok
