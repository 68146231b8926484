"""Both kernel backends agree, and the tridiagonal solver matches a banded LAPACK solve."""

import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.linalg import solve_banded

from kamtransport import _pykernels, kernels

try:
    from kamtransport import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def _system(n, seed):
    rng = np.random.default_rng(seed)
    sub, sup = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
    diag = 2.5 + rng.uniform(0, 1, n)
    return sub, diag, sup, rng.normal(size=n)


@pytest.mark.parametrize("impl", [_pykernels] + ([_ckernels] if _ckernels else []))
def test_thomas_matches_banded_lapack(impl):
    sub, diag, sup, rhs = _system(200, 0)
    x, ok = impl.thomas(sub, diag, sup, rhs, 1e-12)
    ab = np.zeros((3, 200))
    ab[0, 1:], ab[1], ab[2, :-1] = sup, diag, sub
    assert ok
    np.testing.assert_allclose(x, solve_banded((1, 1), ab, rhs), rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("impl", [_pykernels] + ([_ckernels] if _ckernels else []))
def test_thomas_flags_zero_pivot(impl):
    _, ok = impl.thomas(np.array([1.0]), np.array([0.0, 1.0]), np.array([1.0]), np.array([1.0, 1.0]), 1e-12)
    assert not ok


@needs_ext
def test_backends_agree_bitwise():
    rng = np.random.default_rng(11)
    n = 77
    y = np.cumsum(rng.uniform(0.05, 1.0, n))
    h = 0.013
    xq = rng.uniform(-0.2, n * h + 0.2, 500)
    tq = rng.uniform(y[0] - 1, y[-1] + 1, 500)
    sub, diag, sup, rhs = _system(n, 3)
    for lin in (False, True):
        dp, dc = _pykernels.pchip_slopes(y, h), _ckernels.pchip_slopes(y, h)
        np.testing.assert_array_equal(dp, dc)
        np.testing.assert_array_equal(_pykernels.linear_eval(y, 0.1, h, xq, lin), _ckernels.linear_eval(y, 0.1, h, xq, lin))
        np.testing.assert_allclose(
            _pykernels.hermite_eval(y, dp, 0.1, h, xq, lin), _ckernels.hermite_eval(y, dc, 0.1, h, xq, lin), rtol=0, atol=1e-13
        )
        np.testing.assert_allclose(
            _pykernels.linear_invert(y, 0.1, h, tq, lin), _ckernels.linear_invert(y, 0.1, h, tq, lin), rtol=0, atol=1e-13
        )
        np.testing.assert_allclose(
            _pykernels.hermite_invert(y, dp, 0.1, h, tq, 1e-13, 200, lin),
            _ckernels.hermite_invert(y, dc, 0.1, h, tq, 1e-13, 200, lin),
            rtol=0, atol=1e-12,
        )
    xp, _ = _pykernels.thomas(sub, diag, sup, rhs, 1e-12)
    xc, _ = _ckernels.thomas(sub, diag, sup, rhs, 1e-12)
    np.testing.assert_array_equal(xp, xc)


@needs_ext
def test_compiled_kernels_accept_readonly_arrays():
    y = np.linspace(0, 1, 10)
    y.setflags(write=False)
    _ckernels.pchip_slopes(y, 0.1)


def test_environment_variable_forces_numpy_backend():
    env = dict(os.environ, KAMTRANSPORT_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import kamtransport.kernels as k; print(k.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.skipif(bool(os.environ.get("KAMTRANSPORT_PURE_PYTHON")), reason="numpy backend forced")
def test_compiled_backend_selected_by_default():
    assert kernels.BACKEND == "cython"
