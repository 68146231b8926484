"""Compare the compiled and numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time per kernel and the speed-up, plus a
full KAM run (uniform to quadratic_paper, 128 nodes) with each backend.
"""

import argparse
import time

import numpy as np

from kamtransport import _pykernels
from kamtransport.catalog import quadratic_paper, uniform
from kamtransport.grid import Grid
from kamtransport.kam import run_kam

try:
    from kamtransport import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, m):
    rng = np.random.default_rng(0)
    y = np.cumsum(rng.uniform(0.1, 1.0, n))
    xq = rng.uniform(0.0, 1.0, m)
    tq = rng.uniform(y[0], y[-1], m)
    sub, sup = rng.uniform(-1, 0, n), rng.uniform(-1, 0, n)
    diag = 3.0 + rng.uniform(0, 1, n)
    rhs = rng.normal(size=n)
    h = 1.0 / (n - 1)
    return {
        "thomas": lambda k: k.thomas(sub, diag, sup, rhs, 1e-12),
        "pchip_slopes": lambda k: k.pchip_slopes(y, h),
        "linear_eval": lambda k: k.linear_eval(y, 0.0, h, xq, True),
        "hermite_eval": lambda k: k.hermite_eval(y, k.pchip_slopes(y, h), 0.0, h, xq, True),
        "linear_invert": lambda k: k.linear_invert(y, 0.0, h, tq, False),
        "hermite_invert": lambda k: k.hermite_invert(y, k.pchip_slopes(y, h), 0.0, h, tq, 1e-12, 200, False),
    }


def kam_run():
    run_kam(uniform().score, quadratic_paper().score, Grid(0.0, 1.0, 128))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--nodes", type=int, default=4096)
    ap.add_argument("--queries", type=int, default=100_000)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not available; only the numpy backend can be timed")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'cython [ms]':>13}{'speed-up':>10}")
    for name, fn in cases(args.nodes, args.queries).items():
        tp = best_of(lambda: fn(_pykernels), args.repeat) * 1e3
        if _ckernels is None:
            print(f"{name:<16}{tp:>12.3f}")
            continue
        tc = best_of(lambda: fn(_ckernels), args.repeat) * 1e3
        print(f"{name:<16}{tp:>12.3f}{tc:>13.3f}{tp / tc:>10.1f}")

    # end-to-end: library modules look kernels up as kernels.<name>
    from kamtransport import kernels
    backends = [("numpy", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    for label, impl in backends:
        for k in kernels.__all__[1:]:  # skip BACKEND
            setattr(kernels, k, getattr(impl, k))
        print(f"full KAM run ({label}): {best_of(kam_run, args.repeat) * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
