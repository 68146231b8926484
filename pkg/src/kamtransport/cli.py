"""Command-line entry point: ``kamtransport <subcommand>``.

Exit codes: 0 success, 2 a run finished without converging, 1 error.
"""

from __future__ import annotations

import argparse
import glob
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from . import catalog
from .config import load_config
from .errors import KamTransportError
from .experiment import EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, run_experiment
from .gaussian_affine import run_affine
from .grid import Grid, write_csv
from .ot import increasing_rearrangement
from .selftest import CHECKS, ND_CHECKS, run_checks

AFFINE_TOL = 1e-12


def _config_paths(target):
    if os.path.isdir(target):
        paths = sorted(glob.glob(os.path.join(target, "*.ini")))
        if not paths:
            raise KamTransportError(f"no *.ini configs in {target!r}")
        return paths
    return [target]


def _run_one(path, output_dir, dump_system, dump_samples, method=None, omega=None):
    """Run one config file; returns ``(path, exit_code, message)``."""
    try:
        cfg = load_config(path)
        if method is not None:
            cfg = replace(cfg, method=method)
        if omega is not None:
            cfg = replace(cfg, fixed_point=replace(cfg.fixed_point, omega=omega))
        rep = run_experiment(cfg, output_dir, dump_system, dump_samples)
    except (KamTransportError, OSError) as exc:
        return path, EXIT_ERROR, f"error: {exc}"
    state = "converged" if rep.converged else "not converged"
    return path, rep.exit_code, f"{rep.name}: {state} after {rep.summary['iterations']} iterations -> {rep.output_dir}"


def _cmd_run(args, method=None, omega=None):
    try:
        paths = _config_paths(args.config)
    except KamTransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    def out_for(path):
        if args.output_dir is None:
            return None
        if len(paths) == 1:
            return args.output_dir
        return os.path.join(args.output_dir, os.path.splitext(os.path.basename(path))[0])

    jobs = [(p, out_for(p), args.dump_system, args.dump_samples, method, omega) for p in paths]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    else:
        results = [_run_one(*j) for j in jobs]
    codes = []
    for path, code, msg in results:
        print(msg, file=sys.stderr if code == EXIT_ERROR else sys.stdout)
        codes.append(code)
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_NOT_CONVERGED if EXIT_NOT_CONVERGED in codes else EXIT_OK


def _cmd_oracle(args):
    a, b = args.interval
    grid = Grid(a, b, args.grid_n)
    mu = catalog.resolve(args.mu).density(a, b)
    nu = catalog.resolve(args.nu).density(a, b)
    T = increasing_rearrangement(mu, nu, grid)
    if args.out == "-":
        write_csv(sys.stdout, grid.nodes, {"ot": T.values})
    else:
        parent = os.path.dirname(args.out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        write_csv(args.out, grid.nodes, {"ot": T.values})
        print(args.out)
    return EXIT_OK


def _cmd_gaussian_demo(args):
    traj = run_affine(args.m, args.sigma, args.a0, args.b0, args.iters)
    rows = traj.table()
    write_csv(sys.stdout, [r[0] for r in rows],
              dict(zip(("a", "b", "A", "B", "err_a", "err_b"), zip(*(r[1:] for r in rows)))), xname="n")
    fin = traj.final
    return EXIT_OK if max(fin.err_a, fin.err_b) <= AFFINE_TOL else EXIT_NOT_CONVERGED


def _cmd_checks(checks):
    return EXIT_OK if run_checks(checks) else EXIT_ERROR


def _add_run_flags(p):
    p.add_argument("config", help="config file, or a directory of *.ini configs")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for a config directory")
    p.add_argument("--output-dir", help="override the config's output_dir")
    p.add_argument("--dump-system", action="store_true", help="write the assembled tridiagonal system (kam only)")
    p.add_argument("--dump-samples", action="store_true", help="write the pushed-forward sample batch")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kamtransport", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run experiment config(s)")
    _add_run_flags(p)

    p = sub.add_parser("fixed-point", help="run config(s) with the relaxed fixed-point method")
    _add_run_flags(p)
    p.add_argument("--omega", type=float, help="relaxation parameter in (0, 1]")

    p = sub.add_parser("oracle", help="increasing rearrangement between two catalog measures")
    p.add_argument("--mu", required=True, help="source catalog name")
    p.add_argument("--nu", required=True, help="target catalog name")
    p.add_argument("--interval", type=float, nargs=2, default=(0.0, 1.0), metavar=("A", "B"))
    p.add_argument("--grid-n", type=int, default=128)
    p.add_argument("--out", default="map.csv", help="output CSV path, '-' for stdout")

    p = sub.add_parser("gaussian-demo", help="affine Gaussian recurrence table as CSV")
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=2.0)
    p.add_argument("--a0", type=float, default=-1.0)
    p.add_argument("--b0", type=float, default=0.0)
    p.add_argument("--iters", type=int, default=12)

    sub.add_parser("check-nd", help="d-dimensional score operator invariants")
    sub.add_parser("selftest", help="full invariant suite")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "fixed-point":
            return _cmd_run(args, method="fixed_point", omega=args.omega)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "gaussian-demo":
            return _cmd_gaussian_demo(args)
        if args.command == "check-nd":
            return _cmd_checks(ND_CHECKS)
        return _cmd_checks(CHECKS)
    except (KamTransportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
