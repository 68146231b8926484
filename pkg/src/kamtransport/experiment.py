"""Run a configured experiment and write its data files.

Every run writes into ``cfg.output_dir``:

``history.csv``
    per-iteration norms (``iter,v_sup,residual_sup,residual_l2`` for KAM,
    ``iter,increment`` for the fixed point, the recurrence table for the
    affine oracle)
``map.csv``
    ``x`` with the constructed map and the increasing rearrangement
``score.csv``
    ``x`` with the target score and the final transported score
``hist.csv``
    histogram of pushed-forward source samples against the target
``summary.txt``
    flat ``key=value`` lines
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import catalog
from .config import ExperimentConfig
from .elliptic import assemble, sampled_rhs
from .errors import ConfigError, KamTransportError
from .fixedpoint import run_fixed_point
from .gaussian_affine import run_affine
from .grid import Grid, GridFunction, MONOTONE_CUBIC, fmt, write_csv
from .kam import flatten, run_kam
from .ot import PushforwardMeasure, increasing_rearrangement, wasserstein1
from .sampling import histogram, histogram_csv, ks_distance, pushforward_samples, sample_source, samples_csv
from .score import sample_score, score_operator_1d

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2
BULK_MASS = 1e-4


@dataclass
class ExperimentReport:
    name: str
    output_dir: str
    converged: bool
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.converged else EXIT_NOT_CONVERGED


def _summary_text(summary: dict) -> str:
    lines = []
    for k, v in summary.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = fmt(v)
        lines.append(f"{k}={v}")
    return "\n".join(lines) + "\n"


def _affine_coefficients(name):
    entry = catalog.resolve(name)
    if not entry.name.startswith("gaussian("):
        raise ConfigError(f"method gaussian_affine needs gaussian measures, got {name!r}")
    return entry.params


def bulk_map_error(T, T_ot, mu, mass=BULK_MASS) -> float:
    """Interior sup of ``T - T_ot`` over nodes whose source CDF lies in
    ``[mass, 1 - mass]``.

    In the far tails of a truncated measure the rearrangement is pinned to
    ``[a, b]`` while an untruncated construction (an affine Gaussian map, for
    instance) is not; those nodes carry negligible mass.
    """
    F = mu.cdf(T.grid.nodes)
    keep = (F >= mass) & (F <= 1.0 - mass)
    keep[[0, -1]] = False
    diff = np.abs(T.values - T_ot.values)[keep]
    return float(diff.max()) if diff.size else 0.0


def _pushforward_diagnostics(cfg, T, mu, nu, out, files, dump_samples):
    s = cfg.sampling
    batch = sample_source(mu, s.sample_count, s.seed)
    pushed = pushforward_samples(T, batch)
    hist = histogram(pushed, s.bins, range=(cfg.a, cfg.b))
    files["hist"] = os.path.join(out, "hist.csv")
    histogram_csv(hist, nu, files["hist"])
    if dump_samples:
        files["samples"] = os.path.join(out, "samples.csv")
        samples_csv(pushed, files["samples"])
    w1 = wasserstein1(PushforwardMeasure(T, mu), nu)
    return {"ks": ks_distance(pushed, nu), "w1": w1.value, "w1_error": w1.error}


def _run_kam(cfg, grid, src, tgt, out, files, dump_system):
    opts = cfg.kam
    if dump_system:
        op = assemble(tgt.score, grid, opts.boundary, opts.score_cap)
        files["system"] = os.path.join(out, "system.csv")
        op.dump_csv(files["system"], sampled_rhs(src.score, tgt.score, grid, opts.score_cap).values[1:-1])
    state = run_kam(src.score, tgt.score, grid, opts)
    files["history"] = os.path.join(out, "history.csv")
    state.history_csv(files["history"])
    T = flatten(state.T)
    qg, clipped = sample_score(tgt.score, grid, opts.score_cap)
    files["score"] = os.path.join(out, "score.csv")
    write_csv(files["score"], grid.nodes, {"q": qg.values, "p_final": state.p.grid_function.values})
    v = state.v_norms
    summary = {
        "iterations": state.iter,
        "converged": state.converged,
        "v_sup_first": float(v[0]),
        "v_sup_final": float(v[-1]),
        "v_monotone_after_first": bool(np.all(np.diff(v[1:]) <= 0.0)),
        "residual_sup_first": float(state.history[0].residual_sup),
        "residual_sup_final": state.final_residual_sup,
        "residual_l2_final": state.final_residual_l2,
        "score_clipped": clipped,
    }
    return T, "kam", summary, state.converged


def _run_fixed_point(cfg, grid, src, tgt, out, files):
    res = run_fixed_point(src.score, tgt.score, grid, cfg.fixed_point)
    files["history"] = os.path.join(out, "history.csv")
    write_csv(files["history"], np.arange(len(res.history)), {"increment": res.history}, xname="iter")
    qg, clipped = sample_score(tgt.score, grid, cfg.kam.score_cap)
    try:
        pushed = score_operator_1d(src.score, res.T).values
    except KamTransportError:  # a folded map has no transported score
        pushed = np.full(grid.n, math.nan)
    files["score"] = os.path.join(out, "score.csv")
    write_csv(files["score"], grid.nodes, {"q": qg.values, "p_final": pushed})
    summary = {
        "iterations": res.iterations,
        "converged": res.converged,
        "omega": cfg.fixed_point.omega,
        "increment_final": res.history[-1] if res.history else math.nan,
        "residual_sup_final": res.residual_sup,
        "out_of_range": res.out_of_range,
        "failure": res.failure or "none",
    }
    return res.T, "fixed_point", summary, res.converged


def _run_affine(cfg, grid, tgt, out, files):
    m0, s0 = _affine_coefficients(cfg.source)
    m, sigma = _affine_coefficients(cfg.target)
    traj = run_affine(m, sigma, -1.0 / s0**2, m0 / s0**2, cfg.affine_iters)
    rows = np.array(traj.table(), dtype=float)
    files["history"] = os.path.join(out, "history.csv")
    write_csv(files["history"], rows[:, 0].astype(int), dict(zip(("a", "b", "A", "B", "err_a", "err_b"), rows[:, 1:].T)), xname="n")
    c, d = traj.slope, traj.intercept
    T = GridFunction(grid, c * grid.nodes + d, MONOTONE_CUBIC)
    fin = traj.final
    files["score"] = os.path.join(out, "score.csv")
    write_csv(files["score"], grid.nodes, {"q": tgt.score(grid.nodes), "p_final": fin.a * grid.nodes + fin.b})
    summary = {
        "iterations": cfg.affine_iters,
        "converged": bool(fin.err_a <= 1e-12 and fin.err_b <= 1e-12),
        "a_final": fin.a,
        "b_final": fin.b,
        "err_a_final": fin.err_a,
        "err_b_final": fin.err_b,
        "slope": c,
        "intercept": d,
    }
    return T, "affine", summary, summary["converged"]


def run_experiment(cfg: ExperimentConfig, output_dir=None, dump_system=False, dump_samples=False) -> ExperimentReport:
    """Run ``cfg`` and write its files; errors propagate as exceptions."""
    out = output_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    grid = Grid(cfg.a, cfg.b, cfg.grid_n)
    src = catalog.resolve(cfg.source)
    tgt = catalog.resolve(cfg.target)
    mu = src.density(cfg.a, cfg.b)
    nu = tgt.density(cfg.a, cfg.b)
    files = {}
    if cfg.method == "kam":
        T, col, summary, converged = _run_kam(cfg, grid, src, tgt, out, files, dump_system)
    elif cfg.method == "fixed_point":
        T, col, summary, converged = _run_fixed_point(cfg, grid, src, tgt, out, files)
    else:
        T, col, summary, converged = _run_affine(cfg, grid, tgt, out, files)
    T_ot = increasing_rearrangement(mu, nu, grid)
    files["map"] = os.path.join(out, "map.csv")
    write_csv(files["map"], grid.nodes, {col: T.values, "ot": T_ot.values})
    head = {
        "name": cfg.label,
        "method": cfg.method,
        "source": cfg.source,
        "target": cfg.target,
        "a": cfg.a,
        "b": cfg.b,
        "grid_n": cfg.grid_n,
        "seed": cfg.sampling.seed,
        "sample_count": cfg.sampling.sample_count,
    }
    summary = {**head, **summary, "map_sup_error_vs_ot": bulk_map_error(T, T_ot, mu)}
    if np.all(np.diff(T.values) > 0):
        summary.update(_pushforward_diagnostics(cfg, T, mu, nu, out, files, dump_samples))
    files["summary"] = os.path.join(out, "summary.txt")
    with open(files["summary"], "w") as fh:
        fh.write(_summary_text(summary))
    return ExperimentReport(cfg.label, out, bool(converged), files, summary)
