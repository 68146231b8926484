"""Seeded inverse-CDF sampling, pushforward of samples and goodness of fit.

The generator is numpy's ``PCG64`` bit generator wrapped in a ``Generator``;
a batch is fully determined by ``(density, size, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .grid import GridFunction, first_nonincreasing, interp_eval, write_csv
from .ot import Density1D

PRNG = "numpy.random.PCG64"
DEFAULT_BINS = 50


@dataclass(frozen=True, eq=False)
class SampleBatch:
    values: np.ndarray
    seed: int
    size: int

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_source(d: Density1D, n: int, seed: int) -> SampleBatch:
    """``n`` draws from ``d`` by inverse-CDF sampling of PCG64 uniforms."""
    if n < 1:
        raise DomainError("sample size must be at least 1")
    u = rng(seed).random(int(n))
    x = np.clip(np.asarray(d.quantile(u), dtype=float), d.a, d.b)
    return SampleBatch(x, int(seed), int(n))


def pushforward_samples(T, batch: SampleBatch) -> SampleBatch:
    """Apply ``T`` (a GridFunction or any increasing callable) elementwise."""
    if isinstance(T, GridFunction):
        bad = first_nonincreasing(T.values)
        if bad is not None:
            raise DomainError(f"map is not increasing at node {bad}")
        y = interp_eval(T, batch.values)
    else:
        y = T(batch.values)
    return SampleBatch(np.asarray(y, dtype=float), batch.seed, batch.size)


def ks_distance(batch: SampleBatch, d: Density1D) -> float:
    """Kolmogorov-Smirnov statistic ``sup |F_n - F|`` against ``d``'s CDF."""
    x = np.sort(batch.values)
    n = x.size
    F = np.asarray(d.cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def ks_critical(n: int, level=0.01) -> float:
    """Asymptotic KS critical value ``c(level) / sqrt(n)``."""
    c = np.sqrt(-0.5 * np.log(level / 2.0))
    return float(c / np.sqrt(n))


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def density(self) -> np.ndarray:
        widths = np.diff(self.edges)
        total = self.counts.sum()
        return self.counts / (total * widths) if total else np.zeros_like(widths)


def histogram(batch: SampleBatch, bins=DEFAULT_BINS, range=None) -> Histogram:
    """Equal-width bin counts (over the sample range unless ``range`` is given)."""
    counts, edges = np.histogram(batch.values, bins=bins, range=range)
    return Histogram(edges, counts)


def histogram_csv(hist: Histogram, target: Density1D | None = None, path_or_buf=None):
    """``center,count,density[,target]`` rows; ``target`` is the normalized
    density averaged over each bin."""
    cols = {"count": hist.counts, "density": hist.density}
    if target is not None:
        cols["target"] = (target.cdf(hist.edges[1:]) - target.cdf(hist.edges[:-1])) / np.diff(hist.edges)
    return write_csv(path_or_buf, hist.centers, cols, xname="center")


def samples_csv(batch: SampleBatch, path_or_buf=None):
    return write_csv(path_or_buf, np.arange(batch.size), {"value": batch.values}, xname="index")
