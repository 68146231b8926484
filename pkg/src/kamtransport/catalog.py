"""Named source/target measures usable from configuration files and the CLI.

Names::

    uniform                 rho = 1,                   s = 0
    gaussian(m, sigma)      rho = exp(-(x-m)^2/(2 sigma^2)) (truncated to [a, b])
    cubic_paper             rho = ((x+1)^3 - 1) / 7
    quadratic_paper         rho = 4/3 - (2-x)^2/3 = x (4 - x) / 3
    custom_grid(file.csv)   gridded score from a node CSV (header ``x,value``)

Densities are unnormalized; normalization happens inside
:class:`~kamtransport.ot.Density1D`.  For ``custom_grid`` the density is
recovered as ``exp`` of the trapezoidal integral of the score.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .gaussian_affine import gaussian_score
from .grid import GridFunction, read_csv
from .ot import Density1D
from .score import ScoreModel


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    score: ScoreModel
    rho: object
    params: tuple = ()

    def density(self, a, b) -> Density1D:
        return Density1D(self.rho, a, b, self.name)


def _zeros(x):
    return np.zeros(np.shape(x))


def uniform() -> CatalogEntry:
    return CatalogEntry("uniform", ScoreModel.closed_form(_zeros, _zeros, "uniform"), lambda x: np.ones(np.shape(x)))


def gaussian(m, sigma) -> CatalogEntry:
    if not sigma > 0:
        raise ConfigError("gaussian sigma must be positive")
    name = f"gaussian({m:g},{sigma:g})"

    def rho(x):
        return np.exp(-((np.asarray(x, dtype=float) - m) ** 2) / (2.0 * sigma * sigma))

    return CatalogEntry(name, gaussian_score(m, sigma), rho, (m, sigma))


def cubic_paper() -> CatalogEntry:
    def rho(x):
        return ((np.asarray(x, dtype=float) + 1.0) ** 3 - 1.0) / 7.0

    def s(x):
        y = np.asarray(x, dtype=float) + 1.0
        return 3.0 * y * y / (y**3 - 1.0)

    def ds(x):
        y = np.asarray(x, dtype=float) + 1.0
        u = y**3 - 1.0
        return (6.0 * y * u - 9.0 * y**4) / (u * u)

    return CatalogEntry("cubic_paper", ScoreModel.closed_form(s, ds, "cubic_paper"), rho)


def quadratic_paper() -> CatalogEntry:
    def rho(x):
        x = np.asarray(x, dtype=float)
        return 4.0 / 3.0 - (2.0 - x) ** 2 / 3.0

    def s(x):
        x = np.asarray(x, dtype=float)
        return (4.0 - 2.0 * x) / (x * (4.0 - x))

    def ds(x):
        x = np.asarray(x, dtype=float)
        w = x * (4.0 - x)
        return (-2.0 * w - (4.0 - 2.0 * x) ** 2) / (w * w)

    return CatalogEntry("quadratic_paper", ScoreModel.closed_form(s, ds, "quadratic_paper"), rho)


def custom_grid(path) -> CatalogEntry:
    try:
        cols = read_csv(path)
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read score grid {path!r}: {exc}") from None
    if "value" not in cols:
        raise ConfigError(f"score grid {path!r} needs a 'value' column")
    gf: GridFunction = cols["value"]
    x = gf.grid.nodes
    logrho = np.concatenate([[0.0], np.cumsum(0.5 * (gf.values[1:] + gf.values[:-1]) * gf.grid.h)])
    dens = np.exp(logrho - logrho.max())

    def rho(z):
        return np.interp(z, x, dens)

    name = f"custom_grid({path})"
    return CatalogEntry(name, ScoreModel.gridded(gf, name), rho, (path,))


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_PATTERNS = [
    (re.compile(r"uniform"), lambda m: uniform()),
    (re.compile(rf"gaussian\(\s*({_NUM})\s*,\s*({_NUM})\s*\)"), lambda m: gaussian(float(m[1]), float(m[2]))),
    (re.compile(r"cubic_paper"), lambda m: cubic_paper()),
    (re.compile(r"quadratic_paper"), lambda m: quadratic_paper()),
    (re.compile(r"custom_grid\(\s*([^)]+?)\s*\)"), lambda m: custom_grid(m[1])),
]

NAMES = ("uniform", "gaussian(m,sigma)", "cubic_paper", "quadratic_paper", "custom_grid(file.csv)")


def resolve(name: str) -> CatalogEntry:
    """Parse a catalog name; raises :class:`ConfigError` if it is unknown."""
    text = name.strip()
    for pat, build in _PATTERNS:
        m = pat.fullmatch(text)
        if m:
            return build(m)
    raise ConfigError(f"unknown measure {name!r}; known: {', '.join(NAMES)}")
