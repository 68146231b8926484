"""Experiment configuration files.

INI syntax (``configparser``), one experiment per file::

    [experiment]
    name = quadratic_paper
    source = uniform
    target = quadratic_paper
    interval = 0, 1
    grid_n = 128
    method = kam                ; kam | fixed_point | gaussian_affine
    output_dir = out/quadratic_paper

    [kam]                       ; KamOptions fields
    max_iters = 20
    boundary = dirichlet

    [fixed_point]               ; FpOptions fields
    omega = 0.5

    [gaussian_affine]
    iters = 12

    [sampling]
    sample_count = 1000000
    seed = 20240101
    bins = 50

Every key is optional except ``source`` and ``target``.  Relative
``output_dir`` and ``custom_grid(...)`` paths are taken relative to the
directory holding the config file.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field, fields, replace

from . import catalog
from .errors import ConfigError, DomainError
from .fixedpoint import FpOptions
from .kam import KamOptions

METHODS = ("kam", "fixed_point", "gaussian_affine")
MIN_GRID_N = 16


@dataclass(frozen=True)
class SamplingOptions:
    sample_count: int = 1_000_000
    seed: int = 20240101
    bins: int = 50


@dataclass(frozen=True)
class ExperimentConfig:
    source: str
    target: str
    a: float = 0.0
    b: float = 1.0
    grid_n: int = 128
    method: str = "kam"
    name: str = ""
    output_dir: str = "out"
    kam: KamOptions = field(default_factory=KamOptions)
    fixed_point: FpOptions = field(default_factory=FpOptions)
    affine_iters: int = 12
    sampling: SamplingOptions = field(default_factory=SamplingOptions)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {', '.join(METHODS)}")
        if int(self.grid_n) < MIN_GRID_N:
            raise ConfigError(f"grid_n must be at least {MIN_GRID_N}, got {self.grid_n}")
        if not float(self.a) < float(self.b):
            raise ConfigError(f"invalid interval [{self.a}, {self.b}]")
        if self.sampling.sample_count < 1 or self.sampling.bins < 1:
            raise ConfigError("sample_count and bins must be positive")
        if self.affine_iters < 1:
            raise ConfigError("gaussian_affine iters must be at least 1")
        # fail early on unknown catalog names
        catalog.resolve(self.source)
        catalog.resolve(self.target)

    @property
    def label(self) -> str:
        return self.name or f"{self.source}_to_{self.target}"


def _to_int(raw):
    try:
        return int(raw)
    except ValueError:
        v = float(raw)  # allows 1e6
        if not v.is_integer():
            raise
        return int(v)


def _coerce(cls, section, items):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, raw in items:
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        default = known[key].default
        try:
            if isinstance(default, bool):
                kwargs[key] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                kwargs[key] = _to_int(raw)
            elif isinstance(default, float):
                kwargs[key] = float(raw)
            else:
                kwargs[key] = raw.strip()
        except ValueError:
            raise ConfigError(f"bad value {raw!r} for {key!r} in [{section}]") from None
    try:
        return cls(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def _relative_measure(name, base):
    m = re.fullmatch(r"\s*custom_grid\(\s*([^)]+?)\s*\)\s*", name)
    if m and not os.path.isabs(m[1]):
        return f"custom_grid({os.path.join(base, m[1])})"
    return name.strip()


def parse_config(text: str, base_dir: str = ".") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if not cp.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    unknown = set(cp.sections()) - {"experiment", "kam", "fixed_point", "gaussian_affine", "sampling"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    ex = dict(cp.items("experiment"))
    for key in ("source", "target"):
        if key not in ex:
            raise ConfigError(f"[experiment] needs {key!r}")
    kw = {
        "source": _relative_measure(ex.pop("source"), base_dir),
        "target": _relative_measure(ex.pop("target"), base_dir),
    }
    if "interval" in ex:
        parts = [p for p in re.split(r"[,\s]+", ex.pop("interval").strip()) if p]
        if len(parts) != 2:
            raise ConfigError("interval must be 'a, b'")
        try:
            kw["a"], kw["b"] = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigError("interval must be two numbers") from None
    for key in ("a", "b"):
        if key in ex:
            kw[key] = float(ex.pop(key))
    if "grid_n" in ex:
        try:
            kw["grid_n"] = _to_int(ex.pop("grid_n"))
        except ValueError:
            raise ConfigError("grid_n must be an integer") from None
    for key in ("method", "name"):
        if key in ex:
            kw[key] = ex.pop(key).strip()
    out = ex.pop("output_dir", ExperimentConfig.output_dir).strip()
    kw["output_dir"] = out if os.path.isabs(out) else os.path.normpath(os.path.join(base_dir, out))
    if ex:
        raise ConfigError(f"unknown key(s) in [experiment]: {', '.join(sorted(ex))}")
    if cp.has_section("kam"):
        kw["kam"] = _coerce(KamOptions, "kam", cp.items("kam"))
    if cp.has_section("fixed_point"):
        kw["fixed_point"] = _coerce(FpOptions, "fixed_point", cp.items("fixed_point"))
    if cp.has_section("gaussian_affine"):
        ga = dict(cp.items("gaussian_affine"))
        if set(ga) - {"iters"}:
            raise ConfigError("[gaussian_affine] only accepts 'iters'")
        if "iters" in ga:
            kw["affine_iters"] = int(ga["iters"])
    if cp.has_section("sampling"):
        kw["sampling"] = _coerce(SamplingOptions, "sampling", cp.items("sampling"))
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    cfg = parse_config(text, os.path.dirname(os.path.abspath(path)))
    if not cfg.name:
        cfg = replace(cfg, name=os.path.splitext(os.path.basename(path))[0])
    return cfg


def to_text(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` back to INI text (round-trips through :func:`parse_config`)."""
    lines = [
        "[experiment]",
        f"name = {cfg.name}",
        f"source = {cfg.source}",
        f"target = {cfg.target}",
        f"interval = {cfg.a!r}, {cfg.b!r}",
        f"grid_n = {cfg.grid_n}",
        f"method = {cfg.method}",
        f"output_dir = {cfg.output_dir}",
    ]
    for section, obj in (("kam", cfg.kam), ("fixed_point", cfg.fixed_point), ("sampling", cfg.sampling)):
        lines.append(f"\n[{section}]")
        lines += [f"{f.name} = {getattr(obj, f.name)!r}".replace("'", "") for f in fields(obj)]
    lines.append(f"\n[gaussian_affine]\niters = {cfg.affine_iters}")
    return "\n".join(lines) + "\n"
