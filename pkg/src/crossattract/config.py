"""Flat ``key = value`` run configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigurationError

INITIAL_KINDS = ("gaussian", "uniform_ball", "optimizer_truncated", "negative_energy_auto")
REQUIRED = ("d", "r_max", "n", "alpha1", "alpha2", "t_end", "initial_kind")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one simulation.

    ``max_steps = 0`` means no step budget. ``drift = false`` switches off the
    chemotactic drift (pure nonlocal porous-medium flow).
    """

    d: int
    r_max: float
    n: int
    alpha1: float
    alpha2: float
    t_end: float
    initial_kind: str
    eps: float = 0.0
    cfl_safety: float = 0.4
    dt_min: float = 1e-12
    dt_max: float = 0.01
    sup_cap: float = 1e8
    output_stride: int = 100
    mass_u: float = 1.0
    mass_w: float = 1.0
    scale_u: float = 1.0
    scale_w: float = 1.0
    seed: int = 0
    drift: bool = True
    max_steps: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if f.type == "float" and isinstance(val, int) and not isinstance(val, bool):
                object.__setattr__(self, f.name, float(val))
        validate(self)

    def with_updates(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _check(cond: bool, key: str, message: str) -> None:
    if not cond:
        raise ConfigurationError(f"{key}: {message}", key)


def validate(cfg: RunConfig) -> None:
    _check(isinstance(cfg.d, int) and cfg.d >= 3, "d", "must be an integer >= 3")
    _check(isinstance(cfg.n, int) and cfg.n >= 8, "n", "must be an integer >= 8")
    for key in ("r_max", "t_end", "sup_cap", "mass_u", "mass_w", "scale_u", "scale_w"):
        val = getattr(cfg, key)
        _check(math.isfinite(val) and val > 0, key, f"must be positive and finite, got {val}")
    for key in ("alpha1", "alpha2"):
        val = getattr(cfg, key)
        _check(0.0 < val <= 1.0, key, f"must lie in (0, 1], got {val}")
    _check(math.isfinite(cfg.eps) and cfg.eps >= 0, "eps", "must be >= 0")
    _check(0.0 < cfg.cfl_safety < 1.0, "cfl_safety", "must lie in (0, 1)")
    _check(cfg.dt_min > 0, "dt_min", "must be positive")
    _check(cfg.dt_max > cfg.dt_min, "dt_max", "must exceed dt_min")
    _check(isinstance(cfg.output_stride, int) and cfg.output_stride >= 1, "output_stride", "must be an integer >= 1")
    _check(isinstance(cfg.max_steps, int) and cfg.max_steps >= 0, "max_steps", "must be an integer >= 0")
    _check(isinstance(cfg.seed, int), "seed", "must be an integer")
    _check(cfg.initial_kind in INITIAL_KINDS, "initial_kind", f"must be one of {', '.join(INITIAL_KINDS)}")
    _check(bool(cfg.out_dir), "out_dir", "must not be empty")


def _parse_value(key: str, raw: str):
    kind = _TYPES[key]
    try:
        if kind == "int":
            if not raw.lstrip("+-").isdigit():
                raise ValueError(raw)
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {raw!r} as {kind}", key) from None


def load_config(text: str) -> RunConfig:
    """Parse a ``key = value`` document; ``#`` starts a comment."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigurationError(f"{key}: unknown configuration key (line {lineno})", key)
        if key in values:
            raise ConfigurationError(f"{key}: given twice (line {lineno})", key)
        values[key] = _parse_value(key, raw)
    for key in REQUIRED:
        if key not in values:
            raise ConfigurationError(f"{key}: required key missing", key)
    return RunConfig(**values)


def load_config_file(path) -> RunConfig:
    return load_config(Path(path).read_text())


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n" for f in fields(cfg))
