"""Reference configurations used by the acceptance suite and ``configs/``."""

from __future__ import annotations

from .config import RunConfig


def subcritical(n: int = 2048, **changes) -> RunConfig:
    """Unit alphas, unit-mass unit-width Gaussians, run to t = 5."""
    cfg = RunConfig(
        d=3, r_max=10.0, n=n, alpha1=1.0, alpha2=1.0, t_end=5.0,
        initial_kind="gaussian", output_stride=200, out_dir="out/subcritical",
    )
    return cfg.with_updates(**changes)


def supercritical(n: int = 2048, **changes) -> RunConfig:
    """alpha = 1e-3 (ratio ~ 0.011) with auto-scaled negative-energy data."""
    cfg = RunConfig(
        d=3, r_max=25.0, n=n, alpha1=1e-3, alpha2=1e-3, t_end=0.015,
        initial_kind="negative_energy_auto", output_stride=10, out_dir="out/supercritical",
    )
    return cfg.with_updates(**changes)


def regularised(n: int = 1024, **changes) -> RunConfig:
    """Subcritical Gaussian data with eps = 1e-2."""
    return subcritical(n, eps=1e-2, out_dir="out/regularised").with_updates(**changes)
