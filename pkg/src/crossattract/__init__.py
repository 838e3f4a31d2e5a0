"""Radial finite-volume simulator for a two-species cross-attraction system
with nonlocal degenerate diffusion in R^d, d >= 3."""

from .config import RunConfig, load_config, serialize
from .criticality import (
    Criticality,
    CriticalityVerdict,
    classify,
    hls_optimizer,
    hls_sharp_constant,
    make_negative_energy_data,
)
from .dynamics import RunOutcome, StepControl, SystemState, Verdict, cfl_dt, run, step
from .energy import (
    EnergyReport,
    dissipation_rate,
    energy_decomposition,
    energy_report,
    free_energy,
    interaction_H,
    virial_G,
)
from .fields import DensityField, lp_norm, mass, second_moment, sup_norm
from .grid import RadialGrid, build_grid, integrate, sphere_area
from .potential import PotentialField, green_constant, solve_potential

__version__ = "0.1.0"
