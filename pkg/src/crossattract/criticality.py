"""Sharp HLS constant, the sub/supercritical split, and blow-up initial data."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .energy import check_alpha, energy_decomposition, free_energy, interaction_H, virial_G
from .errors import ConfigurationError, InvalidDimensionError
from .fields import DensityField, critical_exponent, critical_norm, second_moment
from .grid import RadialGrid, sphere_area
from .potential import green_constant

CRITICAL_BAND = 1e-9
CUTOFF_SCALES = 20.0


def _check_dim(d):
    if int(d) != d or d < 3:
        raise InvalidDimensionError(f"dimension must be an integer >= 3, got {d}")
    return int(d)


def hls_sharp_constant(d: int) -> float:
    """Lieb's sharp constant for kernel |x-y|^{2-d} and p = q = 2d/(d+2).

    With kernel exponent mu = d - 2:
    pi^{mu/2} Gamma((d-mu)/2) / Gamma(d - mu/2) * (Gamma(d/2)/Gamma(d))^{mu/d - 1}.
    """
    d = _check_dim(d)
    mu = d - 2
    return float(
        math.pi ** (mu / 2)
        * special.gamma((d - mu) / 2)
        / special.gamma(d - mu / 2)
        * (special.gamma(d / 2) / special.gamma(d)) ** (mu / d - 1)
    )


@lru_cache(maxsize=None)
def hls_quadrature_constant(d: int) -> float:
    """HLS quotient of the optimizer (1+|x|^2)^{-(d+2)/2} by adaptive quadrature.

    Uses Newton's theorem (the spherical mean of |x-y|^{2-d} over |y| = s is
    max(|x|, s)^{2-d}) and nested quadrature on [0, inf); independent of the
    gamma-function formula and of the grid solver.
    """
    d = _check_dim(d)
    sigma = sphere_area(d)
    p = critical_exponent(d)

    def h(r):
        return (1.0 + r * r) ** (-(d + 2) / 2)

    def inner(r):
        return integrate.quad(lambda s: h(s) * s ** (d - 1), 0.0, r)[0]

    # ordered pairs s < r counted twice; r^{d-1} * r^{2-d} = r
    H = 2.0 * sigma**2 * integrate.quad(lambda r: h(r) * r * inner(r), 0.0, np.inf, limit=200)[0]
    norm_p = sigma * integrate.quad(lambda r: h(r) ** p * r ** (d - 1), 0.0, np.inf)[0]
    return H / norm_p ** (2.0 / p)


def rayleigh_quotient(u: DensityField, w: DensityField | None = None) -> float:
    """H[u, w] / (||u|| ||w||) in the critical norm (w defaults to u)."""
    w = u if w is None else w
    return interaction_H(u, w) / (critical_norm(u) * critical_norm(w))


class Criticality(str, enum.Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"


@dataclass(frozen=True)
class CriticalityVerdict:
    d: int
    alpha1: float
    alpha2: float
    c_d: float
    C_HLS: float
    ratio: float
    delta: float
    criticality: Criticality

    COLUMNS = ("d", "alpha1", "alpha2", "c_d", "C_HLS", "ratio", "delta", "class")

    def as_row(self) -> list:
        return [self.d, self.alpha1, self.alpha2, self.c_d, self.C_HLS,
                self.ratio, self.delta, self.criticality.value]


def classify(d: int, alpha1: float, alpha2: float) -> CriticalityVerdict:
    """Compare 2 sqrt(a1 a2) / c_d with the sharp constant.

    ``ratio`` = 2 sqrt(a1 a2) / (c_d C_HLS); above 1 the free energy is
    nonnegative for every pair of densities.
    """
    d = _check_dim(d)
    check_alpha(alpha1, "alpha1")
    check_alpha(alpha2, "alpha2")
    cd = green_constant(d)
    C = hls_sharp_constant(d)
    strength = 2.0 * math.sqrt(alpha1 * alpha2) / cd
    ratio = strength / C
    if abs(ratio - 1.0) <= CRITICAL_BAND:
        kind = Criticality.CRITICAL
    elif ratio > 1.0:
        kind = Criticality.SUBCRITICAL
    else:
        kind = Criticality.SUPERCRITICAL
    return CriticalityVerdict(d, float(alpha1), float(alpha2), float(cd), float(C), float(ratio),
                              float(C - strength), kind)


def critical_alpha(d: int) -> float:
    """The common value a1 = a2 at which the ratio equals one."""
    return green_constant(d) * hls_sharp_constant(d) / 2.0


def optimizer_profile(r, d: int, scale: float = 1.0):
    return (1.0 + (np.asarray(r, dtype=float) / scale) ** 2) ** (-(d + 2) / 2)


def hls_optimizer(
    grid: RadialGrid, scale: float, target_mass: float, r_cut: float | None = None
) -> DensityField:
    """Optimizer profile sampled at cell centres, scaled to ``target_mass``.

    With ``r_cut`` the profile is set to zero beyond that radius before the
    mass normalisation.
    """
    if not scale > 0:
        raise ConfigurationError(f"scale must be positive, got {scale}", "scale")
    if not target_mass > 0:
        raise ConfigurationError(f"target_mass must be positive, got {target_mass}", "mass")

    def profile(r):
        vals = optimizer_profile(r, grid.d, scale)
        if r_cut is not None:
            vals = np.where(r <= r_cut, vals, 0.0)
        return vals

    return DensityField.from_profile(grid, profile, target_mass)


@dataclass(frozen=True)
class NegativeEnergyData:
    u0: DensityField
    w0: DensityField
    E0: float
    G0: float
    I0: float
    E_square: float
    t_bound: float  # 2 I(0) / |G(0)|: second moment would vanish by then
    amplification: float
    verdict: CriticalityVerdict


def make_negative_energy_data(
    d: int,
    alpha1: float,
    alpha2: float,
    grid: RadialGrid,
    *,
    scale: float = 1.0,
    mass_u: float = 1.0,
    horizon: float | None = None,
    margin: float = 2.0,
) -> NegativeEnergyData:
    """Balanced, truncated optimizer pair with negative free energy.

    ``w0`` gets the mass making sqrt(a1)||u0|| = sqrt(a2)||w0||, so the
    square term of the energy vanishes. When ``horizon`` is given both masses
    are multiplied up until 2 I(0)/|G(0)| <= horizon / margin; the energy is
    quadratic and the second moment linear in the amplitude, so the bound
    shrinks like 1/amplification.
    """
    verdict = classify(d, alpha1, alpha2)
    if verdict.criticality is not Criticality.SUPERCRITICAL:
        raise ConfigurationError(
            f"({alpha1}, {alpha2}) is {verdict.criticality.value} in d={d}: "
            "the free energy is nonnegative, no negative-energy data exist",
            "alpha1",
        )
    if grid.d != d:
        raise InvalidDimensionError(f"grid dimension {grid.d} != {d}")
    r_cut = CUTOFF_SCALES * scale
    if r_cut > grid.r_max:
        raise ConfigurationError(
            f"r_max={grid.r_max} must exceed the optimizer cutoff {r_cut}", "r_max"
        )
    u0 = hls_optimizer(grid, scale, mass_u, r_cut)
    w0 = u0.scaled(math.sqrt(alpha1 / alpha2))

    E0 = free_energy(u0, w0, alpha1, alpha2)
    if not E0 < 0:
        raise ConfigurationError(
            f"truncated optimizer pair has E(0)={E0:.3e} >= 0 on this grid; refine the grid"
        )
    I0 = second_moment(u0, w0)
    G0 = virial_G(u0, w0, alpha1, alpha2)
    t_bound = 2.0 * I0 / abs(G0)
    amp = 1.0
    if horizon is not None:
        if not horizon > 0:
            raise ConfigurationError("horizon must be positive", "t_end")
        amp = max(1.0, margin * t_bound / horizon)
    if amp != 1.0:
        u0, w0 = u0.scaled(amp), w0.scaled(amp)
        E0 = free_energy(u0, w0, alpha1, alpha2)
        I0 = second_moment(u0, w0)
        G0 = virial_G(u0, w0, alpha1, alpha2)
        t_bound = 2.0 * I0 / abs(G0)
    square, _ = energy_decomposition(u0, w0, alpha1, alpha2)
    return NegativeEnergyData(u0, w0, E0, G0, I0, square, t_bound, amp, verdict)
