"""Free energy, interaction energy, dissipation and the second-moment rate.

Everything here is a pure function of the densities (and cached potentials
when a state is passed).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError, ConsistencyError, ShapeError
from .fields import (
    DensityField,
    critical_exponent,
    critical_norm,
    mass,
    mass_leak,
    second_moment,
    sup_norm,
)
from .potential import PotentialField, green_constant, solve_potential


def check_alpha(alpha: float, name: str = "alpha") -> float:
    if not (0.0 < alpha <= 1.0):
        raise ConfigurationError(f"{name} must lie in (0, 1], got {alpha}", name)
    return float(alpha)


def interaction_H(
    u: DensityField, w: DensityField, v: PotentialField | None = None
) -> float:
    """Newtonian cross interaction: double integral of u(x) w(y) |x-y|^{2-d}.

    Evaluated as integral(u * v) / c_d where -Delta v = w; pass ``v`` to
    reuse an already solved potential of ``w``.
    """
    if not u.grid.same_as(w.grid):
        raise ShapeError("fields live on different grids")
    if v is None:
        v = solve_potential(w.grid, w)
    return u.grid.integrate(u.values * v.values) / green_constant(u.grid.d)


def _terms(u, w, alpha1, alpha2, H=None):
    check_alpha(alpha1, "alpha1")
    check_alpha(alpha2, "alpha2")
    nu, nw = critical_norm(u), critical_norm(w)
    if H is None:
        H = interaction_H(u, w)
    return nu, nw, H, green_constant(u.grid.d)


def free_energy(u, w, alpha1, alpha2, H=None) -> float:
    nu, nw, H, cd = _terms(u, w, alpha1, alpha2, H)
    return alpha1 * nu**2 + alpha2 * nw**2 - cd * H


def energy_decomposition(u, w, alpha1, alpha2, H=None) -> tuple[float, float]:
    """Split the free energy into a perfect square and an HLS residual."""
    nu, nw, H, cd = _terms(u, w, alpha1, alpha2, H)
    square = (math.sqrt(alpha1) * nu - math.sqrt(alpha2) * nw) ** 2
    residual = 2.0 * math.sqrt(alpha1 * alpha2) * nu * nw - cd * H
    return square, residual


def virial_G(u, w, alpha1, alpha2, H=None) -> float:
    """Rate of change of the second moment, 2(d-2) times the free energy."""
    return 2.0 * (u.grid.d - 2) * free_energy(u, w, alpha1, alpha2, H)


def virial_G_expanded(u, w, alpha1, alpha2, H=None) -> float:
    """Same rate written with the nonlocal diffusion prefactors.

    C(a, f) * integral(f^{2d/(d+2)}) with C(a, f) = 2(d-2) a ||f||^{4/(d+2)},
    minus 2 c_d (d-2) H.
    """
    nu, nw, H, cd = _terms(u, w, alpha1, alpha2, H)
    d = u.grid.d
    p = critical_exponent(d)
    q = 4.0 / (d + 2)
    cu = 2 * (d - 2) * alpha1 * nu**q
    cw = 2 * (d - 2) * alpha2 * nw**q
    return (
        cu * u.grid.integrate(u.values**p)
        + cw * w.grid.integrate(w.values**p)
        - 2 * cd * (d - 2) * H
    )


def chemical_potential(f: DensityField, alpha: float, potential: PotentialField) -> np.ndarray:
    """Cell values of 2 a ||f||^{4/(d+2)} f^{(d-2)/(d+2)} - potential."""
    d = f.grid.d
    coef = 2.0 * alpha * critical_norm(f) ** (4.0 / (d + 2))
    return coef * f.values ** ((d - 2) / (d + 2)) - potential.values


def _species_dissipation(f: DensityField, alpha: float, potential: PotentialField) -> float:
    grid = f.grid
    d = grid.d
    coef = 2.0 * alpha * critical_norm(f) ** (4.0 / (d + 2))
    psi = coef * f.values ** ((d - 2) / (d + 2))
    slope = np.diff(psi) / grid.dr - potential.face_gradient[1:-1]
    f_face = 0.5 * (f.values[1:] + f.values[:-1])
    weights = grid.face_areas[1:-1] * grid.dr
    return float(np.sum(weights * f_face * slope**2))


def dissipation_rate(state) -> float:
    """Discrete free-energy dissipation of a state with cached potentials.

    ``state`` needs ``u, w, v, z, alpha1, alpha2`` with ``v`` the potential of
    ``w`` and ``z`` that of ``u``. Gradients live on interior edges, density
    at an edge is the mean of its two neighbours.
    """
    if not (state.v.matches(state.w) and state.z.matches(state.u)):
        raise ConsistencyError("cached potentials are stale")
    return _species_dissipation(state.u, state.alpha1, state.v) + _species_dissipation(
        state.w, state.alpha2, state.z
    )


@dataclass(frozen=True)
class EnergyReport:
    time: float
    mass_u: float
    mass_w: float
    norm_u: float
    norm_w: float
    H: float
    E: float
    E_square: float
    E_residual: float
    I: float
    G: float
    dissipation: float
    mass_leak: float
    dt: float = float("nan")
    sup_u: float = 0.0
    sup_w: float = 0.0

    def as_row(self) -> dict[str, float]:
        row = asdict(self)
        row["t"] = row.pop("time")
        return {name: row[name] for name in TIMESERIES_COLUMNS}


TIMESERIES_COLUMNS = (
    "t", "mass_u", "mass_w", "norm_u", "norm_w", "H", "E", "E_square",
    "E_residual", "I", "G", "dissipation", "dt", "sup_u", "sup_w", "mass_leak",
)


def energy_report(state, dt: float = float("nan")) -> EnergyReport:
    """All scalar diagnostics of ``state`` at its current time."""
    u, w = state.u, state.w
    if not (state.v.matches(w) and state.z.matches(u)):
        raise ConsistencyError("cached potentials are stale")
    H = interaction_H(u, w, state.v)
    a1, a2 = state.alpha1, state.alpha2
    E = free_energy(u, w, a1, a2, H)
    sq, res = energy_decomposition(u, w, a1, a2, H)
    return EnergyReport(
        time=state.t,
        mass_u=mass(u),
        mass_w=mass(w),
        norm_u=critical_norm(u),
        norm_w=critical_norm(w),
        H=H,
        E=E,
        E_square=sq,
        E_residual=res,
        I=second_moment(u, w),
        G=2.0 * (u.grid.d - 2) * E,
        dissipation=dissipation_rate(state),
        mass_leak=mass_leak(u, w),
        dt=dt,
        sup_u=sup_norm(u),
        sup_w=sup_norm(w),
    )
