"""Free-space Newtonian potentials of radial densities via Gauss's law."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidDimensionError
from .fields import DensityField
from .grid import RadialGrid, sphere_area


def green_constant(d: int) -> float:
    """c_d = 1/((d-2) sigma_d), so that K(x) = c_d |x|^{2-d} solves -Delta K = delta."""
    if int(d) != d or d < 3:
        raise InvalidDimensionError(f"dimension must be an integer >= 3, got {d}")
    return 1.0 / ((d - 2) * sphere_area(d))


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Potential at cell centres plus its radial derivative on every edge.

    ``source`` keeps the density values the potential was computed from so
    callers can detect stale caches.
    """

    grid: RadialGrid
    values: np.ndarray = field(repr=False)
    face_gradient: np.ndarray = field(repr=False)
    source: np.ndarray = field(repr=False)

    def matches(self, density: DensityField) -> bool:
        return self.grid.same_as(density.grid) and np.array_equal(self.source, density.values)


def solve_potential(grid: RadialGrid, source: DensityField) -> PotentialField:
    """Solve -Delta v = source in R^d for radial, cell-averaged ``source``.

    The edge gradient is exact: -M(r_j) / (sigma_d r_j^{d-1}) with M the
    enclosed mass. Centre values are integrated inward from the monopole
    value mass * c_d / r_max^{d-2}.
    """
    vals = np.asarray(source.values, dtype=float)
    if vals.min(initial=0.0) < 0:
        raise DomainError("potential source must be nonnegative")
    d = grid.d
    enclosed = np.empty(grid.n + 1)
    enclosed[0] = 0.0
    np.cumsum(vals * grid.volumes, out=enclosed[1:])

    grad = np.zeros(grid.n + 1)
    grad[1:] = -enclosed[1:] / grid.face_areas[1:]

    dr = grid.dr
    v_edge = enclosed[-1] * green_constant(d) / grid.r_max ** (d - 2)
    # centre i sits dr/2 inside edge i+1; consecutive centres are dr apart
    steps = grad[1:] * dr
    steps[-1] = grad[-1] * 0.5 * dr
    values = v_edge - np.cumsum(steps[::-1])[::-1]

    for arr in (values, grad):
        arr.setflags(write=False)
    return PotentialField(grid, values, grad, source.values)
