"""Cell-centred radial grids on a ball of R^d."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidDimensionError, ShapeError

MIN_CELLS = 8


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1}, 2 pi^{d/2} / Gamma(d/2)."""
    if int(d) != d or d < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {d}")
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform radial grid on [0, r_max] with exact d-dimensional cell volumes.

    Volumes are ``sigma_d (r_{i+1}^d - r_i^d) / d``; ``face_areas`` holds
    ``sigma_d r_j^{d-1}`` for every edge (zero at the origin).
    """

    d: int
    r_max: float
    n: int
    edges: np.ndarray = field(repr=False)
    centers: np.ndarray = field(repr=False)
    volumes: np.ndarray = field(repr=False)
    face_areas: np.ndarray = field(repr=False)

    @property
    def dr(self) -> float:
        return self.r_max / self.n

    @property
    def sigma(self) -> float:
        return sphere_area(self.d)

    @property
    def total_volume(self) -> float:
        return self.sigma * self.r_max**self.d / self.d

    def integrate(self, f) -> float:
        return integrate(self, f)

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or (
            self.d == other.d and self.n == other.n and self.r_max == other.r_max
        )


def build_grid(d: int, r_max: float, n: int, *, min_cells: int = MIN_CELLS) -> RadialGrid:
    """Build a uniform radial grid with ``n`` cells on ``[0, r_max]``.

    ``min_cells`` exists so unit tests can build degenerate one-cell grids.
    """
    if int(d) != d or d < 3:
        raise InvalidDimensionError(f"dimension must be an integer >= 3, got {d}")
    if not (r_max > 0 and math.isfinite(r_max)):
        raise ConfigurationError(f"r_max must be positive and finite, got {r_max}", "r_max")
    if int(n) != n or n < min_cells:
        raise ConfigurationError(f"n must be an integer >= {min_cells}, got {n}", "n")
    d, n, r_max = int(d), int(n), float(r_max)

    edges = np.arange(n + 1, dtype=float) * (r_max / n)
    edges[-1] = r_max
    centers = 0.5 * (edges[:-1] + edges[1:])
    sigma = sphere_area(d)
    powers = edges**d
    volumes = sigma * np.diff(powers) / d
    face_areas = sigma * edges ** (d - 1)
    for arr in (edges, centers, volumes, face_areas):
        arr.setflags(write=False)
    return RadialGrid(d, r_max, n, edges, centers, volumes, face_areas)


def integrate(grid: RadialGrid, f) -> float:
    """Integral over the ball of a radial cell-wise constant function."""
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n,):
        raise ShapeError(f"expected {grid.n} cell values, got shape {f.shape}")
    return float(np.dot(f, grid.volumes))
