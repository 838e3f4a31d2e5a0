"""Density fields and the integral functionals tracked along a run."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidExponentError, ShapeError
from .grid import RadialGrid

# Negative round-off below this fraction of the sup norm is clamped to zero.
CLAMP_RTOL = 1e-14
LEAK_SHELL = 0.05


@dataclass(frozen=True, eq=False)
class DensityField:
    """Nonnegative cell averages of a radial density on ``grid``."""

    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ShapeError(f"expected {self.grid.n} cell values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("density contains non-finite values")
        vals = clamp_negative(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "DensityField":
        return cls(grid, np.zeros(grid.n))

    @classmethod
    def from_profile(cls, grid: RadialGrid, profile, mass: float | None = None) -> "DensityField":
        """Sample ``profile(r)`` at cell centres, optionally rescaled to ``mass``."""
        vals = np.asarray(profile(grid.centers), dtype=float)
        if mass is not None:
            total = float(np.dot(vals, grid.volumes))
            if total <= 0:
                raise DomainError("profile has zero mass on this grid")
            vals = vals * (mass / total)
        return cls(grid, vals)

    def __add__(self, other: "DensityField") -> "DensityField":
        _check_same_grid(self, other)
        return DensityField(self.grid, self.values + other.values)

    def scaled(self, factor: float) -> "DensityField":
        if factor < 0:
            raise DomainError("density fields can only be scaled by nonnegative factors")
        return DensityField(self.grid, self.values * factor)


def clamp_negative(vals: np.ndarray) -> np.ndarray:
    """Zero tiny negative noise; raise on genuinely negative entries."""
    lo = vals.min(initial=0.0)
    if lo >= 0:
        return vals
    sup = vals.max(initial=0.0)
    if lo < -CLAMP_RTOL * sup:
        raise DomainError(f"density has negative value {lo:.3e} (sup {sup:.3e})")
    return np.maximum(vals, 0.0)


def _check_same_grid(f: DensityField, g: DensityField) -> None:
    if not f.grid.same_as(g.grid):
        raise ShapeError("fields live on different grids")


def mass(f: DensityField) -> float:
    return f.grid.integrate(f.values)


def lp_norm(f: DensityField, p: float) -> float:
    """(integral of f^p)^(1/p) for p >= 1."""
    if not p >= 1:
        raise InvalidExponentError(f"L^p exponent must be >= 1, got {p}")
    return f.grid.integrate(f.values**p) ** (1.0 / p)


def critical_exponent(d: int) -> float:
    """The exponent 2d/(d+2) of the critical Lebesgue norm."""
    return 2.0 * d / (d + 2)


def critical_norm(f: DensityField) -> float:
    return lp_norm(f, critical_exponent(f.grid.d))


def second_moment(u: DensityField, w: DensityField) -> float:
    """Integral of |x|^2 (u + w)."""
    _check_same_grid(u, w)
    grid = u.grid
    return grid.integrate(grid.centers**2 * (u.values + w.values))


def sup_norm(f: DensityField) -> float:
    return float(f.values.max(initial=0.0))


def l1_distance(f: DensityField, g: DensityField) -> float:
    _check_same_grid(f, g)
    return f.grid.integrate(np.abs(f.values - g.values))


def mass_leak(u: DensityField, w: DensityField, shell: float = LEAK_SHELL) -> float:
    """Fraction of the total mass sitting in the outermost ``shell`` of cells."""
    _check_same_grid(u, w)
    grid = u.grid
    k = max(1, int(round(shell * grid.n)))
    cell_mass = (u.values + w.values) * grid.volumes
    total = cell_mass.sum()
    if total == 0:
        return 0.0
    return float(cell_mass[-k:].sum() / total)


SNAPSHOT_COLUMNS = ("r_center", "u", "w", "v", "z")


def snapshot_csv(u: DensityField, w: DensityField, v, z) -> str:
    """Render a state as CSV text with columns r_center, u, w, v, z."""
    _check_same_grid(u, w)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SNAPSHOT_COLUMNS)
    for row in zip(u.grid.centers, u.values, w.values, v.values, z.values):
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def read_snapshot_csv(text: str) -> dict[str, np.ndarray]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != SNAPSHOT_COLUMNS:
        raise ShapeError(f"unexpected snapshot header {header}")
    rows = np.array([[float(x) for x in row] for row in reader if row], dtype=float)
    rows = rows.reshape(-1, len(SNAPSHOT_COLUMNS))
    return {name: rows[:, i] for i, name in enumerate(SNAPSHOT_COLUMNS)}
