"""Explicit finite-volume integration of the radial cross-attraction system.

Each species obeys

    d_t u = D_u Delta((u + eps)^m) - div(u grad v),   -Delta v = w,

with m = 2d/(d+2) and the nonlocal scalar D_u = a1 (d-2)/d ||u||_m^{4/(d+2)}
(and symmetrically for w with z = potential of u). Fluxes live on cell
edges, the drift is upwinded and the update telescopes, so mass is conserved
to round-off.
"""

from __future__ import annotations

import enum
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import EnergyReport, check_alpha, energy_report
from .errors import ConfigurationError, DomainError, SchemeError
from .fields import (
    CLAMP_RTOL,
    DensityField,
    critical_exponent,
    critical_norm,
    l1_distance,
    mass_leak,
    sup_norm,
)
from .potential import PotentialField, solve_potential

logger = logging.getLogger(__name__)

MAX_HALVINGS = 40
LEAK_LIMIT = 0.01
GROWTH_WINDOW = 50
_TINY = 1e-300


@dataclass(frozen=True, eq=False)
class SystemState:
    """Densities, their cached potentials and the model parameters.

    ``v`` is the potential generated by ``w`` (it drives ``u``) and ``z`` the
    one generated by ``u``. ``drift=False`` switches off both drifts, leaving
    two decoupled nonlocal porous-medium equations.
    """

    u: DensityField
    w: DensityField
    v: PotentialField
    z: PotentialField
    t: float
    eps: float
    alpha1: float
    alpha2: float
    drift: bool = True

    @property
    def d(self) -> int:
        return self.u.grid.d

    @property
    def grid(self):
        return self.u.grid

    @classmethod
    def create(cls, u, w, alpha1, alpha2, eps=0.0, t=0.0, drift=True) -> "SystemState":
        check_alpha(alpha1, "alpha1")
        check_alpha(alpha2, "alpha2")
        if not eps >= 0:
            raise ConfigurationError(f"eps must be >= 0, got {eps}", "eps")
        if not u.grid.same_as(w.grid):
            raise ConfigurationError("u and w must share a grid")
        grid = u.grid
        return cls(
            u, w, solve_potential(grid, w), solve_potential(grid, u),
            float(t), float(eps), float(alpha1), float(alpha2), bool(drift),
        )

    def with_densities(self, u_vals: np.ndarray, w_vals: np.ndarray, t: float) -> "SystemState":
        grid = self.grid
        u = DensityField(grid, u_vals)
        w = DensityField(grid, w_vals)
        return replace(self, u=u, w=w, v=solve_potential(grid, w), z=solve_potential(grid, u), t=t)


@dataclass(frozen=True)
class StepControl:
    t_end: float
    dt_max: float = 0.01
    cfl_safety: float = 0.4
    dt_min: float = 1e-12
    sup_cap: float = 1e8
    max_steps: int | None = None

    def __post_init__(self):
        if not (0.0 < self.cfl_safety < 1.0):
            raise ConfigurationError("cfl_safety must lie in (0, 1)", "cfl_safety")
        if not (0.0 < self.dt_min < self.dt_max):
            raise ConfigurationError("need 0 < dt_min < dt_max", "dt_min")
        if not self.t_end > 0:
            raise ConfigurationError("t_end must be positive", "t_end")
        if not self.sup_cap > 0:
            raise ConfigurationError("sup_cap must be positive", "sup_cap")


class Verdict(str, enum.Enum):
    COMPLETED_GLOBAL = "CompletedGlobal"
    BLOW_UP_DETECTED = "BlowUpDetected"
    MASS_LEAK = "MassLeak"
    STALLED_DT = "StalledDt"


@dataclass
class RunOutcome:
    verdict: Verdict
    trajectory: list[EnergyReport]
    final_state: SystemState
    t_star: float | None = None
    steps: int = 0
    step_mass_drift: float = 0.0  # worst relative per-step mass change seen
    message: str = ""


def diffusion_coefficient(f: DensityField, alpha: float, d: int | None = None) -> float:
    """Nonlocal prefactor a (d-2)/d ||f||_{2d/(d+2)}^{4/(d+2)}."""
    check_alpha(alpha)
    d = f.grid.d if d is None else d
    return alpha * (d - 2) / d * critical_norm(f) ** (4.0 / (d + 2))


def _phi(vals, eps, m):
    if eps == 0.0:
        return vals**m
    return (vals + eps) ** m - eps**m


def _phi_prime(vals, eps, m):
    return m * (vals + eps) ** (m - 1.0)


def _edge_fluxes(vals, D, edge_velocity, eps, m, grid, drift):
    """Area-weighted outward flux through every edge (zero at both ends)."""
    flux = np.zeros(grid.n + 1)
    flux[1:-1] = -D * np.diff(_phi(vals, eps, m)) / grid.dr
    if drift:
        vel = edge_velocity[1:-1]
        flux[1:-1] += np.where(vel >= 0.0, vals[:-1], vals[1:]) * vel
    return flux * grid.face_areas


def cfl_dt(state: SystemState, ctrl: StepControl) -> float:
    """Largest stable explicit step, clamped to [dt_min, dt_max]."""
    grid = state.grid
    m = critical_exponent(grid.d)
    dr = grid.dr
    rate = 0.0
    for f, a, pot in ((state.u, state.alpha1, state.v), (state.w, state.alpha2, state.z)):
        vals = f.values
        face_max = np.maximum(vals[:-1], vals[1:])
        D = diffusion_coefficient(f, a)
        diff_rate = 2.0 * D * float(_phi_prime(face_max, state.eps, m).max(initial=0.0)) / dr**2
        rate = max(rate, diff_rate)
        if state.drift:
            rate = max(rate, float(np.abs(pot.face_gradient).max()) / dr)
    if rate <= _TINY:
        return ctrl.dt_max
    dt = ctrl.cfl_safety / rate
    return min(max(dt, ctrl.dt_min), ctrl.dt_max)


def advance(state: SystemState, ctrl: StepControl, dt: float) -> tuple[SystemState, float]:
    """One explicit Euler step of size ``dt``, halved until positivity holds.

    Returns the new state and the step actually taken.
    """
    grid = state.grid
    m = critical_exponent(grid.d)
    u, w = state.u.values, state.w.values
    Du = diffusion_coefficient(state.u, state.alpha1)
    Dw = diffusion_coefficient(state.w, state.alpha2)
    div_u = np.diff(_edge_fluxes(u, Du, state.v.face_gradient, state.eps, m, grid, state.drift)) / grid.volumes
    div_w = np.diff(_edge_fluxes(w, Dw, state.z.face_gradient, state.eps, m, grid, state.drift)) / grid.volumes

    for _ in range(MAX_HALVINGS + 1):
        u_new = u - dt * div_u
        w_new = w - dt * div_w
        if _admissible(u_new) and _admissible(w_new):
            try:
                return state.with_densities(u_new, w_new, state.t + dt), dt
            except DomainError:
                pass
        dt *= 0.5
        if dt < ctrl.dt_min:
            break
    raise SchemeError(f"no positive step found at t={state.t:.6g} down to dt={dt:.3e}")


def _admissible(vals):
    lo = vals.min()
    return lo >= 0 or lo >= -CLAMP_RTOL * vals.max()


def step(state: SystemState, ctrl: StepControl) -> SystemState:
    new_state, _ = advance(state, ctrl, cfl_dt(state, ctrl))
    return new_state


def run(initial: SystemState, ctrl: StepControl, output_stride: int = 1) -> RunOutcome:
    """Integrate until t_end, blow-up, mass leak through r_max, or dt stall."""
    if output_stride < 1:
        raise ConfigurationError("output_stride must be >= 1", "output_stride")
    state = initial
    trajectory = [energy_report(state)]
    sup_hist: deque[float] = deque(maxlen=GROWTH_WINDOW + 1)
    sup_hist.append(sup_norm(state.u) + sup_norm(state.w))
    worst_drift = 0.0
    steps = 0
    verdict, t_star, message = Verdict.COMPLETED_GLOBAL, None, ""
    dt = float("nan")

    while state.t < ctrl.t_end:
        if ctrl.max_steps is not None and steps >= ctrl.max_steps:
            verdict, message = Verdict.STALLED_DT, f"step budget {ctrl.max_steps} exhausted"
            break
        dt_cfl = cfl_dt(state, ctrl)
        if dt_cfl <= ctrl.dt_min:
            hist = list(sup_hist)
            growing = len(hist) > GROWTH_WINDOW and all(b > a for a, b in zip(hist, hist[1:]))
            if growing:
                verdict, t_star = Verdict.BLOW_UP_DETECTED, state.t
                message = "time step collapsed while sup norms grew"
            else:
                verdict, message = Verdict.STALLED_DT, "time step collapsed"
            break
        remaining = ctrl.t_end - state.t
        last = dt_cfl >= remaining
        try:
            new_state, dt = advance(state, ctrl, remaining if last else dt_cfl)
        except SchemeError as exc:
            verdict, message = Verdict.STALLED_DT, str(exc)
            break
        if last and dt == remaining:
            new_state = replace(new_state, t=ctrl.t_end)
        steps += 1
        worst_drift = max(worst_drift, _mass_drift(state, new_state))
        state = new_state

        sup = sup_norm(state.u) + sup_norm(state.w)
        sup_hist.append(sup)
        if sup >= ctrl.sup_cap:
            verdict, t_star = Verdict.BLOW_UP_DETECTED, state.t
            message = f"sup norm {sup:.3e} reached cap {ctrl.sup_cap:.3e}"
            break
        if mass_leak(state.u, state.w) > LEAK_LIMIT:
            verdict, message = Verdict.MASS_LEAK, "mass reached the outer shell"
            break
        if steps % output_stride == 0:
            trajectory.append(energy_report(state, dt))

    if trajectory[-1].time != state.t:
        trajectory.append(energy_report(state, dt))
    logger.info("run finished: %s after %d steps at t=%.6g", verdict.value, steps, state.t)
    return RunOutcome(verdict, trajectory, state, t_star, steps, worst_drift, message)


def _mass_drift(old: SystemState, new: SystemState) -> float:
    vol = old.grid.volumes
    out = 0.0
    for a, b in ((old.u.values, new.u.values), (old.w.values, new.w.values)):
        ma = float(np.dot(a, vol))
        if ma > 0:
            out = max(out, abs(float(np.dot(b, vol)) - ma) / ma)
    return out


@dataclass
class EpsilonStudy:
    eps: list[float]
    outcomes: list[RunOutcome]
    gaps: list[float] = field(default_factory=list)  # L1 gap between consecutive eps
    survived: list[float] = field(default_factory=list)

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.gaps, self.gaps[1:]))


def epsilon_convergence(initial: SystemState, ctrl: StepControl, eps_list, output_stride: int = 1000) -> EpsilonStudy:
    """Run the same data for each regularisation level and compare at t_end."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e < 0 for e in eps_list):
        raise ConfigurationError("eps_list must be nonempty and nonnegative", "eps")
    if any(b > a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigurationError("eps_list must be decreasing", "eps")
    outcomes = [run(replace(initial, eps=e), ctrl, output_stride) for e in eps_list]
    study = EpsilonStudy(eps_list, outcomes)
    study.survived = [e for e, o in zip(eps_list, outcomes) if o.verdict is Verdict.COMPLETED_GLOBAL]
    for a, b in zip(outcomes, outcomes[1:]):
        if a.verdict is not Verdict.COMPLETED_GLOBAL or b.verdict is not Verdict.COMPLETED_GLOBAL:
            study.gaps.append(math.nan)
            continue
        sa, sb = a.final_state, b.final_state
        study.gaps.append(l1_distance(sa.u, sb.u) + l1_distance(sa.w, sb.w))
    return study
