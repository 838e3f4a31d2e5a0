"""Canned experiments, initial data and CSV persistence."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, serialize
from .criticality import (
    CUTOFF_SCALES,
    Criticality,
    NegativeEnergyData,
    classify,
    hls_optimizer,
    make_negative_energy_data,
)
from .dynamics import (
    EpsilonStudy,
    RunOutcome,
    StepControl,
    SystemState,
    Verdict,
    epsilon_convergence,
    run,
)
from .energy import TIMESERIES_COLUMNS, EnergyReport, free_energy, virial_G
from .errors import ConfigurationError
from .fields import DensityField, second_moment, snapshot_csv
from .grid import RadialGrid, build_grid

logger = logging.getLogger(__name__)

BLOWUP_SAFETY = 1.5


# -- initial data -----------------------------------------------------------

def uniform_ball(grid: RadialGrid, radius: float, mass: float) -> DensityField:
    """Exact cell averages of a uniform ball of the given radius and mass."""
    d = grid.d
    lo, hi = grid.edges[:-1] ** d, grid.edges[1:] ** d
    inside = np.clip(radius**d - lo, 0.0, hi - lo)
    frac = inside / (hi - lo)
    ball_volume = grid.sigma * radius**d / d
    return DensityField(grid, frac * (mass / ball_volume))


def gaussian(grid: RadialGrid, scale: float, mass: float) -> DensityField:
    return DensityField.from_profile(grid, lambda r: np.exp(-((r / scale) ** 2)), mass)


@dataclass
class InitialData:
    state: SystemState
    negative_energy: NegativeEnergyData | None = None


def balanced_optimizer_pair(cfg: RunConfig, grid: RadialGrid):
    """Truncated optimizers with sqrt(a1)||u|| = sqrt(a2)||w||, no amplification."""
    u0 = hls_optimizer(grid, cfg.scale_u, cfg.mass_u, CUTOFF_SCALES * cfg.scale_u)
    return u0, u0.scaled(math.sqrt(cfg.alpha1 / cfg.alpha2))


def build_initial(cfg: RunConfig) -> InitialData:
    grid = build_grid(cfg.d, cfg.r_max, cfg.n)
    neg = None
    kind = cfg.initial_kind
    if kind == "gaussian":
        u0 = gaussian(grid, cfg.scale_u, cfg.mass_u)
        w0 = gaussian(grid, cfg.scale_w, cfg.mass_w)
    elif kind == "uniform_ball":
        u0 = uniform_ball(grid, cfg.scale_u, cfg.mass_u)
        w0 = uniform_ball(grid, cfg.scale_w, cfg.mass_w)
    elif kind == "optimizer_truncated":
        u0 = hls_optimizer(grid, cfg.scale_u, cfg.mass_u, CUTOFF_SCALES * cfg.scale_u)
        w0 = hls_optimizer(grid, cfg.scale_w, cfg.mass_w, CUTOFF_SCALES * cfg.scale_w)
    else:
        neg = make_negative_energy_data(
            cfg.d, cfg.alpha1, cfg.alpha2, grid,
            scale=cfg.scale_u, mass_u=cfg.mass_u, horizon=cfg.t_end,
        )
        u0, w0 = neg.u0, neg.w0
    state = SystemState.create(u0, w0, cfg.alpha1, cfg.alpha2, eps=cfg.eps, drift=cfg.drift)
    return InitialData(state, neg)


def step_control(cfg: RunConfig) -> StepControl:
    return StepControl(
        t_end=cfg.t_end,
        dt_max=cfg.dt_max,
        cfl_safety=cfg.cfl_safety,
        dt_min=cfg.dt_min,
        sup_cap=cfg.sup_cap,
        max_steps=cfg.max_steps or None,
    )


# -- CSV --------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def timeseries_csv(trajectory: list[EnergyReport]) -> str:
    rows = ([r.as_row()[c] for c in TIMESERIES_COLUMNS] for r in trajectory)
    return write_csv(TIMESERIES_COLUMNS, rows)


def read_timeseries_csv(text: str) -> list[dict[str, float]]:
    return [{k: float(v) for k, v in row.items()} for row in read_csv(text)]


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


# -- single runs -------------------------------------------------------------

@dataclass
class RunResult:
    config: RunConfig
    initial: InitialData
    outcome: RunOutcome
    files: list[Path] = field(default_factory=list)


def run_config(cfg: RunConfig, *, write: bool = True, tag: str = "run") -> RunResult:
    init = build_initial(cfg)
    outcome = run(init.state, step_control(cfg), cfg.output_stride)
    result = RunResult(cfg, init, outcome)
    if write:
        out = cfg.out_path
        result.files.append(_write(out / f"{tag}_timeseries.csv", timeseries_csv(outcome.trajectory)))
        s = outcome.final_state
        result.files.append(_write(out / f"{tag}_final.csv", snapshot_csv(s.u, s.w, s.v, s.z)))
        result.files.append(_write(out / f"{tag}_summary.csv", summary_csv(result)))
        result.files.append(_write(out / f"{tag}_config.txt", serialize(cfg)))
    return result


SUMMARY_COLUMNS = ("verdict", "t_star", "steps", "t_final", "E0", "G0", "I0", "t_bound", "max_step_mass_drift", "message")


def summary_csv(result: RunResult) -> str:
    o = result.outcome
    first = o.trajectory[0]
    neg = result.initial.negative_energy
    t_bound = neg.t_bound if neg is not None else _virial_bound(first)
    row = (o.verdict.value, o.t_star if o.t_star is not None else -1.0, o.steps,
           o.final_state.t, first.E, first.G, first.I, t_bound, o.step_mass_drift, o.message)
    return write_csv(SUMMARY_COLUMNS, [row])


def _virial_bound(report: EnergyReport) -> float:
    return 2.0 * report.I / abs(report.G) if report.G < 0 else math.inf


# -- diagnostics on trajectories ----------------------------------------------

def virial_defects(trajectory: list[EnergyReport], abs_floor: float = 1e-6) -> np.ndarray:
    """|dI/dt - G_mid| / (|G_mid| + floor) between consecutive reports.

    dI/dt is the forward difference of I, G_mid the mean of G at both ends.
    """
    t = np.array([r.time for r in trajectory])
    I = np.array([r.I for r in trajectory])
    G = np.array([r.G for r in trajectory])
    dt = np.diff(t)
    keep = dt > 0
    rate = np.diff(I)[keep] / dt[keep]
    g_mid = 0.5 * (G[1:] + G[:-1])[keep]
    return np.abs(rate - g_mid) / (np.abs(g_mid) + abs_floor)


def energy_monotone_excess(trajectory: list[EnergyReport], atol: float = 1e-8, rtol: float = 1e-4) -> float:
    """Largest E(t_{k+1}) - E(t_k) - (atol + rtol |E(t_k)|); <= 0 means monotone."""
    E = np.array([r.E for r in trajectory])
    if len(E) < 2:
        return -math.inf
    return float(np.max(E[1:] - E[:-1] - (atol + rtol * np.abs(E[:-1]))))


def energy_ledger(trajectory: list[EnergyReport]) -> np.ndarray:
    """E(t) plus the trapezoid-integrated dissipation up to t, for every report."""
    t = np.array([r.time for r in trajectory])
    E = np.array([r.E for r in trajectory])
    D = np.array([r.dissipation for r in trajectory])
    spent = np.concatenate([[0.0], np.cumsum(0.5 * (D[1:] + D[:-1]) * np.diff(t))])
    return E + spent


# -- experiments --------------------------------------------------------------

@dataclass
class DichotomyReport:
    sub: RunResult
    sup: RunResult
    t_bound: float
    global_ok: bool
    blowup_ok: bool
    second_moment_decreasing: bool

    @property
    def passed(self) -> bool:
        return self.global_ok and self.blowup_ok and self.second_moment_decreasing

    def rows(self):
        out = []
        for label, res in (("subcritical", self.sub), ("supercritical", self.sup)):
            o = res.outcome
            v = classify(res.config.d, res.config.alpha1, res.config.alpha2)
            out.append((label, res.config.alpha1, res.config.alpha2, v.ratio, v.criticality.value,
                        o.verdict.value, o.t_star if o.t_star is not None else -1.0,
                        o.trajectory[0].E, o.trajectory[0].G, o.trajectory[0].I))
        return out


DICHOTOMY_COLUMNS = ("case", "alpha1", "alpha2", "ratio", "class", "verdict", "t_star", "E0", "G0", "I0")


def experiment_dichotomy(cfg_sub: RunConfig, cfg_super: RunConfig, *, write: bool = True) -> DichotomyReport:
    """Global run for subcritical parameters, finite-time blow-up for supercritical ones.

    Refuses inputs that do not meet the hypotheses: the first config must be
    subcritical, the second supercritical with G(0) < 0.
    """
    if classify(cfg_sub.d, cfg_sub.alpha1, cfg_sub.alpha2).criticality is not Criticality.SUBCRITICAL:
        raise ConfigurationError("first configuration must be subcritical", "alpha1")
    if classify(cfg_super.d, cfg_super.alpha1, cfg_super.alpha2).criticality is not Criticality.SUPERCRITICAL:
        raise ConfigurationError("second configuration must be supercritical", "alpha1")
    init_sup = build_initial(cfg_super)
    s0 = init_sup.state
    G0 = virial_G(s0.u, s0.w, s0.alpha1, s0.alpha2)
    if not G0 < 0:
        raise ConfigurationError(f"supercritical data must have G(0) < 0, got {G0:.3e}", "initial_kind")

    sub = run_config(cfg_sub, write=write, tag="dichotomy_sub")
    sup = run_config(cfg_super, write=write, tag="dichotomy_super")
    first = sup.outcome.trajectory[0]
    t_bound = 2.0 * first.I / abs(first.G)
    I = [r.I for r in sup.outcome.trajectory]
    report = DichotomyReport(
        sub, sup, t_bound,
        global_ok=sub.outcome.verdict is Verdict.COMPLETED_GLOBAL,
        blowup_ok=(sup.outcome.verdict is Verdict.BLOW_UP_DETECTED
                   and sup.outcome.t_star is not None
                   and sup.outcome.t_star <= BLOWUP_SAFETY * t_bound),
        second_moment_decreasing=all(b < a for a, b in zip(I, I[1:])),
    )
    if write:
        _write(cfg_super.out_path / "dichotomy.csv", write_csv(DICHOTOMY_COLUMNS, report.rows()))
    return report


@dataclass
class VirialReport:
    n: list[int]
    max_defect: list[float]
    strides: list[int]
    verdicts: list[str]

    @property
    def slope(self) -> float:
        a, b = self.max_defect[0], self.max_defect[-1]
        if a <= 0 or b <= 0:
            return math.nan
        return math.log2(a / b) / math.log2(self.n[-1] / self.n[0])

    @property
    def partial(self) -> bool:
        return any(s < 10 for s in self.strides)


def experiment_virial(cfg: RunConfig, *, refine: int = 2, write: bool = True) -> VirialReport:
    """Second-moment rate check at ``cfg.n`` and ``refine * cfg.n`` cells."""
    report = VirialReport([], [], [], [])
    for n in (cfg.n, refine * cfg.n):
        res = run_config(cfg.with_updates(n=n), write=write, tag=f"virial_n{n}")
        traj = res.outcome.trajectory
        defects = virial_defects(traj)
        report.n.append(n)
        report.max_defect.append(float(defects.max()) if defects.size else 0.0)
        report.strides.append(len(traj) - 1)
        report.verdicts.append(res.outcome.verdict.value)
    if write:
        rows = list(zip(report.n, report.max_defect, report.strides, report.verdicts))
        _write(cfg.out_path / "virial.csv", write_csv(("n", "max_rel_defect", "strides", "verdict"), rows))
    return report


SWEEP_COLUMNS = ("alpha1", "alpha2", "ratio", "class", "verdict", "t_star", "E0", "G0", "I0")


def _sweep_row(args):
    base, a1, a2 = args
    try:
        verdict = classify(base.d, a1, a2)
        cfg = base.with_updates(alpha1=a1, alpha2=a2)
        if cfg.initial_kind == "negative_energy_auto":
            grid = build_grid(cfg.d, cfg.r_max, cfg.n)
            u0, w0 = balanced_optimizer_pair(cfg, grid)
            state = SystemState.create(u0, w0, a1, a2, eps=cfg.eps, drift=cfg.drift)
        else:
            state = build_initial(cfg).state
        E0 = free_energy(state.u, state.w, a1, a2)
        G0 = virial_G(state.u, state.w, a1, a2)
        I0 = second_moment(state.u, state.w)
        out = run(state, step_control(cfg), cfg.output_stride)
        t_star = out.t_star if out.t_star is not None else -1.0
        return (a1, a2, verdict.ratio, verdict.criticality.value, out.verdict.value, t_star, E0, G0, I0)
    except Exception as exc:  # failures are recorded, never abort the sweep
        logger.warning("sweep row (%s, %s) failed: %s", a1, a2, exc)
        return (a1, a2, math.nan, "", f"Error: {exc}", -1.0, math.nan, math.nan, math.nan)


def experiment_sweep(base: RunConfig, alpha_grid, *, workers: int | None = 1, write: bool = True) -> list[tuple]:
    """One run per (a1, a2) pair; rows come back in input order.

    With ``negative_energy_auto`` every row starts from the same balanced,
    truncated optimizer pair (no amplification), so the sign of E(0) tracks
    the classification.
    """
    pairs = [(float(a), float(b)) for a, b in alpha_grid]
    if not pairs:
        raise ConfigurationError("alpha grid must not be empty", "alpha1")
    jobs = [(base, a, b) for a, b in pairs]
    if workers == 1:
        rows = [_sweep_row(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    if write:
        _write(base.out_path / "sweep.csv", write_csv(SWEEP_COLUMNS, rows))
    return rows


def parse_alpha_grid(text: str) -> list[tuple[float, float]]:
    """Lines of ``a1 a2`` (or ``a1, a2``); a single number means a1 = a2."""
    pairs = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        parts = line.split()
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ConfigurationError(f"bad alpha grid line {line!r}", "alpha1") from None
        if len(vals) == 1:
            vals = vals * 2
        if len(vals) != 2:
            raise ConfigurationError(f"bad alpha grid line {line!r}", "alpha1")
        pairs.append((vals[0], vals[1]))
    return pairs


def parse_eps_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigurationError(f"bad eps list {text!r}", "eps") from None


def experiment_epsilon(cfg: RunConfig, eps_list, *, write: bool = True) -> EpsilonStudy:
    init = build_initial(cfg)
    study = epsilon_convergence(init.state, step_control(cfg), eps_list, cfg.output_stride)
    if write:
        rows = [
            (a, b, gap, oa.verdict.value, ob.verdict.value)
            for (a, b), gap, oa, ob in zip(
                zip(study.eps, study.eps[1:]), study.gaps, study.outcomes, study.outcomes[1:]
            )
        ]
        _write(cfg.out_path / "eps_study.csv",
               write_csv(("eps_a", "eps_b", "l1_gap", "verdict_a", "verdict_b"), rows))
    return study
