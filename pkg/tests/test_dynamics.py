import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crossattract.dynamics import (
    StepControl,
    SystemState,
    Verdict,
    advance,
    cfl_dt,
    diffusion_coefficient,
    epsilon_convergence,
    run,
    step,
)
from crossattract.errors import ConfigurationError, SchemeError
from crossattract.experiments import gaussian, uniform_ball, virial_defects
from crossattract.fields import DensityField, critical_norm, mass, sup_norm
from crossattract.grid import build_grid
from conftest import random_field


@pytest.fixture(scope="module")
def g():
    return build_grid(3, 6.0, 256)


def pair(g, seed, a1=0.5, a2=0.8, **kw):
    """Two compactly concentrated random densities of unit-order mass."""
    rng = np.random.default_rng(seed)
    u = gaussian(g, rng.uniform(0.5, 1.0), rng.uniform(0.5, 2.0))
    w = random_field(build_grid(g.d, 4 * g.r_max, g.n), rng).values  # shells squeezed inwards
    return SystemState.create(u, DensityField(g, w / (w @ g.volumes)), a1, a2, **kw)


def test_step_control_validation():
    with pytest.raises(ConfigurationError):
        StepControl(t_end=0.0)
    with pytest.raises(ConfigurationError):
        StepControl(t_end=1.0, cfl_safety=1.0)
    with pytest.raises(ConfigurationError):
        StepControl(t_end=1.0, dt_min=0.1, dt_max=0.01)
    with pytest.raises(ConfigurationError):
        StepControl(t_end=1.0, sup_cap=-1.0)


def test_diffusion_coefficient_scaling(g, rng):
    u = random_field(g, rng)
    D = diffusion_coefficient(u, 0.6)
    assert D == pytest.approx(0.6 / 3 * critical_norm(u) ** 0.8, rel=1e-14)
    assert diffusion_coefficient(u.scaled(2.0), 0.6) == pytest.approx(D * 2**0.8, rel=1e-12)


def test_zero_state_is_stationary(g):
    z = DensityField.zeros(g)
    s = SystemState.create(z, z, 1.0, 1.0)
    ctrl = StepControl(t_end=0.05, dt_max=0.01)
    assert cfl_dt(s, ctrl) == ctrl.dt_max
    out = run(s, ctrl)
    assert out.verdict is Verdict.COMPLETED_GLOBAL
    assert out.final_state.t == 0.05
    assert not out.final_state.u.values.any() and not out.final_state.w.values.any()


def test_cfl_scales_inversely_with_amplitude(g):
    """Amplitude lam multiplies every rate in the CFL bound by lam."""
    s = pair(g, 1)
    ctrl = StepControl(t_end=1.0, dt_max=1e3, dt_min=1e-15)
    dt = cfl_dt(s, ctrl)
    for lam in (2.0, 10.0, 0.1):
        big = SystemState.create(s.u.scaled(lam), s.w.scaled(lam), s.alpha1, s.alpha2)
        assert cfl_dt(big, ctrl) == pytest.approx(dt / lam, rel=1e-10)


def test_cfl_diffusive_bound_quarters_on_refinement():
    ctrl = StepControl(t_end=1.0, dt_max=1e3, dt_min=1e-15)
    dts = []
    for n in (256, 512):
        grid = build_grid(3, 6.0, n)
        u = gaussian(grid, 1.0, 1.0)
        dts.append(cfl_dt(SystemState.create(u, u, 1.0, 1.0, drift=False), ctrl))
    assert dts[0] / dts[1] == pytest.approx(4.0, rel=0.02)


def test_cfl_clamped(g):
    s = pair(g, 2)
    assert cfl_dt(s, StepControl(t_end=1.0, dt_max=1e-9, dt_min=1e-12)) == 1e-9
    assert cfl_dt(s, StepControl(t_end=1.0, dt_max=1e-3, dt_min=1e-4)) >= 1e-4


def test_time_rescaling_symmetry(g):
    """lam * (u, w) reaches at time t / lam what (u, w) reaches at time t."""
    s = pair(g, 3)
    lam = 4.0
    a = run(s, StepControl(t_end=0.2, dt_max=1.0), 1000).final_state
    s2 = SystemState.create(s.u.scaled(lam), s.w.scaled(lam), s.alpha1, s.alpha2)
    b = run(s2, StepControl(t_end=0.2 / lam, dt_max=1.0 / lam), 1000).final_state
    np.testing.assert_allclose(b.u.values, lam * a.u.values, rtol=1e-8, atol=1e-12 * lam * sup_norm(a.u))
    np.testing.assert_allclose(b.w.values, lam * a.w.values, rtol=1e-8, atol=1e-12 * lam * sup_norm(a.w))


def test_mass_conserved_per_step(g):
    out = run(pair(g, 4, 1.0, 1.0), StepControl(t_end=0.5), 50)
    assert out.verdict is Verdict.COMPLETED_GLOBAL
    assert out.step_mass_drift < 1e-13
    m0, m1 = out.trajectory[0], out.trajectory[-1]
    assert m1.mass_u == pytest.approx(m0.mass_u, rel=1e-12)
    assert m1.mass_w == pytest.approx(m0.mass_w, rel=1e-12)


def test_pure_diffusion_spreads(g):
    u = gaussian(g, 0.5, 1.0)
    s = SystemState.create(u, u.scaled(2.0), 1.0, 0.5, drift=False)
    ctrl = StepControl(t_end=0.3)
    sups = [sup_norm(s.u)]
    for _ in range(200):
        s = step(s, ctrl)
        sups.append(sup_norm(s.u))
    assert all(b <= a * (1 + 1e-12) for a, b in zip(sups, sups[1:]))
    assert mass(s.u) == pytest.approx(1.0, rel=1e-12)
    assert mass(s.w) == pytest.approx(2.0, rel=1e-12)
    assert sups[-1] < 0.9 * sups[0]


def test_finite_speed_without_regularisation():
    grid = build_grid(3, 4.0, 256)
    ball = uniform_ball(grid, 1.0, 1.0)
    ctrl = StepControl(t_end=0.05)
    supports = []
    for eps in (0.0, 0.5):
        s = SystemState.create(ball, ball, 1.0, 1.0, eps=eps)
        fin = run(s, ctrl, 10**6).final_state
        supports.append(int(np.count_nonzero(fin.u.values > 1e-12)))
    assert supports[0] < grid.n
    assert supports[1] > supports[0]


def test_single_species_virial():
    """With w = 0 there is no drift and dI/dt = 2 a1 ||u||^2 in d = 3."""
    grid = build_grid(3, 10.0, 512)
    u = gaussian(grid, 1.0, 1.0)
    s = SystemState.create(u, DensityField.zeros(grid), 0.7, 1.0)
    out = run(s, StepControl(t_end=0.5), 100)
    assert out.verdict is Verdict.COMPLETED_GLOBAL
    for r in out.trajectory:
        assert r.G == pytest.approx(2 * 0.7 * r.norm_u**2, rel=1e-12)
    assert virial_defects(out.trajectory).max() < 5e-3


def test_exchange_symmetry(g):
    s = pair(g, 5, 0.3, 0.9)
    sw = SystemState.create(s.w, s.u, 0.9, 0.3)
    ctrl = StepControl(t_end=0.3)
    a, b = run(s, ctrl, 10**6), run(sw, ctrl, 10**6)
    assert a.steps == b.steps
    np.testing.assert_allclose(a.final_state.u.values, b.final_state.w.values, rtol=1e-12, atol=0)
    np.testing.assert_allclose(a.final_state.w.values, b.final_state.u.values, rtol=1e-12, atol=0)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    a1=st.floats(1e-3, 1.0),
    a2=st.floats(1e-3, 1.0),
    amp=st.floats(0.1, 50.0),
)
def test_positivity_preserved(seed, a1, a2, amp):
    grid = build_grid(3, 5.0, 64)
    rng = np.random.default_rng(seed)
    s = SystemState.create(random_field(grid, rng).scaled(amp), random_field(grid, rng), a1, a2)
    ctrl = StepControl(t_end=1.0)
    for _ in range(30):
        s = step(s, ctrl)
        assert s.u.values.min() >= 0 and s.w.values.min() >= 0


def test_advance_halves_then_gives_up(g):
    s = pair(g, 6)
    ctrl = StepControl(t_end=1.0, dt_max=1.0, dt_min=1e-15)
    dt0 = 1e6 * cfl_dt(s, ctrl)
    new, used = advance(s, ctrl, dt0)
    assert used < dt0 and used * 2**40 >= dt0
    assert new.u.values.min() >= 0
    with pytest.raises(SchemeError):
        advance(s, StepControl(t_end=1.0, dt_max=100.0, dt_min=10.0), 100.0)


def test_run_verdicts(g):
    s = pair(g, 7, 1.0, 1.0)
    out = run(s, StepControl(t_end=1.0, max_steps=5))
    assert out.verdict is Verdict.STALLED_DT and out.steps == 5
    cap = 1.01 * (sup_norm(s.u) + sup_norm(s.w))
    blow = run(s.with_densities(s.u.values * 0 + s.u.values, s.w.values, 0.0),
               StepControl(t_end=1.0, sup_cap=cap * 0.5))
    assert blow.verdict is Verdict.BLOW_UP_DETECTED and blow.t_star is not None
    edge = np.where(g.centers > 0.97 * g.r_max, 1.0, 0.0)
    leaky = SystemState.create(DensityField(g, edge), DensityField(g, edge), 1.0, 1.0)
    assert run(leaky, StepControl(t_end=1.0)).verdict is Verdict.MASS_LEAK
    with pytest.raises(ConfigurationError):
        run(s, StepControl(t_end=1.0), 0)


def test_run_records_end_time(g):
    out = run(pair(g, 8), StepControl(t_end=0.123), 7)
    assert out.final_state.t == 0.123
    assert out.trajectory[-1].time == 0.123
    times = [r.time for r in out.trajectory]
    assert times == sorted(times) and times[0] == 0.0


def test_epsilon_convergence_validation(g):
    s = pair(g, 9)
    ctrl = StepControl(t_end=0.01)
    with pytest.raises(ConfigurationError):
        epsilon_convergence(s, ctrl, [])
    with pytest.raises(ConfigurationError):
        epsilon_convergence(s, ctrl, [1e-3, 1e-2])
    with pytest.raises(ConfigurationError):
        epsilon_convergence(s, ctrl, [-1.0])


def test_epsilon_gaps_shrink():
    grid = build_grid(3, 8.0, 256)
    u = gaussian(grid, 1.0, 1.0)
    s = SystemState.create(u, u, 1.0, 1.0)
    study = epsilon_convergence(s, StepControl(t_end=0.2), [1e-1, 1e-2, 1e-3])
    assert study.survived == [1e-1, 1e-2, 1e-3]
    assert len(study.gaps) == 2 and all(math.isfinite(x) for x in study.gaps)
    assert study.decreasing
