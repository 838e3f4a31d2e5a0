import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from crossattract.errors import DomainError, InvalidExponentError, ShapeError
from crossattract.experiments import uniform_ball
from crossattract.fields import (
    DensityField,
    lp_norm,
    mass,
    mass_leak,
    read_snapshot_csv,
    second_moment,
    snapshot_csv,
    sup_norm,
)
from crossattract.criticality import optimizer_profile
from crossattract.grid import build_grid
from crossattract.potential import solve_potential
from oracles import radial_integral

G16 = build_grid(3, 4.0, 16)
# keep away from values whose powers underflow
nonneg_cells = arrays(np.float64, 16, elements=st.just(0.0) | st.floats(1e-50, 1e3))


def test_zero_field():
    g = build_grid(3, 2.0, 32)
    z = DensityField.zeros(g)
    assert mass(z) == 0 and lp_norm(z, 1.5) == 0 and sup_norm(z) == 0
    assert second_moment(z, z) == 0


def test_unit_ball_mass_and_norm():
    g = build_grid(3, 2.0, 64)
    ball = uniform_ball(g, 1.0, 4 * math.pi / 3)  # indicator: density 1
    assert sup_norm(ball) == pytest.approx(1.0, rel=1e-14)
    assert mass(ball) == pytest.approx(4 * math.pi / 3, rel=1e-13)
    p = 6 / 5
    assert lp_norm(ball, p) == pytest.approx((4 * math.pi / 3) ** (5 / 6), rel=1e-13)
    assert lp_norm(ball, p) == pytest.approx(3.2991, abs=1e-4)


def test_constant_on_ball_norm_homogeneity():
    g = build_grid(4, 3.0, 30)
    R, c, p = 2.0, 0.7, 1.7
    f = uniform_ball(g, R, c * g.sigma * R**4 / 4)
    assert lp_norm(f, p) == pytest.approx(c * (g.sigma * R**4 / 4) ** (1 / p), rel=1e-13)


def test_normalized_gaussian_mass():
    g = build_grid(3, 10.0, 2048)
    f = DensityField.from_profile(g, lambda r: np.exp(-(r**2)), mass=2.5)
    assert mass(f) == pytest.approx(2.5, rel=1e-12)
    # re-normalisation against the continuum integral
    cont = radial_integral(lambda r: np.exp(-r * r), 3)
    assert np.dot(np.exp(-g.centers**2), g.volumes) == pytest.approx(cont, rel=1e-5)


def test_lp_norm_rejects_small_exponent():
    with pytest.raises(InvalidExponentError):
        lp_norm(DensityField.zeros(G16), 0.5)


def test_second_moment_unit_ball_converges():
    errs = []
    for n in (128, 256, 512):
        g = build_grid(3, 2.0, n)
        ball = uniform_ball(g, 1.0, 4 * math.pi / 3)
        errs.append(abs(second_moment(ball, DensityField.zeros(g)) - 4 * math.pi / 5))
    assert errs[-1] < 1e-4
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_second_moment_dilation():
    g = build_grid(3, 12.0, 4096)
    lam = 2.0
    prof = lambda r: np.exp(-(r**2))  # noqa: E731
    f = DensityField.from_profile(g, prof)
    f_lam = DensityField.from_profile(g, lambda r: lam**3 * prof(lam * r))
    z = DensityField.zeros(g)
    assert second_moment(f_lam, z) == pytest.approx(second_moment(f, z) / lam**2, rel=1e-5)


def test_sup_norm_single_cell():
    vals = np.zeros(16)
    vals[5] = 7.5
    assert sup_norm(DensityField(G16, vals)) == 7.5


def test_optimizer_profile_peak():
    g = build_grid(3, 40.0, 4096)
    f = DensityField.from_profile(g, lambda r: optimizer_profile(r, 3))
    assert sup_norm(f) == pytest.approx(1.0, abs=1e-4)
    assert f.values[0] == sup_norm(f)


def test_grid_mismatch():
    other = build_grid(3, 4.0, 32)
    with pytest.raises(ShapeError):
        second_moment(DensityField.zeros(G16), DensityField.zeros(other))
    with pytest.raises(ShapeError):
        DensityField(G16, np.zeros(15))


def test_clamping_rules():
    vals = np.ones(16)
    vals[3] = -1e-16
    f = DensityField(G16, vals)
    assert f.values[3] == 0.0
    vals[3] = -1e-6
    with pytest.raises(DomainError):
        DensityField(G16, vals)


def test_mass_leak_fraction():
    vals = np.zeros(16)
    vals[0] = 1.0
    vals[-1] = 1.0
    f = DensityField(G16, vals)
    z = DensityField.zeros(G16)
    expected = G16.volumes[-1] / (G16.volumes[0] + G16.volumes[-1])
    assert mass_leak(f, z) == pytest.approx(expected)
    assert mass_leak(z, z) == 0.0


def test_snapshot_roundtrip(rng):
    g = build_grid(3, 4.0, 20)
    u = DensityField(g, rng.random(20))
    w = DensityField(g, rng.random(20))
    text = snapshot_csv(u, w, solve_potential(g, w), solve_potential(g, u))
    assert text.splitlines()[0] == "r_center,u,w,v,z"
    back = read_snapshot_csv(text)
    np.testing.assert_array_equal(back["u"], u.values)
    np.testing.assert_array_equal(back["r_center"], g.centers)
    assert len(back["z"]) == 20


@settings(max_examples=60, deadline=None)
@given(nonneg_cells, st.just(0.0) | st.floats(1e-30, 50.0), st.floats(1.0, 4.0))
def test_lp_norm_homogeneous(vals, lam, p):
    f = DensityField(G16, vals)
    assert lp_norm(f.scaled(lam), p) == pytest.approx(lam * lp_norm(f, p), rel=1e-12, abs=1e-300)


@settings(max_examples=60, deadline=None)
@given(nonneg_cells, nonneg_cells, st.floats(1.0, 4.0))
def test_lp_norm_monotone(a, b, p):
    f = DensityField(G16, a)
    g = DensityField(G16, a + b)
    assert lp_norm(f, p) <= lp_norm(g, p) * (1 + 1e-14)


@settings(max_examples=60, deadline=None)
@given(nonneg_cells, nonneg_cells)
def test_second_moment_additive(a, b):
    u, w = DensityField(G16, a), DensityField(G16, b)
    z = DensityField.zeros(G16)
    total = second_moment(u, w)
    assert total == pytest.approx(second_moment(u, z) + second_moment(z, w), rel=1e-12, abs=1e-300)
