from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from boussinesq import Grid3, ScalarField, SolverOptions, VectorField, simulate
from boussinesq.diagnostics import (Cone, FitRefused, NormVerdict, clean_window, energy_audit,
                                    envelope_audit, envelope_constants, fit_exponent, fit_power_law,
                                    fit_trajectory, fourier_splitting_audit, m_tilde, predicted_exponent,
                                    predicted_profile, predicted_theta_rate, profile_compare_fields,
                                    splitting_radius, tail_exponent_probe)
from boussinesq.fields import NormDescriptor, NormSeries
from boussinesq.initial import gaussian_theta, solenoidal_u, zero
from boussinesq.kernels import fundamental_second
from boussinesq.spectral import heat_propagate

SMALL = Grid3(32, 8.0)


# -- fits -------------------------------------------------------------------

def test_exact_power_law():
    t = np.linspace(0, 100, 101)
    fit = fit_exponent(NormSeries(NormDescriptor(2), list(t), list((1 + t) ** -0.75)), (10, 100))
    assert fit.slope == pytest.approx(-0.75, abs=1e-10)
    assert fit.window == (10.0, 100.0) and fit.n == 91


def test_constant_series_has_zero_slope():
    t = np.arange(20.0)
    assert fit_power_law(t, np.full(20, 3.0), (1, 19)).slope == pytest.approx(0.0, abs=1e-12)


def test_fit_rejections():
    t = np.arange(10.0)
    with pytest.raises(ValueError, match="positive"):
        fit_power_law(t, np.r_[np.ones(9), 0.0], (0, 9))
    with pytest.raises(FitRefused):
        fit_power_law(t, np.ones(10), (0, 3))


def test_heat_flow_norm_decays_at_three_quarters():
    t = np.linspace(10, 100, 46)
    vals = (8 * np.pi * (1 + t)) ** -0.75   # ||g_{1+t}||_2
    assert fit_power_law(t, vals, (10, 100)).slope == pytest.approx(-0.75, abs=1e-10)


@pytest.mark.parametrize("p, r, case, expected", [(2, 0, "nonzero_mean", 0.25), (2, 0, "zero_mean", -0.25),
                                                  (3, 0, "nonzero_mean", 0.0), (2, 0.5, "nonzero_mean", 0.5),
                                                  (4, 0, "nonzero_mean", -0.125)])
def test_predicted_exponents(p, r, case, expected):
    assert predicted_exponent(p, r, case) == pytest.approx(expected)


def test_infinite_norm_verdict():
    v = predicted_exponent(2, 2, "nonzero_mean")
    assert isinstance(v, NormVerdict) and v.verdict == "infinite"
    assert isinstance(predicted_exponent(2, 2.5, "zero_mean"), NormVerdict)
    with pytest.raises(ValueError):
        predicted_exponent(2, 0, "positive_mean")


@given(st.floats(1.01, 20), st.floats(0, 1.4))
def test_zero_mean_decays_half_a_power_faster(p, r):
    a = predicted_exponent(p, r, "nonzero_mean")
    b = predicted_exponent(p, r, "zero_mean")
    if not isinstance(a, NormVerdict):
        assert b == pytest.approx(a - 0.5)
        assert predicted_exponent(p, r + 0.1, "nonzero_mean") == pytest.approx(a + 0.05) or \
            isinstance(predicted_exponent(p, r + 0.1, "nonzero_mean"), NormVerdict)


def test_theta_rates():
    assert predicted_theta_rate(2)[0] == -0.75
    assert predicted_theta_rate(1) == (0.0, None)
    expo, A = predicted_theta_rate(2, 2.0, 1.0)
    assert A == pytest.approx(2 ** (4 / 3))
    assert A == pytest.approx(2.5198, abs=1e-4)


def fake_traj(t, containment, floor=0.99, values=None):
    series = {"containment.theta": np.asarray(containment, float),
              "u.Lp:p=2": np.asarray(values if values is not None else (1 + t) ** 0.25)}
    ns = SimpleNamespace(times=np.asarray(t, float), series=series, containment_floor=floor)
    ns.norm_series = lambda name, d: NormSeries(NormDescriptor.parse(d), list(t), list(series[f"{name}.{d}"]))
    return ns


def test_clean_window_and_refusal():
    t = np.arange(0.0, 101.0)
    c = np.where(t <= 60, 1.0, 0.98)
    tr = fake_traj(t, c)
    assert clean_window(tr) == (6.0, 60.0)
    assert fit_trajectory(tr, "u", "Lp:p=2").slope == pytest.approx(0.25, abs=1e-10)
    with pytest.raises(FitRefused):
        fit_trajectory(tr, "u", "Lp:p=2", window=(50, 100))
    with pytest.raises(FitRefused):
        clean_window(fake_traj(t, np.full(t.size, 0.5)))


# -- Fourier splitting --------------------------------------------------------

def test_splitting_radius():
    assert splitting_radius(3.5, 1.0) == pytest.approx(np.sqrt(7 / 8))
    assert splitting_radius(3.5, 1.0) == pytest.approx(0.93541, abs=1e-5)
    with pytest.raises(ValueError):
        splitting_radius(0.0, 1.0)


def test_splitting_audit_without_velocity_is_pure_heat():
    g = Grid3(48, 24.0)
    u0 = VectorField(g, np.zeros((3,) + g.shape))
    th0 = gaussian_theta(g, 0.05, 2.0)
    tr = simulate(u0, th0, 2.0, 0.5, SolverOptions(buoyancy=False), snapshot_times=[1, 1.5, 2])
    rep = fourier_splitting_audit(tr, 3.5, (1, 2))
    assert rep.times == [1.0, 1.5, 2.0]
    assert rep.theta_constants == [0.0, 0.0, 0.0]
    assert rep.violations == 0
    with pytest.raises(ValueError):
        fourier_splitting_audit(tr, -1.0)


# -- energy -------------------------------------------------------------------

def test_energy_audit_on_zero_data():
    u0, th0 = zero(SMALL)
    rep = energy_audit(simulate(u0, th0, 1.0, 0.5))
    assert rep.worst == 0.0 and rep.passed


def test_velocity_norm_does_not_grow_without_temperature():
    u0 = solenoidal_u(SMALL, 0.05, 0.5)
    th0 = ScalarField(SMALL, np.zeros(SMALL.shape))
    tr = simulate(u0, th0, 2.0, 0.25)
    rep = energy_audit(tr)
    assert "velocity_monotone" in rep.violations and rep.passed
    assert np.all(np.diff(tr.series["u.Lp:p=2"]) <= 0)


# -- profiles -----------------------------------------------------------------

PROFILE_GRID = Grid3(64, 16.0)


def synthetic_velocity(grid, t, m0):
    u0 = solenoidal_u(grid, 0.01, 2.0)
    x = np.stack(np.broadcast_arrays(*grid.axes()), axis=-1)
    prof = m0 * t * fundamental_second(x)[..., :, 2]
    return u0, VectorField(grid, heat_propagate(u0, t).values + np.moveaxis(prof, -1, 0))


@given(st.floats(2.0, 6.0), st.floats(1.0, 4.0))
def test_exact_profile_round_trip(A, t):
    u0, u = synthetic_velocity(PROFILE_GRID, t, 0.025)
    rep = profile_compare_fields(u, u0, t, A, "nonzero_mean", m0=0.025)
    assert rep.nodes >= 50
    np.testing.assert_allclose(rep.median, 1.0, atol=1e-8)
    np.testing.assert_allclose(rep.iqr, 0.0, atol=1e-8)
    assert rep.remainder_ratio <= 1e-8


def test_profile_region_checks():
    u0, u = synthetic_velocity(PROFILE_GRID, 1.0, 0.025)
    with pytest.raises(ValueError, match=">= 2"):
        profile_compare_fields(u, u0, 1.0, 1.5)
    with pytest.raises(ValueError, match="try A <="):
        profile_compare_fields(u, u0, 100.0, 6.0)


def test_zero_mean_profile_sign_pattern():
    # M = e3: the predicted flow runs up the axis and inward along the equator
    m = [0.0, 0.0, 1.0]
    axis = predicted_profile(np.array([0.0, 0.0, 2.0]), 1.0, "zero_mean", mvec=m)
    equator = predicted_profile(np.array([2.0, 0.0, 0.0]), 1.0, "zero_mean", mvec=m)
    assert axis[2] > 0 and abs(axis[0]) < 1e-15
    assert equator[0] < 0 and abs(equator[2]) < 1e-15
    assert axis[2] == pytest.approx(3 / (2 * np.pi) / 2**4)


def test_m_tilde_of_a_frozen_dipole():
    t = np.linspace(0, 10, 41)
    traj = SimpleNamespace(times=t, mean_moment=lambda: np.outer(t, [0.0, 0.0, 0.4]))
    assert m_tilde(traj) == pytest.approx(0.4)


# -- envelopes ----------------------------------------------------------------

def model_velocity(grid, t):
    s = grid.radius / np.sqrt(1 + t)
    mag = (1 + t) ** -0.5 / (1 + s * s)
    return VectorField(grid, np.stack([np.zeros(grid.shape)] * 2 + [mag]))


def test_envelope_constants_on_zero_data():
    u, th = zero(SMALL)
    rep = envelope_constants([(t, u, th) for t in (0.0, 1.0, 2.0)], 2.0, 4.0)
    assert rep.C_u == 0.0 and rep.C_theta == 0.0 and rep.stable


def test_heat_flow_envelope_is_stable():
    g = Grid3(64, 32.0)
    th0 = gaussian_theta(g, 0.02, 1.0)
    u, _ = zero(g)
    samples = [(t, u, heat_propagate(th0, t)) for t in (0.0, 1.0, 5.0, 10.0, 20.0, 40.0)]
    rep = envelope_constants(samples, 2.0, 3.0)
    assert np.isfinite(rep.C_theta) and not rep.theta_growth


def test_case_mismatch_is_flagged():
    g = Grid3(32, 64.0)
    _, th = zero(g)
    samples = [(t, model_velocity(g, t), th) for t in (0.0, 5.0, 10.0, 20.0, 40.0, 80.0)]
    assert not envelope_constants(samples, 2.0, 4.0, "nonzero_mean").u_growth
    assert envelope_constants(samples, 2.0, 4.0, "zero_mean").u_growth
    with pytest.raises(ValueError):
        envelope_constants(samples, 3.0, 4.0, "zero_mean")
    with pytest.raises(ValueError):
        envelope_constants(samples, 3.0, 4.0, "nonzero_mean")


def test_envelope_audit_reads_snapshots():
    u0, th0 = zero(SMALL)
    rep = envelope_audit(simulate(u0, th0, 1.0, 0.5, snapshot_times=[1.0]), 2.0, 4.0)
    assert rep.times == [0.0, 0.0, 1.0]
    assert rep.C_u == 0.0


# -- tails --------------------------------------------------------------------

TAIL_GRID = Grid3(64, 16.0)


def test_tail_of_the_second_derivative_column():
    x = np.stack(np.broadcast_arrays(*TAIL_GRID.axes()), axis=-1)
    col = np.moveaxis(fundamental_second(x)[..., :, 2], -1, 0)
    assert tail_exponent_probe(VectorField(TAIL_GRID, col), Cone(r_min=4, r_max=14)) == pytest.approx(3.0, abs=0.01)


def test_tail_probe_rejections():
    x = np.stack(np.broadcast_arrays(*TAIL_GRID.axes()), axis=-1)
    col = np.moveaxis(fundamental_second(x)[..., :, 2], -1, 0)
    with pytest.raises(ValueError, match="leave the box"):
        tail_exponent_probe(VectorField(TAIL_GRID, col), Cone(r_min=4, r_max=20))
    with pytest.raises(ValueError, match="noise floor"):
        tail_exponent_probe(ScalarField(TAIL_GRID, np.full(TAIL_GRID.shape, 1e-15)), Cone(r_min=4, r_max=14))
    with pytest.raises(ValueError):
        Cone(n_radii=10)
    with pytest.raises(ValueError):
        Cone(r_min=5, r_max=4)
