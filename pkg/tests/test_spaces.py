import numpy as np
import pytest
from hypothesis import given, strategies as st

from boussinesq import Grid3, ScalarField, VectorField
from boussinesq.initial import gaussian_theta, zero
from boussinesq.spaces import SpaceDescriptor, envelope, scaling_norm, smallness_gate


@pytest.mark.parametrize("name, p", [("X_a", 3.0), ("X_a", 0.5), ("Y_b", 2.9), ("Xt_a", 1.5),
                                     ("Xt_a", 4.0), ("Yt_b", 3.5), ("X", 1.0), ("Z", None)])
def test_space_parameter_ranges(name, p):
    with pytest.raises(ValueError):
        SpaceDescriptor(name, p)


def test_x_norm_of_the_model_profile():
    g = Grid3(16, 4.0)
    times = [0.5, 1.0, 2.0]
    series = [(t, ScalarField(g, 1.0 / (np.sqrt(t) + g.radius))) for t in times]
    assert scaling_norm(series, SpaceDescriptor("X")) == pytest.approx(1.0, rel=1e-12)


def test_y_norm_of_heat_flow():
    g = Grid3(48, 24.0)
    series = [(t, gaussian_theta(g, 1.0, 1.0 + t)) for t in (0.0, 1.0, 3.0)]
    val = scaling_norm(series, SpaceDescriptor("Y"))
    l1 = max(g.cell_volume * np.sum(f.values) for _, f in series)
    assert l1 == pytest.approx(1.0, abs=1e-8)
    assert 1.0 < val < np.inf


def test_weighted_norms_vanish_on_zero():
    g = Grid3(8, 2.0)
    u, _ = zero(g)
    assert scaling_norm([(1.0, u)], SpaceDescriptor("X_a", 2.0)) == 0.0


@given(st.floats(1, 2.99), st.floats(0.01, 50), st.floats(0.01, 50))
def test_envelope_is_min_of_the_endpoints(a, r, t):
    d = SpaceDescriptor("X_a", a)
    e = envelope(d, np.array([r]), t)[0]
    assert e == pytest.approx(min((1 + t) ** -0.5, r**-a * (1 + t) ** ((a - 1) / 2)))
    assert e <= (1 + t) ** -0.5 * (1 + 1e-12)


def test_gate_values():
    g = Grid3(32, 8.0)
    u, th = zero(g)
    assert smallness_gate(u, th, 1e-6).passed
    th = gaussian_theta(g, 0.02, 0.5)
    rep = smallness_gate(u, th, 0.05)
    assert rep.theta_l1 == pytest.approx(0.02, abs=1e-9)
    # sup |x|^3 A (4 pi s)^-3/2 exp(-|x|^2 / 4s) sits at |x| = sqrt(6 s) on the continuum
    s = 0.5
    cont = 0.02 * (6 * s) ** 1.5 * (4 * np.pi * s) ** -1.5 * np.exp(-1.5)
    assert rep.theta_weighted_sup == pytest.approx(cont, rel=0.02)
    assert rep.passed
    assert not smallness_gate(u, th, 0.01).passed
    with pytest.raises(ValueError):
        smallness_gate(u, th, 0.0)
