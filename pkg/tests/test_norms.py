import numpy as np
import pytest
from hypothesis import given, strategies as st

from boussinesq import Grid3, NormDescriptor, ScalarField, VectorField
from boussinesq.initial import dipole_theta, gaussian_theta
from boussinesq.norms import containment, lp_norm, moments, norm, weak_norm


@pytest.fixture(scope="module")
def ball():
    g = Grid3(64, 2.0)
    return ScalarField(g, (g.radius <= 1.0).astype(float))


def test_ball_l2(ball):
    assert norm(ball, NormDescriptor(2)) == pytest.approx(np.sqrt(4 * np.pi / 3), abs=3 * ball.grid.h)


def test_ball_weighted_l2(ball):
    assert norm(ball, NormDescriptor(2, 1, "weighted")) == pytest.approx(np.sqrt(62 * np.pi / 15),
                                                                         abs=6 * ball.grid.h)


def test_weak_norm_of_inverse_radius():
    g = Grid3(64, 4.0)
    f = ScalarField(g, 1.0 / g.radius)
    assert norm(f, NormDescriptor(3, kind="weak")) == pytest.approx((4 * np.pi / 3) ** (1 / 3), rel=0.02)


def test_sup_norm_and_weighted_factor():
    g = Grid3(8, 2.0)
    f = ScalarField(g, np.zeros(g.shape))
    f.values[3, 4, 2] = -2.5
    assert norm(f, NormDescriptor(np.inf)) == 2.5
    w = (1 + g.radius[3, 4, 2]) ** 0.5
    assert norm(f, NormDescriptor(2, 0.5, "weighted")) == pytest.approx(2.5 * w * g.h**1.5)


def test_weak_norm_rejects_p_out_of_range():
    with pytest.raises(ValueError):
        weak_norm(np.ones(3), 1.0, 1.0)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=40), st.floats(1.1, 6))
def test_weak_norm_bounded_by_strong_norm(vals, p):
    # Chebyshev: s |{f > s}|^(1/p) <= ||f||_p
    a = np.array(vals)
    assert weak_norm(a, p, 0.5) <= lp_norm(a, p, 0.5) * (1 + 1e-12) + 1e-300


def test_moments_of_gaussian_and_dipole():
    g = Grid3(48, 12.0)
    m0, m1 = moments(gaussian_theta(g, 1.0, 1.0))
    assert m0 == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(m1, 0.0, atol=1e-12)
    m0, m1 = moments(dipole_theta(g, 1.0, 1.0))
    assert abs(m0) <= 1e-8
    np.testing.assert_allclose(m1, [0, 0, 1], atol=1e-6)
    m0, m1 = moments(ScalarField(g, np.zeros(g.shape)))
    assert m0 == 0 and not np.any(m1)


def test_containment():
    g = Grid3(32, 8.0)
    assert containment(ScalarField(g, np.zeros(g.shape)), 1.0) == 1.0
    f = gaussian_theta(g, 1.0, 0.5)
    assert containment(f, 4.0) > 0.999999
    v = VectorField(g, np.stack([f.values] * 3))
    assert containment(v, 0.5) == pytest.approx(containment(f, 0.5))
