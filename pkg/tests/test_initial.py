import numpy as np
import pytest

from boussinesq import Grid3
from boussinesq.initial import dipole_theta, gaussian_theta, generate_initial, solenoidal_u, two_blob_theta
from boussinesq.norms import moments
from boussinesq.spectral import divergence


@pytest.fixture(scope="module")
def grid():
    return Grid3(48, 12.0)


def test_gaussian_mass(grid):
    th = gaussian_theta(grid, 0.3, 1.0)
    assert grid.cell_volume * np.sum(np.abs(th.values)) == pytest.approx(0.3, abs=1e-8)


def test_dipole_moments(grid):
    m0, m1 = moments(dipole_theta(grid, 1.0, 1.0))
    assert abs(m0) < 1e-8
    np.testing.assert_allclose(m1, [0, 0, 1], atol=1e-6)


def test_two_blob_moments(grid):
    m0, m1 = moments(two_blob_theta(grid, 0.5, 0.5, separation=3.0))
    assert abs(m0) < 1e-8
    np.testing.assert_allclose(m1, [0, 0, 1.5], atol=1e-6)


def test_solenoidal_velocity(grid):
    u = solenoidal_u(grid, 1.0, 1.0)
    scale = np.max(np.abs(u.values)) / grid.h
    assert np.max(np.abs(divergence(u).values)) <= 1e-10 * scale


def test_wide_data_is_rejected():
    g = Grid3(16, 4.0)
    with pytest.raises(ValueError, match="box edge"):
        gaussian_theta(g, 1.0, 2.0)


def test_generate_initial_by_name(grid):
    u0, th0 = generate_initial(grid, "dipole", 0.1, 1.0, "solenoidal", 0.01, 1.0)
    assert th0.values.shape == grid.shape and u0.values.shape == (3,) + grid.shape
    u0, th0 = generate_initial(grid)
    assert not np.any(u0.values) and not np.any(th0.values)
    with pytest.raises(ValueError):
        generate_initial(grid, theta="plume")
    with pytest.raises(ValueError):
        generate_initial(grid, u="vortex")
