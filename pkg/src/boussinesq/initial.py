"""Initial-data generators.

Widths are heat times: ``width = s`` gives the profile of g_s, a Gaussian of
per-axis variance 2s and unit mass.
"""

from __future__ import annotations

import numpy as np

from .fields import Grid3, ScalarField, VectorField
from .spectral import curl

EDGE_TOL = 1e-12


def _gauss(grid: Grid3, width: float, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    if not width > 0:
        raise ValueError("width must be positive")
    x1, x2, x3 = grid.axes()
    c = np.asarray(center, dtype=float)
    r2 = (x1 - c[0]) ** 2 + (x2 - c[1]) ** 2 + (x3 - c[2]) ** 2
    return (4.0 * np.pi * width) ** -1.5 * np.exp(-r2 / (4.0 * width))


def _check_edge(values: np.ndarray, what: str) -> np.ndarray:
    a = np.abs(values)
    if values.ndim == 4:
        a = np.sqrt(np.sum(values * values, axis=0))
    peak = a.max()
    if peak == 0:
        return values
    edge = max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max(), a[:, :, 0].max(), a[:, :, -1].max())
    if edge > EDGE_TOL * peak:
        raise ValueError(f"{what}: box edge value {edge / peak:.2e} of the peak exceeds {EDGE_TOL:g}; "
                         "shrink the width or enlarge the box")
    return values


def gaussian_theta(grid: Grid3, amplitude: float, width: float = 1.0, center=(0.0, 0.0, 0.0)) -> ScalarField:
    """amplitude * g_width(x - center): total mass ``amplitude``."""
    return ScalarField(grid, _check_edge(amplitude * _gauss(grid, width, center), "gaussian_theta"))


def dipole_theta(grid: Grid3, amplitude: float, width: float = 1.0, center=(0.0, 0.0, 0.0)) -> ScalarField:
    """-amplitude * d3 g_width(x - center): zero mass, first moment amplitude * e3."""
    _, _, x3 = grid.axes()
    g = _gauss(grid, width, center)
    vals = amplitude * (x3 - center[2]) / (2.0 * width) * g
    return ScalarField(grid, _check_edge(vals, "dipole_theta"))


def two_blob_theta(grid: Grid3, amplitude: float, width: float = 1.0, separation: float = 2.0) -> ScalarField:
    """amplitude * (g(x - d e3/2) - g(x + d e3/2)): zero mass, first moment amplitude * d * e3."""
    half = 0.5 * separation
    vals = amplitude * (_gauss(grid, width, (0, 0, half)) - _gauss(grid, width, (0, 0, -half)))
    return ScalarField(grid, _check_edge(vals, "two_blob_theta"))


def solenoidal_u(grid: Grid3, amplitude: float, width: float = 1.0, axis=(0.0, 0.0, 1.0)) -> VectorField:
    """Spectral curl of the vector potential amplitude * g_width(x) * axis."""
    a = np.asarray(axis, dtype=float)
    g = _gauss(grid, width)
    pot = VectorField(grid, amplitude * a[:, None, None, None] * g[None])
    u = curl(pot)
    _check_edge(pot.values, "solenoidal_u")
    return u


def zero(grid: Grid3) -> tuple[VectorField, ScalarField]:
    return VectorField(grid, np.zeros((3,) + grid.shape)), ScalarField(grid, np.zeros(grid.shape))


THETA_GENERATORS = {
    "gaussian": gaussian_theta,
    "dipole": dipole_theta,
    "two_blob": two_blob_theta,
}


def generate_initial(grid: Grid3, theta: str = "zero", theta_amplitude: float = 0.025,
                     theta_width: float = 1.0, u: str = "zero", u_amplitude: float = 0.025,
                     u_width: float = 1.0, separation: float = 2.0) -> tuple[VectorField, ScalarField]:
    """Build (u0, theta0) from generator names."""
    u0, th0 = zero(grid)
    if theta != "zero":
        if theta not in THETA_GENERATORS:
            raise ValueError(f"unknown temperature generator {theta!r}")
        if theta == "two_blob":
            th0 = two_blob_theta(grid, theta_amplitude, theta_width, separation)
        else:
            th0 = THETA_GENERATORS[theta](grid, theta_amplitude, theta_width)
    if u == "solenoidal":
        u0 = solenoidal_u(grid, u_amplitude, u_width)
    elif u != "zero":
        raise ValueError(f"unknown velocity generator {u!r}")
    return u0, th0
