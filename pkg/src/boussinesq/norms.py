"""Grid norms, moments and containment fractions."""

from __future__ import annotations

import numpy as np

from .fields import NormDescriptor, ScalarField, VectorField


def _abs_values(f) -> np.ndarray:
    if isinstance(f, VectorField):
        return f.magnitude()
    if isinstance(f, ScalarField):
        return np.abs(f.values)
    raise TypeError(f"expected a field, got {type(f).__name__}")


def lp_norm(a: np.ndarray, p: float, dv: float, weight: np.ndarray | None = None) -> float:
    """(dv * sum (w |a|)^p)^(1/p) for non-negative ``a``; max for p = inf."""
    if np.isinf(p):
        return float(np.max(a if weight is None else a * weight, initial=0.0))
    b = a if weight is None else a * weight
    if p == 2:
        s = np.sum(b * b)
    elif p == 1:
        s = np.sum(b)
    else:
        s = np.sum(b**p)
    return float((dv * s) ** (1.0 / p))


def weak_norm(a: np.ndarray, p: float, dv: float) -> float:
    """max over attained levels s of s * (dv * #{a > s})^(1/p)."""
    if not (1 < p < np.inf):
        raise ValueError("weak norm needs 1 < p < inf")
    v = np.sort(a.ravel())
    levels = np.unique(v[v > 0])
    if levels.size == 0:
        return 0.0
    above = v.size - np.searchsorted(v, levels, side="right")
    return float(np.max(levels * (dv * above) ** (1.0 / p)))


def norm(f, d: NormDescriptor) -> float:
    a = _abs_values(f)
    g = f.grid
    if d.kind == "weak":
        return weak_norm(a, d.p, g.cell_volume)
    w = None
    if d.kind == "weighted" and d.r > 0:
        w = (1.0 + g.radius) ** d.r
    return lp_norm(a, d.p, g.cell_volume, w)


def moments(theta: ScalarField) -> tuple[float, np.ndarray]:
    """Total mass and first moment h^3 sum x theta."""
    g = theta.grid
    dv = g.cell_volume
    v = theta.values
    m0 = dv * float(np.sum(v))
    c = g.coords
    m1 = dv * np.array([
        float(np.sum(c * v.sum(axis=(1, 2)))),
        float(np.sum(c * v.sum(axis=(0, 2)))),
        float(np.sum(c * v.sum(axis=(0, 1)))),
    ])
    return m0, m1


def containment(f, radius: float) -> float:
    """Fraction of the squared L^2 mass inside |x| <= radius (1 for the zero field)."""
    a = _abs_values(f)
    a2 = a * a
    total = float(np.sum(a2))
    if total == 0:
        return 1.0
    return float(np.sum(a2[f.grid.radius <= radius])) / total
