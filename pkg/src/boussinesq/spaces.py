"""Scale-invariant space-time norms and the smallness gate on initial data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ScalarField, VectorField

SPACES = ("X", "Y", "X_a", "Y_b", "Xt_a", "Yt_b")


@dataclass(frozen=True)
class SpaceDescriptor:
    """One of X, Y, X_a (1<=a<3), Y_b (b>=3), Xt_a (2<=a<4), Yt_b (b>=4).

    The ``t`` variants are the zero-mean spaces with one extra power of time decay.
    """

    name: str
    param: float | None = None

    def __post_init__(self):
        if self.name not in SPACES:
            raise ValueError(f"unknown space {self.name!r}; choose from {SPACES}")
        p = self.param
        if self.name in ("X", "Y"):
            if p is not None:
                raise ValueError(f"{self.name} takes no parameter")
            return
        if p is None:
            raise ValueError(f"{self.name} needs a parameter")
        ok = {"X_a": 1 <= p < 3, "Y_b": p >= 3, "Xt_a": 2 <= p < 4, "Yt_b": p >= 4}[self.name]
        if not ok:
            ranges = {"X_a": "[1, 3)", "Y_b": "[3, inf)", "Xt_a": "[2, 4)", "Yt_b": "[4, inf)"}
            raise ValueError(f"{self.name} parameter {p} outside {ranges[self.name]}")

    @property
    def time_offset(self) -> float:
        """d in env(x, t) = min_{eta in {0, param}} |x|^-eta (1+t)^((eta - d)/2)."""
        return {"X_a": 1.0, "Y_b": 3.0, "Xt_a": 2.0, "Yt_b": 4.0}[self.name]


def envelope(d: SpaceDescriptor, r: np.ndarray, t: float) -> np.ndarray:
    """Pointwise envelope of the weighted spaces; the min over eta sits at an endpoint."""
    off = d.time_offset
    a = d.param
    e0 = (1.0 + t) ** (-off / 2.0)
    ea = np.where(r > 0, r, np.inf) ** (-a) * (1.0 + t) ** ((a - off) / 2.0)
    return np.minimum(e0, ea)


def _abs(f):
    if isinstance(f, VectorField):
        return f.magnitude()
    if isinstance(f, ScalarField):
        return np.abs(f.values)
    return np.abs(np.asarray(f))


def scaling_norm(series, d: SpaceDescriptor) -> float:
    """Evaluate an X/Y-type norm over samples [(t, field), ...] at grid nodes."""
    if not series:
        raise ValueError("empty series")
    grid = series[0][1].grid
    r = grid.radius
    dv = grid.cell_volume
    if d.name == "X":
        return max(float(np.max((np.sqrt(t) + r) * _abs(f))) for t, f in series)
    if d.name == "Y":
        l1 = max(dv * float(np.sum(_abs(f))) for _, f in series)
        return l1 + max(float(np.max((np.sqrt(t) + r) ** 3 * _abs(f))) for t, f in series)
    return max(float(np.max(_abs(f) / envelope(d, r, t))) for t, f in series)


@dataclass
class GateReport:
    theta_l1: float
    theta_weighted_sup: float
    u_weighted_sup: float
    epsilon: float

    @property
    def conditions(self) -> dict[str, bool]:
        return {
            "theta_l1": self.theta_l1 < self.epsilon,
            "theta_weighted_sup": self.theta_weighted_sup < self.epsilon,
            "u_weighted_sup": self.u_weighted_sup < self.epsilon,
        }

    @property
    def passed(self) -> bool:
        return all(self.conditions.values())

    def to_dict(self):
        return {"epsilon": self.epsilon, "theta_l1": self.theta_l1,
                "theta_weighted_sup": self.theta_weighted_sup,
                "u_weighted_sup": self.u_weighted_sup, "conditions": self.conditions,
                "passed": self.passed}


def smallness_gate(u0: VectorField, theta0: ScalarField, epsilon: float = 0.05) -> GateReport:
    """Measure ||theta0||_1, sup |x|^3 |theta0| and sup |x| |u0| against epsilon."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    g = theta0.grid
    r = g.radius
    return GateReport(
        theta_l1=g.cell_volume * float(np.sum(np.abs(theta0.values))),
        theta_weighted_sup=float(np.max(r**3 * np.abs(theta0.values))),
        u_weighted_sup=float(np.max(r * u0.magnitude())),
        epsilon=float(epsilon),
    )
