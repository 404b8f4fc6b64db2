"""Energy-inequality audit of a recorded trajectory."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

SLACK = 0.01


def _rel(excess: np.ndarray, scale: np.ndarray) -> float:
    scale = np.asarray(scale, dtype=float)
    ok = scale > 0
    if not np.any(ok):
        return 0.0 if np.all(excess <= 0) else np.inf
    return float(np.max(np.where(ok, excess / np.where(ok, scale, 1.0), 0.0)))


@dataclass
class EnergyReport:
    violations: dict[str, float]
    slack: float = SLACK
    rows: list[dict] = field(default_factory=list, repr=False)

    @property
    def worst(self) -> float:
        return max(self.violations.values()) if self.violations else 0.0

    @property
    def passed(self) -> bool:
        return self.worst <= self.slack

    def to_dict(self):
        return {"violations": self.violations, "constants": {"slack": self.slack},
                "worst": self.worst, "passed": self.passed}


def energy_audit(traj) -> EnergyReport:
    """Worst relative violation of the temperature and velocity energy inequalities.

    Checks, at every recorded time,
      |theta|^2 + 2 int |grad theta|^2 <= |theta0|^2,
      |u| <= |u0| + int |theta|,
      |u|^2 + 2 int |grad u|^2 <= |u0|^2 + 2 int |u| |theta|,
    and, when theta0 = 0, that |u| does not increase.  Positive numbers are
    violations relative to the right-hand side.
    """
    s = traj.series
    Et = s["energy.theta"]
    Eu = s["energy.u"]
    if "dissipation.theta" in s:
        Dt = s["dissipation.theta"]
        Du = s["dissipation.u"]
        It = s["integral.theta"]
        Iut = s["integral.u_theta"]
    else:
        # no step budget: integrate the recorded spectral gradient norms instead
        t = traj.times
        Dt = cumulative_trapezoid(2.0 * s["gradient.theta"], t, initial=0.0)
        Du = cumulative_trapezoid(2.0 * s["gradient.u"], t, initial=0.0)
        It = cumulative_trapezoid(np.sqrt(Et), t, initial=0.0)
        Iut = cumulative_trapezoid(2.0 * np.sqrt(Eu * Et), t, initial=0.0)
    nu = np.sqrt(Eu)
    v = {
        "theta_energy": _rel(Et + Dt - Et[0], np.full_like(Et, Et[0])),
        "velocity_norm": _rel(nu - nu[0] - It, nu[0] + It),
        "velocity_energy": _rel(Eu + Du - Eu[0] - Iut, Eu[0] + Iut),
    }
    if Et[0] == 0:
        v["velocity_monotone"] = _rel(np.diff(nu), np.full(nu.size - 1, nu[0]))
    rows = [{"t": float(t), "theta_energy": float(a), "theta_dissipation": float(b),
             "velocity_energy": float(c), "velocity_dissipation": float(d),
             "int_theta": float(e), "int_u_theta": float(f)}
            for t, a, b, c, d, e, f in zip(traj.times, Et, Dt, Eu, Du, It, Iut)]
    return EnergyReport(v, rows=rows)
