"""Pointwise space-time envelope audit of recorded snapshots."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..spaces import SpaceDescriptor, envelope
from .fits import CASES

DRIFT_FACTOR = 2.0


@dataclass
class EnvelopeAuditReport:
    a: float
    b: float
    case: str
    times: list[float] = field(default_factory=list)
    u_constants: list[float] = field(default_factory=list)
    theta_constants: list[float] = field(default_factory=list)
    t_min: float = 0.0

    def _drift(self, vals) -> float:
        v = np.array([c for t, c in zip(self.times, vals) if t >= self.t_min and c > 0])
        return float(v.max() / v.min()) if v.size else 1.0

    @property
    def C_u(self) -> float:
        return max(self.u_constants, default=0.0)

    @property
    def C_theta(self) -> float:
        return max(self.theta_constants, default=0.0)

    @property
    def u_growth(self) -> bool:
        return self._drift(self.u_constants) > DRIFT_FACTOR

    @property
    def theta_growth(self) -> bool:
        return self._drift(self.theta_constants) > DRIFT_FACTOR

    @property
    def stable(self) -> bool:
        return not (self.u_growth or self.theta_growth)

    def to_dict(self):
        return {"a": self.a, "b": self.b, "case": self.case, "times": self.times,
                "constants": {"C_u": self.C_u, "C_theta": self.C_theta,
                              "C_u_t": self.u_constants, "C_theta_t": self.theta_constants,
                              "u_drift": self._drift(self.u_constants),
                              "theta_drift": self._drift(self.theta_constants)},
                "growth": {"u": self.u_growth, "theta": self.theta_growth}}


def _spaces(a: float, b: float, case: str):
    if case == "nonzero_mean":
        return SpaceDescriptor("X_a", a), SpaceDescriptor("Y_b", b)
    if case == "zero_mean":
        if a == 3:
            raise ValueError("zero-mean velocity exponent a = 3 is excluded")
        return SpaceDescriptor("Xt_a", a), SpaceDescriptor("Yt_b", b)
    raise ValueError(f"case must be one of {CASES}")


def envelope_constants(samples, a: float, b: float, case: str = "nonzero_mean",
                       t_min: float | None = None) -> EnvelopeAuditReport:
    """Smallest C_u(t), C_theta(t) with |u| <= C_u env_a and |theta| <= C_theta env_b.

    ``samples`` is a sequence of (t, u, theta).  Growth is flagged when a
    constant drifts by more than a factor two over times >= t_min, which
    defaults to the last decade of the samples (the start-up transient of data
    with u0 = 0 is not a trend).
    """
    du, dth = _spaces(a, b, case)
    samples = list(samples)
    if t_min is None:
        t_min = max((s[0] for s in samples), default=0.0) / 10.0
    rep = EnvelopeAuditReport(float(a), float(b), case, t_min=float(t_min))
    for t, u, th in samples:
        r = u.grid.radius
        rep.times.append(float(t))
        rep.u_constants.append(float(np.max(u.magnitude() / envelope(du, r, t))))
        rep.theta_constants.append(float(np.max(np.abs(th.values) / envelope(dth, r, t))))
    return rep


def envelope_audit(traj, a: float, b: float, case: str = "nonzero_mean",
                   t_min: float | None = None) -> EnvelopeAuditReport:
    samples = [(0.0, traj.u0, traj.theta0)] + [(s.t, s.u, s.theta) for s in
                                                 (x.cropped(traj.box) for x in traj.snapshots)]
    return envelope_constants(samples, a, b, case, t_min)
