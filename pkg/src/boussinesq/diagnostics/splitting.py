"""Low-frequency (Fourier splitting) audit.

On the shrinking ball S(t) = {|xi| <= sqrt(k / (2 (t + 1)))} two bounds are
fitted at each snapshot time:

  |theta_hat(xi,t)| <= e^{-4 pi^2 t |xi|^2} |theta0_hat(xi)| + C |xi| int_0^t |u||theta| ds
  |u_hat(xi,t)|^2   <= A [e^{-8 pi^2 t |xi|^2} (|u0_hat|^2 + |theta0_hat|^2) + t^2 |xi|^2]

The useful output is whether the fitted C and A stay bounded in t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..spectral import spectral_transform


def splitting_radius(k: float, t: float) -> float:
    if not k > 0:
        raise ValueError("splitting exponent k must be positive")
    return float(np.sqrt(k / (2.0 * (t + 1.0))))


@dataclass
class SplitReport:
    k: float
    times: list[float] = field(default_factory=list)
    radii: list[float] = field(default_factory=list)
    theta_constants: list[float] = field(default_factory=list)
    velocity_constants: list[float] = field(default_factory=list)
    modes: list[int] = field(default_factory=list)
    violations: int = 0

    @staticmethod
    def _drift(vals):
        v = np.asarray([x for x in vals if x > 0])
        return float(v.max() / v.min()) if v.size else 1.0

    @property
    def theta_drift(self) -> float:
        return self._drift(self.theta_constants)

    @property
    def velocity_drift(self) -> float:
        return self._drift(self.velocity_constants)

    def stable(self, factor: float = 2.0) -> bool:
        return self.theta_drift <= factor and self.velocity_drift <= factor

    def to_dict(self):
        return {"k": self.k, "times": self.times, "radii": self.radii,
                "constants": {"C": max(self.theta_constants, default=0.0),
                              "A": max(self.velocity_constants, default=0.0),
                              "C_t": self.theta_constants, "A_t": self.velocity_constants,
                              "C_drift": self.theta_drift, "A_drift": self.velocity_drift},
                "modes": self.modes, "violations": self.violations}


def _spectra(u, theta, periodic=False):
    # box fields are zero padded; full computational-grid snapshots are
    # transformed as they are, which keeps the velocity tail outside the box
    su = spectral_transform(u, periodic=periodic)
    st = spectral_transform(theta, periodic=periodic)
    xi = su.symbols.xi2
    return np.sqrt(xi), np.sum(np.abs(su.coeffs) ** 2, axis=0), np.abs(st.coeffs[0])


def fourier_splitting_audit(traj, k: float = 3.5, t_range=(1.0, np.inf)) -> SplitReport:
    if not k > 0:
        raise ValueError("splitting exponent k must be positive")
    rep = SplitReport(float(k))
    xi, u0sq, th0 = _spectra(traj.u0, traj.theta0)
    series_t = traj.times
    iut = traj.series["integral.u_theta"] / 2.0  # recorded as 2 int |u||theta|
    fitted = []
    for snap in traj.snapshots:
        t = snap.t
        if not (t_range[0] - 1e-12 <= t <= t_range[1] + 1e-12) or t <= 0:
            continue
        rad = splitting_radius(k, t)
        S = (xi <= rad) & (xi > 0)
        _, usq, th = _spectra(snap.u, snap.theta, snap.u.grid != traj.box)
        x = xi[S]
        heat = np.exp(-4.0 * np.pi**2 * t * x * x)
        I = float(np.interp(t, series_t, iut))
        excess = th[S] - heat * th0[S]
        # without transport (I = 0) only the pure heat bound remains
        C = max(float(np.max(excess / (x * I))), 0.0) if I > 0 else 0.0
        denom = heat * heat * (u0sq[S] + th0[S] ** 2) + t * t * x * x
        A = float(np.max(usq[S] / denom))
        rep.times.append(float(t))
        rep.radii.append(rad)
        rep.theta_constants.append(C)
        rep.velocity_constants.append(A)
        rep.modes.append(int(S.sum()))
        fitted.append((t, S, x, heat, I, th[S], usq[S], th0[S], u0sq[S]))
    # with the run-wide constants every bound must hold
    Cmax = max(rep.theta_constants, default=0.0)
    Amax = max(rep.velocity_constants, default=0.0)
    for t, S, x, heat, I, th, usq, th0s, u0s in fitted:
        rep.violations += int(np.sum(th > heat * th0s + Cmax * x * I + 1e-12 * max(th.max(), 1e-300)))
        rep.violations += int(np.sum(usq > Amax * (heat * heat * (u0s + th0s**2) + t * t * x * x)
                                     * (1 + 1e-12)))
    return rep
