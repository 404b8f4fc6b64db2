"""Far-field profile comparison, spatial tail probes and the moment accumulator.

In the parabolic region |x| >= A sqrt(t) the velocity minus its linear part is
compared against the potential-flow profiles

  nonzero mean:  m0 t d_j d_3 E(x)
  zero mean:     -d_j d_3 d_k E(x) M_k(t),   M(t) = int_0^t m1(s) ds

with E = 1/(4 pi |x|).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, stats

from ..fields import VectorField
from ..kernels import fundamental_second, fundamental_third
from ..spectral import heat_propagate
from .fits import CASES

MIN_NODES = 50
ADMISSIBLE = 0.1   # fraction of the shell maximum of |prediction|
NOISE_FLOOR = 1e-13


@dataclass
class ProfileReport:
    A: float
    t: float
    case: str
    radius: float
    nodes: int
    # per component j: median / IQR of measured_j / predicted_j over admissible nodes
    median: list[float] = field(default_factory=list)
    iqr: list[float] = field(default_factory=list)
    admissible: list[int] = field(default_factory=list)
    excluded: list[int] = field(default_factory=list)
    remainder_ratio: float = 0.0

    @property
    def primary_median(self) -> float:
        """Ratio of the vertical component, the one the criterion is stated for."""
        return self.median[2]

    def to_dict(self):
        return {"A": self.A, "t": self.t, "case": self.case, "radius": self.radius,
                "nodes": self.nodes, "median": self.median, "iqr": self.iqr,
                "admissible": self.admissible, "excluded": self.excluded,
                "remainder_ratio": self.remainder_ratio}


def predicted_profile(x: np.ndarray, t: float, case: str, m0: float = 0.0, mvec=None) -> np.ndarray:
    """Profile values at points x (..., 3), returned as (..., 3)."""
    if case == "nonzero_mean":
        return m0 * t * fundamental_second(x)[..., :, 2]
    if case == "zero_mean":
        m = np.zeros(3) if mvec is None else np.asarray(mvec, dtype=float)
        return -np.einsum("...jk,k->...j", fundamental_third(x)[..., :, 2, :], m)
    raise ValueError(f"case must be one of {CASES}")


def profile_compare_fields(u: VectorField, u0: VectorField, t: float, A: float = 6.0,
                           case: str = "nonzero_mean", m0: float = 0.0, mvec=None) -> ProfileReport:
    """Compare u - e^{t Laplacian} u0 with the predicted profile on the shell |x| = A sqrt(t)."""
    if A < 2:
        raise ValueError("region parameter A must be >= 2")
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}")
    if not t > 0:
        raise ValueError("profile comparison needs t > 0")
    g = u.grid
    rad = A * np.sqrt(t)
    shell = np.abs(g.radius - rad) <= 0.5 * g.h
    n = int(shell.sum())
    if n < MIN_NODES:
        half = g.L
        raise ValueError(
            f"shell |x| = {rad:.3g} holds {n} grid nodes (< {MIN_NODES}); "
            f"try A <= {max(2.0, 0.9 * half / np.sqrt(t)):.3g} or t <= {(0.9 * half / A) ** 2:.3g}")
    lin = heat_propagate(u0, t)
    rem = (u.values - lin.values)[:, shell].T          # (n, 3)
    x = np.stack([c[shell] for c in np.broadcast_arrays(*g.axes())], axis=-1)
    pred = predicted_profile(x, t, case, m0, mvec)
    rep = ProfileReport(float(A), float(t), case, float(rad), n)
    for j in range(3):
        pj = pred[:, j]
        top = np.max(np.abs(pj))
        ok = np.abs(pj) >= ADMISSIBLE * top if top > 0 else np.zeros(n, bool)
        rep.admissible.append(int(ok.sum()))
        rep.excluded.append(int(n - ok.sum()))
        if ok.any():
            ratio = rem[ok, j] / pj[ok]
            q1, med, q3 = np.percentile(ratio, [25, 50, 75])
            rep.median.append(float(med))
            rep.iqr.append(float(q3 - q1))
        else:
            rep.median.append(float("nan"))
            rep.iqr.append(float("nan"))
    r = np.linalg.norm(x, axis=-1)
    power = 3.0 if case == "nonzero_mean" else 4.0
    scale = t * r ** -power
    rep.remainder_ratio = float(np.sqrt(np.mean(np.sum((rem - pred) ** 2, axis=1) / scale**2)))
    return rep


def profile_compare(traj, t: float, A: float = 6.0, case: str = "nonzero_mean") -> ProfileReport:
    snap = traj.box_snapshot(t)
    m0 = float(traj.series["mass"][0])
    M = traj.mean_moment()
    mvec = np.array([np.interp(snap.t, traj.times, M[:, i]) for i in range(3)])
    return profile_compare_fields(snap.u, traj.u0, snap.t, A, case, m0, mvec)


def m_tilde(traj) -> float:
    """min |M(t)| / t over the second half of the run, standing in for the liminf."""
    t = traj.times
    M = np.linalg.norm(traj.mean_moment(), axis=1)
    sel = (t >= 0.5 * t[-1]) & (t > 0)
    if not sel.any():
        raise ValueError("trajectory too short for the moment diagnostic")
    return float(np.min(M[sel] / t[sel]))


# ---------------------------------------------------------------------------
# spatial tails


@dataclass(frozen=True)
class Cone:
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    half_angle: float = 0.3
    r_min: float = 4.0
    r_max: float = 16.0
    n_radii: int = 24
    n_rays: int = 8

    def __post_init__(self):
        if not 0 <= self.half_angle < np.pi / 2:
            raise ValueError("half angle must lie in [0, pi/2)")
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if self.n_radii < 20:
            raise ValueError("a tail probe needs at least 20 sample radii")

    def directions(self) -> np.ndarray:
        a = np.asarray(self.axis, dtype=float)
        a = a / np.linalg.norm(a)
        dirs = [a]
        if self.half_angle > 0:
            helper = np.eye(3)[np.argmin(np.abs(a))]
            e1 = np.cross(a, helper)
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(a, e1)
            for ang in (0.5 * self.half_angle, self.half_angle):
                for phi in np.linspace(0, 2 * np.pi, self.n_rays, endpoint=False):
                    dirs.append(np.cos(ang) * a + np.sin(ang) * (np.cos(phi) * e1 + np.sin(phi) * e2))
        return np.array(dirs)

    def radii(self) -> np.ndarray:
        return np.geomspace(self.r_min, self.r_max, self.n_radii)


def tail_exponent_probe(u, cone: Cone | None = None) -> float:
    """Median over cone rays of the fitted decay exponent alpha in |u| ~ |x|^-alpha."""
    cone = cone or Cone()
    vals = u.magnitude() if isinstance(u, VectorField) else np.abs(u.values)
    g = u.grid
    x0 = g.coords[0]
    radii = cone.radii()
    if radii[-1] * np.max(np.abs(cone.directions())) > -x0 - 2 * g.h:
        raise ValueError(f"cone radii up to {cone.r_max} leave the box of half width {-x0:g}")
    slopes = []
    for d in cone.directions():
        pts = radii[:, None] * d[None, :]
        idx = (pts - x0) / g.h
        a = ndimage.map_coordinates(vals, idx.T, order=3, mode="nearest")
        ok = a > NOISE_FLOOR
        if ok.sum() < 20:
            continue
        slopes.append(-stats.linregress(np.log(radii[ok]), np.log(a[ok])).slope)
    if not slopes:
        raise ValueError("every cone ray drops below the noise floor; nothing to fit")
    return float(np.median(slopes))
