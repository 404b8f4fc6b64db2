"""Log-log exponent fits and the predicted decay/growth exponents they are checked against."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..fields import NormSeries

MIN_SAMPLES = 5


class FitRefused(ValueError):
    """The requested window is not usable (contaminated or too short)."""


@dataclass
class FitResult:
    slope: float
    half_width: float
    window: tuple[float, float]
    n: int
    intercept: float = 0.0

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ValueError("fit window must have t1 < t2")
        if self.n < MIN_SAMPLES:
            raise ValueError(f"a fit needs at least {MIN_SAMPLES} samples")

    def contains(self, target: float, tol: float) -> bool:
        return abs(self.slope - target) <= tol

    def to_dict(self):
        return {"slope": self.slope, "half_width": self.half_width,
                "window": list(self.window), "n": self.n}


def fit_power_law(t, values, window=None) -> FitResult:
    """OLS slope of log(value) against log(1 + t) inside ``window``."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is None:
        window = (t.max() / 10.0, t.max())
    t1, t2 = window
    sel = (t >= t1 - 1e-12) & (t <= t2 + 1e-12)
    if sel.sum() < MIN_SAMPLES:
        raise FitRefused(f"only {int(sel.sum())} samples in window [{t1:g}, {t2:g}]; "
                         f"need {MIN_SAMPLES}")
    ts, vs = t[sel], v[sel]
    if np.any(vs <= 0):
        raise ValueError("log-log fit needs strictly positive values")
    x = np.log1p(ts)
    y = np.log(vs)
    res = stats.linregress(x, y)
    n = int(sel.sum())
    hw = float(stats.t.ppf(0.975, n - 2) * res.stderr) if n > 2 else np.inf
    return FitResult(float(res.slope), hw, (float(ts[0]), float(ts[-1])), n, float(res.intercept))


def fit_exponent(series: NormSeries, window=None) -> FitResult:
    t, v = series.arrays()
    return fit_power_law(t, v, window)


def clean_window(traj, floor: float | None = None) -> tuple[float, float]:
    """Last decade [t_c / 10, t_c] before temperature containment first drops below ``floor``."""
    floor = traj.containment_floor if floor is None else floor
    t = traj.times
    c = traj.series["containment.theta"]
    bad = np.flatnonzero(c < floor)
    last = len(t) - 1 if bad.size == 0 else bad[0] - 1
    if last < 1:
        raise FitRefused("containment below the floor from the first record on")
    tc = float(t[last])
    return tc / 10.0, tc


def fit_trajectory(traj, name: str, descriptor, window=None, floor: float | None = None) -> FitResult:
    """Fit a recorded norm, refusing windows with containment below the floor."""
    floor = traj.containment_floor if floor is None else floor
    if window is None:
        window = clean_window(traj, floor)
    t = traj.times
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if np.any(traj.series["containment.theta"][sel] < floor):
        raise FitRefused(f"containment drops below {floor} inside window {window}")
    return fit_exponent(traj.norm_series(name, descriptor), window)


@dataclass(frozen=True)
class NormVerdict:
    """A norm the theory declares infinite or does not cover, in place of an exponent."""

    verdict: str
    reason: str

    def to_dict(self):
        return {"verdict": self.verdict, "reason": self.reason}


CASES = ("nonzero_mean", "zero_mean")


def predicted_exponent(p: float, r: float, case: str):
    """Large-time exponent of ||u(t)||_{L^p_r}, or a NormVerdict outside the covered range."""
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}")
    if r < 0:
        raise ValueError("weight exponent must be >= 0")
    if not (1 < p < np.inf):
        raise ValueError("p must satisfy 1 < p < inf")
    s = r + 3.0 / p
    if case == "nonzero_mean":
        if s >= 3:
            return NormVerdict("infinite", f"r + 3/p = {s:g} >= 3: the velocity has an |x|^-3 tail")
        return 0.5 * (s - 1.0)
    if s >= 4:
        return NormVerdict("not-covered", f"r + 3/p = {s:g} >= 4")
    return 0.5 * (s - 2.0)


def predicted_theta_rate(p: float, norm1: float | None = None, normp: float | None = None):
    """Exponent -(3/2)(1 - 1/p) of ||theta(t)||_p and its time offset A from the data norms."""
    if not (1 <= p < np.inf):
        raise ValueError("p must satisfy 1 <= p < inf")
    expo = -1.5 * (1.0 - 1.0 / p)
    if p == 1 or norm1 is None or normp is None:
        return expo, None
    if normp <= 0:
        raise ValueError("||theta0||_p must be positive")
    return expo, (norm1 / normp) ** (2.0 * p / (3.0 * p - 3.0))
