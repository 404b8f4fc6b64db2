"""Duhamel integrals, the global Picard iteration and the retarded mollifier.

Time integrals  int_0^t e^{(t-s) Lap} f(s) ds  are computed from time samples
of f by product integration: f is interpolated linearly between samples and
each interval is integrated exactly against the heat factor, which needs only
phi_1 and phi_2 of -4 pi^2 |xi|^2 (s_{i+1} - s_i).  This is exact for
piecewise-linear integrands, so no special refinement near s = t is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import Grid3, ScalarField, VectorField
from .solver import phi_functions
from .spectral import Symbols, fft3, ifft3, leray, symbols


def _work(grid: Grid3, periodic: bool):
    wg = grid if periodic else grid.padded()
    return wg, symbols(wg.n, wg.h)


def _lift(grid: Grid3, values: np.ndarray, periodic: bool) -> np.ndarray:
    return values if periodic else grid.embed(values)


def _drop(grid: Grid3, values: np.ndarray, periodic: bool) -> np.ndarray:
    return values if periodic else grid.crop(values)


def _check_series(series, t: float):
    if len(series) < 2:
        raise ValueError("need at least two time samples for a Duhamel integral")
    times = [float(s) for s, _ in series]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("sample times must increase strictly")
    if abs(times[0]) > 1e-12:
        raise ValueError("samples must start at s = 0")
    if times[-1] < t - 1e-12:
        raise ValueError(f"samples end at s={times[-1]} before t={t}")
    if t <= 0:
        raise ValueError("t must be positive")
    return times


def duhamel_sum(S: Symbols, times, integrands, t: float | None = None):
    """int_0^t e^{(t-s) Lap} f(s) ds from spectral samples f(times[i]).

    Returns the value at ``t`` (default: the last time) or, if ``t`` is the
    string "all", the list of values at every sample time.
    """
    out_all = []
    acc = np.zeros_like(integrands[0])
    out_all.append(acc.copy())
    last = len(times) - 1 if t in (None, "all") else int(np.searchsorted(times, t - 1e-12))
    for i in range(min(last, len(times) - 1)):
        s0, s1 = times[i], times[i + 1]
        f0, f1 = integrands[i], integrands[i + 1]
        if t not in (None, "all") and s1 > t:
            # shorten the final interval and interpolate f at t
            f1 = f0 + (f1 - f0) * (t - s0) / (s1 - s0)
            s1 = t
        h = s1 - s0
        e, p1, p2, _ = phi_functions(-S.lam * h)
        acc = e * acc + h * ((p1 - p2) * f0 + p2 * f1)
        out_all.append(acc)
    if t == "all":
        return out_all
    return acc


def _grid_of(series):
    g = series[0][1].grid
    for _, f in series:
        if f.grid != g:
            raise ValueError("samples live on different grids")
    return g


def duhamel_L(theta_series, t: float, periodic: bool = False, dealias: bool = False) -> VectorField:
    """int_0^t e^{(t-s) Lap} P(theta(s) e3) ds."""
    times = _check_series(theta_series, t)
    g = _grid_of(theta_series)
    wg, S = _work(g, periodic)
    pe = S.pe3
    f = []
    for _, th in theta_series:
        th_h = fft3(_lift(g, th.values, periodic))
        f.append(np.stack([pe[0] * th_h, pe[1] * th_h, pe[2] * th_h]))
    out = duhamel_sum(S, times, f, t)
    return VectorField(g, _drop(g, ifft3(out, wg.n), periodic))


def _products_div(S, a, b, mask):
    """Spectral components sum_j d_j (a_j b_i) for stacked arrays a (3,...), b (c,...)."""
    k = S.k
    res = []
    for i in range(b.shape[0]):
        acc = 0
        for j in range(3):
            acc = acc + 1j * k[j] * fft3(a[j] * b[i])
        res.append(acc if mask is None else acc * mask)
    return np.stack(res)


def duhamel_B(u_series, v_series, t: float, periodic: bool = False, dealias: bool = True) -> VectorField:
    """-int_0^t e^{(t-s) Lap} P div(u (x) v) ds, with (div(u (x) v))_i = d_j (u_j v_i)."""
    times = _check_series(u_series, t)
    if [s for s, _ in v_series] != [s for s, _ in u_series]:
        raise ValueError("u and v must be sampled at the same times")
    g = _grid_of(u_series)
    if _grid_of(v_series) != g:
        raise ValueError("u and v live on different grids")
    wg, S = _work(g, periodic)
    mask = S.dealias if dealias else None
    f = [-leray(S, _products_div(S, _lift(g, u.values, periodic), _lift(g, v.values, periodic), mask))
         for (_, u), (_, v) in zip(u_series, v_series)]
    out = duhamel_sum(S, times, f, t)
    return VectorField(g, _drop(g, ifft3(out, wg.n), periodic))


def duhamel_Btilde(theta_series, u_series, t: float, periodic: bool = False,
                   dealias: bool = True) -> ScalarField:
    """-int_0^t e^{(t-s) Lap} div(theta u) ds."""
    times = _check_series(theta_series, t)
    if [s for s, _ in theta_series] != [s for s, _ in u_series]:
        raise ValueError("theta and u must be sampled at the same times")
    g = _grid_of(theta_series)
    if _grid_of(u_series) != g:
        raise ValueError("theta and u live on different grids")
    wg, S = _work(g, periodic)
    mask = S.dealias if dealias else None
    f = [-_products_div(S, _lift(g, u.values, periodic), _lift(g, th.values, periodic)[None], mask)[0]
         for (_, th), (_, u) in zip(theta_series, u_series)]
    out = duhamel_sum(S, times, f, t)
    return ScalarField(g, _drop(g, ifft3(out, wg.n), periodic))


# ---------------------------------------------------------------------------
# Picard iteration

def x_norm(times, u_samples, grid: Grid3) -> float:
    """sup over samples and nodes of (sqrt(t) + |x|) |u|."""
    r = grid.radius
    best = 0.0
    for t, u in zip(times, u_samples):
        mag = np.sqrt(np.sum(u * u, axis=0))
        best = max(best, float(np.max((np.sqrt(t) + r) * mag)))
    return best


def y_norm(times, th_samples, grid: Grid3) -> float:
    """sup_t ||theta||_1 + sup (sqrt(t) + |x|)^3 |theta|."""
    r = grid.radius
    dv = grid.cell_volume
    l1 = max(dv * float(np.sum(np.abs(th))) for th in th_samples)
    pw = max(float(np.max((np.sqrt(t) + r) ** 3 * np.abs(th))) for t, th in zip(times, th_samples))
    return l1 + pw


@dataclass
class PicardResult:
    grid: Grid3
    times: np.ndarray
    iterates: list = field(default_factory=list)   # (u samples, theta samples) per k
    x_distances: list[float] = field(default_factory=list)
    y_distances: list[float] = field(default_factory=list)
    x_norms: list[float] = field(default_factory=list)
    y_norms: list[float] = field(default_factory=list)
    diverged: bool = False

    @property
    def distances(self) -> list[float]:
        """Distance of successive iterates in the product norm X x Y."""
        return [a + b for a, b in zip(self.x_distances, self.y_distances)]

    @property
    def ratios(self) -> list[float]:
        # the velocity update lags the temperature update by one iteration, so
        # only the product distance contracts monotonically
        d = self.distances
        return [b / a if a > 0 else 0.0 for a, b in zip(d, d[1:])]


def picard_solve(u0: VectorField, theta0: ScalarField, T: float, dt: float, k_max: int,
                 dealias: bool = True, keep_iterates: bool = True) -> PicardResult:
    """Iterate u <- U + B(u, u) + L(theta), theta <- Theta + Btilde(u, theta).

    Runs on the zero-padded computational grid at the sample times
    0, dt, ..., T; distances are measured in the X and Y norms on that
    discrete space-time grid.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if u0.grid != theta0.grid:
        raise ValueError("u0 and theta0 live on different grids")
    box = u0.grid
    grid = box.padded()
    S = symbols(grid.n, grid.h)
    mask = S.dealias if dealias else None
    M = int(round(T / dt))
    if M < 1 or abs(M * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a positive whole number of dt")
    times = np.arange(M + 1) * dt
    uh0 = fft3(box.embed(u0.values))
    th0 = fft3(box.embed(theta0.values))
    U = [uh0 * np.exp(-S.lam * t) for t in times]
    TH = [th0 * np.exp(-S.lam * t) for t in times]
    pe = S.pe3

    def physical(spec):
        return [ifft3(a, grid.n) for a in spec]

    u_k = physical(U)
    t_k = physical(TH)
    res = PicardResult(grid, times)
    res.x_norms.append(x_norm(times, u_k, grid))
    res.y_norms.append(y_norm(times, t_k, grid))
    if keep_iterates:
        res.iterates.append((np.stack(u_k), np.stack(t_k)))
    streak = 0
    for _ in range(k_max):
        fu = []
        ft = []
        for u, th in zip(u_k, t_k):
            th_h = fft3(th)
            fu.append(-leray(S, _products_div(S, u, u, mask))
                      + np.stack([pe[0] * th_h, pe[1] * th_h, pe[2] * th_h]))
            ft.append(-_products_div(S, u, th[None], mask)[0])
        Iu = duhamel_sum(S, list(times), fu, "all")
        It = duhamel_sum(S, list(times), ft, "all")
        u_new = physical([a + b for a, b in zip(U, Iu)])
        t_new = physical([a + b for a, b in zip(TH, It)])
        du = x_norm(times, [a - b for a, b in zip(u_new, u_k)], grid)
        dth = y_norm(times, [a - b for a, b in zip(t_new, t_k)], grid)
        res.x_distances.append(du)
        res.y_distances.append(dth)
        u_k, t_k = u_new, t_new
        res.x_norms.append(x_norm(times, u_k, grid))
        res.y_norms.append(y_norm(times, t_k, grid))
        if keep_iterates:
            res.iterates.append((np.stack(u_k), np.stack(t_k)))
        d = res.distances
        if len(d) >= 2 and d[-2] > 0 and d[-1] / d[-2] > 2.0:
            streak += 1
        else:
            streak = 0
        if streak >= 3:
            res.diverged = True
            break
    return res


# ---------------------------------------------------------------------------
# retarded mollifier

def _bump(s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    ss = np.where(inside, s, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - ss * ss)), 0.0)


def _time_rule(delta: float, nodes: int = 8):
    """Quadrature nodes tau in (delta, 2 delta) with weights of the time bump, summing to 1."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    tau = delta * (1.5 + 0.5 * x)
    w = w * _bump(2.0 * tau / delta - 3.0)
    return tau, w / w.sum()


def _space_kernel_hat(grid: Grid3, delta: float) -> np.ndarray:
    """Spectrum of the unit-mass spatial bump of radius delta on a periodic grid."""
    n = grid.n
    m = np.minimum(np.arange(n), n - np.arange(n)) * grid.h
    r = np.sqrt(m[:, None, None] ** 2 + m[None, :, None] ** 2 + m[None, None, :] ** 2)
    a = _bump(r / delta)
    a /= a.sum()
    return fft3(a).real


def _interp_history(hist, s):
    """Linear interpolation of (time, array) samples; zero before the first sample."""
    times = [h[0] for h in hist]
    if s < times[0] - 1e-12:
        return None
    if s > times[-1] + 1e-12:
        raise ValueError(f"history ends at t={times[-1]} but the lag needs t={s}")
    i = int(np.searchsorted(times, s))
    if i < len(times) and abs(times[i] - s) <= 1e-12:
        return hist[i][1]
    if i == 0:
        return hist[0][1]
    (t0, a0), (t1, a1) = hist[i - 1], hist[i]
    return a0 + (a1 - a0) * ((s - t0) / (t1 - t0))


def mollify_arrays(grid: Grid3, hist, delta: float, t: float) -> np.ndarray:
    """Retarded mollification of a (time, array) history on a periodic grid."""
    tau, w = _time_rule(delta)
    acc = None
    for tq, wq in zip(tau, w):
        s = t - tq
        if s < 0:
            continue  # zero extension to negative times
        v = _interp_history(hist, s)
        if v is None:
            continue
        acc = wq * v if acc is None else acc + wq * v
    if acc is None:
        return np.zeros((3,) + grid.shape)
    kh = _space_kernel_hat(grid, delta)
    return ifft3(fft3(acc) * kh, grid.n)


def retarded_mollify(history, delta: float, t: float, periodic: bool = False) -> VectorField:
    """Average of u over the past strip tau in (delta, 2 delta) and a ball of radius delta."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if not history:
        raise ValueError("empty history")
    g = history[0][1].grid
    wg = g if periodic else g.padded()
    hist = [(float(s), _lift(g, v.values, periodic)) for s, v in history]
    out = mollify_arrays(wg, hist, delta, t)
    return VectorField(g, _drop(g, out, periodic))
