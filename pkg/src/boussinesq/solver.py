"""Time stepping for the viscous Boussinesq system (nu = kappa = 1, buoyancy theta e3).

The state lives on a periodic computational grid which, in ``simulate``, is the
zero-padded double of the physical box.  Each step is second-order exponential
time differencing in which the linear operator

    L (u, theta) = (Lap u + P(theta e3), Lap theta)

is integrated exactly.  Buoyancy is nilpotent (it maps theta into u and nothing
back), so e^{hL} and the phi-functions of hL have closed forms in terms of the
scalar phi-functions of -4 pi^2 |xi|^2 h.  Only the transport terms
-P div(u (x) u) and -div(u theta) are treated by the Runge-Kutta stages.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc

from .fields import Grid3, NormDescriptor, NormSeries, ScalarField, VectorField
from .norms import lp_norm, weak_norm
from .spectral import Symbols, fft3, ifft3, leray, symbols

log = logging.getLogger(__name__)


def phi_functions(z: np.ndarray):
    """exp(z), phi_1(z), phi_2(z), phi_3(z) with phi_k(z) = int_0^1 e^{(1-s)z} s^(k-1)/(k-1)! ds."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1.0
    zd = np.where(small, 1.0, z)
    e = np.exp(z)
    d1 = np.expm1(zd) / zd
    d2 = (d1 - 1.0) / zd
    d3 = (d2 - 0.5) / zd
    # Taylor branch: phi_k(z) = sum_m z^m / (m + k)!
    zs = np.where(small, z, 0.0)
    s1 = np.zeros_like(z)
    s2 = np.zeros_like(z)
    s3 = np.zeros_like(z)
    zp = np.ones_like(z)
    fact = 1.0  # m!
    for m in range(18):
        s1 += zp / (fact * (m + 1))
        s2 += zp / (fact * (m + 1) * (m + 2))
        s3 += zp / (fact * (m + 1) * (m + 2) * (m + 3))
        zp = zp * zs
        fact *= m + 1
    return (e, np.where(small, s1, d1), np.where(small, s2, d2), np.where(small, s3, d3))


class CFLError(ValueError):
    def __init__(self, dt, umax, h, limit):
        self.suggested_dt = limit * h / umax
        super().__init__(
            f"dt={dt:g} violates the CFL guard (dt*max|u|/h = {dt * umax / h:.3g} > {limit}); "
            f"try dt <= {self.suggested_dt:.4g}")


@dataclass
class SolverOptions:
    dealias: bool = True
    nonlinear: bool = True
    buoyancy: bool = True
    mollify_delta: float | None = None
    cfl: float = 0.5
    energy_budget: bool = True


@dataclass
class State:
    t: float
    u: VectorField
    theta: ScalarField

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("time must be non-negative")
        if self.u.grid != self.theta.grid:
            raise ValueError("u and theta live on different grids")

    @property
    def grid(self) -> Grid3:
        return self.u.grid

    def cropped(self, box: Grid3) -> "State":
        """This state restricted to ``box`` (a no-op for box states)."""
        if self.grid == box:
            return self
        return State(self.t, VectorField(box, box.crop(self.u.values)),
                     ScalarField(box, box.crop(self.theta.values)))


def embed_state(state: State) -> State:
    """Zero-extend a box state to the padded computational grid."""
    g = state.grid
    big = g.padded()
    return State(state.t, VectorField(big, g.embed(state.u.values)),
                 ScalarField(big, g.embed(state.theta.values)))


class Stepper:
    """ETD2RK on raw rfft coefficients of a periodic grid."""

    def __init__(self, grid: Grid3, dt: float, options: SolverOptions | None = None):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.dt = float(dt)
        self.opt = options or SolverOptions()
        if self.opt.mollify_delta is not None and self.opt.mollify_delta < dt:
            raise ValueError("mollified mode needs delta >= dt so the lag reaches only past steps")
        self.S: Symbols = symbols(grid.n, grid.h)
        self.E, self.p1, self.p2, self.p3 = phi_functions(-self.S.lam * dt)
        self.mask = self.S.dealias if self.opt.dealias else None
        self.N = grid.n

    # -- transforms -------------------------------------------------------
    def to_spectral(self, u: np.ndarray, th: np.ndarray):
        return fft3(u), fft3(th)

    def to_physical(self, uh, th):
        return ifft3(uh, self.N), ifft3(th, self.N)

    def buoy(self, th_hat):
        """P(theta e3) in spectral space, or zeros in Navier-Stokes mode."""
        if not self.opt.buoyancy:
            return np.zeros((3,) + th_hat.shape, dtype=complex)
        pe = self.S.pe3
        return np.stack([pe[0] * th_hat, pe[1] * th_hat, pe[2] * th_hat])

    def nonlinear(self, u, th, adv=None):
        """Spectral (-P div(adv (x) u), -div(adv theta)) with the 2/3 mask."""
        S = self.S
        k = S.k
        if adv is None:
            adv = u
            pair = {}
            for i in range(3):
                for j in range(i, 3):
                    pair[i, j] = pair[j, i] = fft3(u[i] * u[j])
            prod = [[pair[i, j] for j in range(3)] for i in range(3)]
        else:
            prod = [[fft3(adv[j] * u[i]) for j in range(3)] for i in range(3)]
        Nu = np.stack([-1j * (k[0] * prod[i][0] + k[1] * prod[i][1] + k[2] * prod[i][2])
                       for i in range(3)])
        Nu = leray(S, Nu)
        at = [fft3(adv[j] * th) for j in range(3)]
        Nt = -1j * (k[0] * at[0] + k[1] * at[1] + k[2] * at[2])
        if self.mask is not None:
            Nu *= self.mask
            Nt *= self.mask
        return Nu, Nt

    def check_cfl(self, u):
        umax = float(np.sqrt(np.max(u[0] ** 2 + u[1] ** 2 + u[2] ** 2)))
        if umax > 0 and self.dt * umax / self.grid.h > self.opt.cfl:
            raise CFLError(self.dt, umax, self.grid.h, self.opt.cfl)

    def advance(self, uh, th, u, thp, adv0=None, adv1=None):
        """One step from spectral (uh, th) with matching physical (u, thp).

        ``adv0``/``adv1`` are the advecting velocities at the start and end of
        the step (mollified mode); by default the velocity itself is used.
        Returns new spectral state, new physical state and the nonlinear
        terms needed by the energy budget.
        """
        dt = self.dt
        E, p1, p2, p3 = self.E, self.p1, self.p2, self.p3
        Pth = self.buoy(th)
        if not self.opt.nonlinear:
            uh1 = E * (uh + dt * Pth)
            th1 = E * th
            u1, t1 = self.to_physical(uh1, th1)
            return uh1, th1, u1, t1, None
        self.check_cfl(u)
        Nu0, Nt0 = self.nonlinear(u, thp, adv0)
        PN0 = self.buoy(Nt0)
        ua = E * (uh + dt * Pth) + dt * (p1 * Nu0 + dt * (p1 - p2) * PN0)
        ta = E * th + dt * p1 * Nt0
        ua_p, ta_p = self.to_physical(ua, ta)
        if adv1 is not None:
            Nua, Nta = self.nonlinear(ua_p, ta_p, adv1)
        else:
            Nua, Nta = self.nonlinear(ua_p, ta_p)
        dNu = Nua - Nu0
        dNt = Nta - Nt0
        uh1 = ua + dt * (p2 * dNu + dt * (p2 - 2.0 * p3) * self.buoy(dNt))
        uh1 = leray(self.S, uh1)
        th1 = ta + dt * p2 * dNt
        u1, t1 = self.to_physical(uh1, th1)
        if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(t1))):
            raise FloatingPointError("non-finite values produced by the time step")
        return uh1, th1, u1, t1, (Nu0, Nt0, dNu, dNt)

    # -- energy bookkeeping ----------------------------------------------
    def _budget_tables(self):
        """Step-independent factors; everything is flattened and pre-weighted
        by the half-spectrum multiplicity and the Parseval constant."""
        if getattr(self, "_btab", None) is None:
            S = self.S
            dt = self.dt
            w = np.full(S.shape, 2.0)
            w[..., 0] = 1.0
            if S.N % 2 == 0:
                w[..., -1] = 1.0
            w = (w * S.h**3 / S.N**3).ravel()
            lam = S.lam.ravel()
            a = 2.0 * lam * dt
            exact = (w * -np.expm1(-a), w * 2.0 * a * dt * _J(1, a), w * a * dt * dt * _J(2, a))
            # transport terms vanish outside the dealiasing mask, so their
            # contributions are only needed on the retained modes
            idx = np.flatnonzero(self.mask) if self.mask is not None else np.arange(lam.size)
            nodes, weights = np.polynomial.legendre.leggauss(3)
            nodes = 0.5 * dt * (nodes + 1.0)
            weights = 0.5 * dt * weights
            gl = []
            for s_, w_ in zip(nodes, weights):
                e, f1, f2, f3 = phi_functions(-lam * s_)
                gl.append((s_, w_, w * e * e, e[idx], f1[idx], f2[idx], f3[idx]))
            self._btab = (exact, gl, idx, w[idx], 2.0 * lam[idx])
        return self._btab

    def budget(self, uh, th, terms):
        """Integrals over one step of 2|grad th|^2, 2|grad u|^2, |th|, |u||th|.

        The free heat/buoyancy evolution of the starting state is integrated
        in closed form; the part driven by the transport terms is integrated
        by 3-point Gauss-Legendre on the ETD dense output.
        """
        dt = self.dt
        (c0, c1, c2), gl, idx, wm, lam2 = self._budget_tables()
        thf = th.ravel()
        uhf = uh.reshape(3, -1)
        Pth = self.buoy(th).reshape(3, -1)
        T0 = thf.real**2 + thf.imag**2
        A0 = np.sum(uhf.real**2 + uhf.imag**2, axis=0)
        A1 = np.sum(uhf.real * Pth.real + uhf.imag * Pth.imag, axis=0)
        A2 = np.sum(Pth.real**2 + Pth.imag**2, axis=0)
        d_th = float(c0 @ T0)
        d_u = float(c0 @ A0 + c1 @ A1 + c2 @ A2)
        i_th = 0.0
        i_uth = 0.0
        if terms is not None:
            Nu0, Nt0, dNu, dNt = (x.reshape(-1, x.shape[-3] * x.shape[-2] * x.shape[-1])[:, idx]
                                  for x in terms)
            Nt0, dNt = Nt0[0], dNt[0]
            pe = [c.ravel()[idx] for c in self.S.pe3] if self.opt.buoyancy else [0.0, 0.0, 0.0]
            PN0 = np.stack([c * Nt0 for c in pe])
            PdN = np.stack([c * dNt for c in pe])
            thm, uhm, Pthm = thf[idx], uhf[:, idx], Pth[:, idx]

        def wdot(a, b):
            return float(np.sum(wm * np.sum((a.conj() * b).real.reshape(-1, wm.size), axis=0)))

        for s, w, we2, e, f1, f2, f3 in gl:
            nt2 = float(we2 @ T0)
            nu2 = float(we2 @ (A0 + 2.0 * s * A1 + s * s * A2))
            if terms is not None:
                q = s * s / dt
                lin_t = e * thm
                lin_u = e * (uhm + s * Pthm)
                rt = s * f1 * Nt0 + q * f2 * dNt
                ru = (s * (f1 * Nu0 + s * (f1 - f2) * PN0)
                      + q * (f2 * dNu + s * (f2 - 2.0 * f3) * PdN))
                d_th += w * wdot(rt, lam2 * (2.0 * lin_t + rt))
                d_u += w * wdot(ru, lam2 * (2.0 * lin_u + ru))
                nt2 += wdot(rt, 2.0 * lin_t + rt)
                nu2 += wdot(ru, 2.0 * lin_u + ru)
            nt = np.sqrt(max(nt2, 0.0))
            i_th += w * nt
            i_uth += w * np.sqrt(max(nu2, 0.0)) * nt
        return d_th, d_u, i_th, i_uth


def _J(k: int, a: np.ndarray) -> np.ndarray:
    """int_0^1 exp(-a s) s^k ds, stable for all a >= 0."""
    a = np.asarray(a, dtype=float)
    pos = a > 0
    ap = np.where(pos, a, 1.0)
    fact = float(np.prod(np.arange(1, k + 1)))
    val = fact * gammainc(k + 1, ap) / ap ** (k + 1)
    return np.where(pos, val, 1.0 / (k + 1))


def step(state: State, dt: float, options: SolverOptions | None = None) -> State:
    """Advance a state by dt, treating its grid as periodic.

    For free-space evolution first move box data with ``embed_state``.
    """
    st = Stepper(state.grid, dt, options)
    if st.opt.mollify_delta is not None:
        raise ValueError("mollified mode needs a velocity history; use simulate()")
    u = state.u.values
    th = state.theta.values
    uh, thh = st.to_spectral(u, th)
    uh1, th1, u1, t1, _ = st.advance(uh, thh, u, th)
    g = state.grid
    return State(state.t + dt, VectorField(g, u1), ScalarField(g, t1))


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class Trajectory:
    box: Grid3
    grid: Grid3
    dt: float
    options: SolverOptions
    u0: VectorField
    theta0: ScalarField
    times: np.ndarray
    series: dict[str, np.ndarray]
    snapshots: list[State] = field(default_factory=list)
    contaminated: bool = False
    halted_at: float | None = None
    containment_floor: float = 0.99

    def norm_series(self, name: str, d: NormDescriptor | str) -> NormSeries:
        label = d if isinstance(d, str) else d.label
        key = f"{name}.{label}"
        if key not in self.series:
            raise KeyError(f"no recorded series {key!r}; recorded: {sorted(self.series)}")
        desc = NormDescriptor.parse(label)
        return NormSeries(desc, list(self.times), list(self.series[key]))

    def snapshot_at(self, t: float) -> State:
        if not self.snapshots:
            raise LookupError("trajectory holds no snapshots")
        best = min(self.snapshots, key=lambda s: abs(s.t - t))
        if abs(best.t - t) > 0.5 * self.dt + 1e-12:
            raise LookupError(f"no snapshot near t={t}; available: {[s.t for s in self.snapshots]}")
        return best

    def box_snapshot(self, t: float) -> State:
        return self.snapshot_at(t).cropped(self.box)

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def mean_moment(self) -> np.ndarray:
        """int_0^t m1(s) ds by the trapezoid rule over recorded times, shape (T, 3)."""
        m1 = np.stack([self.series["m1_1"], self.series["m1_2"], self.series["m1_3"]], axis=1)
        dt = np.diff(self.times)[:, None]
        inc = 0.5 * dt * (m1[1:] + m1[:-1])
        return np.vstack([np.zeros(3), np.cumsum(inc, axis=0)])


class _Recorder:
    def __init__(self, grid: Grid3, box: Grid3, descriptors, S: Symbols):
        self.grid = grid
        self.box = box
        self.S = S
        self.descs = list(descriptors)
        self.inner = grid.radius <= box.L / 2
        self.weights = {}
        for _, d in self.descs:
            if d.kind == "weighted" and d.r > 0 and d.r not in self.weights:
                self.weights[d.r] = (1.0 + grid.radius) ** d.r
        x1, x2, x3 = grid.axes()
        self.x = (x1, x2, x3)
        self.rows: dict[str, list[float]] = {}
        self.times: list[float] = []

    def add(self, key, value):
        self.rows.setdefault(key, []).append(float(value))

    def record(self, t, u, th, uh, thh, budget):
        S = self.S
        dv = self.grid.cell_volume
        self.times.append(float(t))
        umag = np.sqrt(u[0] ** 2 + u[1] ** 2 + u[2] ** 2)
        athp = np.abs(th)
        for name, d in self.descs:
            a = umag if name == "u" else athp
            if d.kind == "weak":
                v = weak_norm(a, d.p, dv)
            else:
                v = lp_norm(a, d.p, dv, self.weights.get(d.r) if d.kind == "weighted" else None)
            self.add(f"{name}.{d.label}", v)
        t2 = th * th
        tot = float(np.sum(t2))
        self.add("containment.theta", float(np.sum(t2[self.inner])) / tot if tot > 0 else 1.0)
        u2 = umag * umag
        tot = float(np.sum(u2))
        self.add("containment.u", float(np.sum(u2[self.inner])) / tot if tot > 0 else 1.0)
        self.add("mass", dv * float(np.sum(th)))
        for i, xi in enumerate(self.x):
            self.add(f"m1_{i + 1}", dv * float(np.sum(xi * th)))
        k = S.k
        div = 1j * (k[0] * uh[0] + k[1] * uh[1] + k[2] * uh[2])
        grad2 = sum(S.parseval(k[j] * uh[i]) for i in range(3) for j in range(3))
        self.add("div_u", np.sqrt(S.parseval(div) / grad2) if grad2 > 0 else 0.0)
        self.add("gradient.u", grad2)
        self.add("gradient.theta", sum(S.parseval(k[j] * thh) for j in range(3)))
        self.add("energy.u", sum(S.parseval(uh[i]) for i in range(3)))
        self.add("energy.theta", S.parseval(thh))
        for key, v in budget.items():
            self.add(key, v)


def simulate(u0: VectorField, theta0: ScalarField, T: float, dt: float,
             options: SolverOptions | None = None,
             descriptors=(("u", NormDescriptor(2)), ("theta", NormDescriptor(2))),
             snapshot_times=None, snapshot_stride: int | None = None,
             record_every: int = 1, containment_floor: float = 0.99,
             keep_full: bool = False, gate=None) -> Trajectory:
    """Evolve box data in free space (on the zero-padded doubled grid).

    ``descriptors`` is a sequence of (field name, NormDescriptor) with field
    name "u" or "theta"; norms are taken over the whole computational grid.
    Snapshots are cropped to the box unless ``keep_full``.  The run halts and
    is flagged once the temperature containment inside |x| <= L/2 drops below
    ``containment_floor``.
    """
    opt = options or SolverOptions()
    if u0.grid != theta0.grid:
        raise ValueError("u0 and theta0 live on different grids")
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    if gate is not None and not gate.passed:
        raise ValueError(f"initial data fails the smallness gate: {gate}")
    box = u0.grid
    grid = box.padded()
    stepper = Stepper(grid, dt, opt)
    S = stepper.S
    u = box.embed(u0.values)
    th = box.embed(theta0.values)
    uh, thh = stepper.to_spectral(u, th)
    k = S.k
    div0 = S.parseval(1j * (k[0] * uh[0] + k[1] * uh[1] + k[2] * uh[2]))
    g0 = sum(S.parseval(k[j] * uh[i]) for i in range(3) for j in range(3))
    if g0 > 0 and np.sqrt(div0 / g0) > 1e-8:
        raise ValueError(f"initial velocity is not solenoidal (relative divergence {np.sqrt(div0 / g0):.2e}); "
                         "under-resolved data, widen it or refine the grid")

    nsteps = int(round(T / dt))
    if abs(nsteps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T={T} is not a whole number of steps of dt={dt}")
    descriptors = [(name, NormDescriptor.parse(d) if isinstance(d, str) else d)
                   for name, d in descriptors]
    for name, _ in descriptors:
        if name not in ("u", "theta"):
            raise ValueError(f"norm field must be 'u' or 'theta', got {name!r}")

    snap_steps = set()
    if snapshot_times is not None:
        for ts in snapshot_times:
            snap_steps.add(int(round(ts / dt)))
    if snapshot_stride:
        snap_steps.update(range(0, nsteps + 1, snapshot_stride))
    snap_steps.add(0)

    rec = _Recorder(grid, box, descriptors, S)
    cum = {"dissipation.theta": 0.0, "dissipation.u": 0.0, "integral.theta": 0.0,
           "integral.u_theta": 0.0}
    snapshots = []
    contaminated = False
    halted = None

    hist = None
    delta = opt.mollify_delta
    if delta is not None:
        from .mild import mollify_arrays
        hist = deque()
        hist.append((0.0, u.copy()))

    def keep(n, t, u, th):
        if n in snap_steps:
            uu = u if keep_full else box.crop(u)
            tt = th if keep_full else box.crop(th)
            g = grid if keep_full else box
            snapshots.append(State(t, VectorField(g, uu), ScalarField(g, tt)))

    t = 0.0
    if not opt.energy_budget:
        cum = {}
    rec.record(t, u, th, uh, thh, cum)
    keep(0, t, u, th)
    for n in range(1, nsteps + 1):
        adv0 = adv1 = None
        if hist is not None:
            adv0 = mollify_arrays(grid, hist, delta, t)
            adv1 = mollify_arrays(grid, hist, delta, t + dt)
        uh1, thh1, u1, th1, terms = stepper.advance(uh, thh, u, th, adv0, adv1)
        if opt.energy_budget:
            d_th, d_u, i_th, i_uth = stepper.budget(uh, thh, terms)
            cum["dissipation.theta"] += d_th
            cum["dissipation.u"] += d_u
            cum["integral.theta"] += i_th
            cum["integral.u_theta"] += 2.0 * i_uth
        uh, thh, u, th = uh1, thh1, u1, th1
        t = n * dt
        if hist is not None:
            hist.append((t, u.copy()))
            while len(hist) > 2 and hist[1][0] < t - 2.0 * delta - dt:
                hist.popleft()
        if n % record_every == 0 or n == nsteps:
            rec.record(t, u, th, uh, thh, cum)
            keep(n, t, u, th)
            c = rec.rows["containment.theta"][-1]
            if c < containment_floor:
                contaminated = True
                halted = t
                log.warning("temperature containment %.4f < %.2f at t=%g; halting", c,
                            containment_floor, t)
                break

    series = {k: np.asarray(v) for k, v in rec.rows.items()}
    return Trajectory(box=box, grid=grid, dt=dt, options=opt, u0=u0.copy(), theta0=theta0.copy(),
                      times=np.asarray(rec.times), series=series, snapshots=snapshots,
                      contaminated=contaminated, halted_at=halted,
                      containment_floor=containment_floor)
