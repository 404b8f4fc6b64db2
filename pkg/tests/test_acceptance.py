"""End-to-end acceptance suite.

Two long trajectories (about three to four minutes each on one core) are shared
by the criteria that need them:

  growth run:     Gaussian temperature of mass 0.025, u0 = 0
  zero-mean run:  dipole temperature plus a small solenoidal velocity, full
                  computational-grid snapshots kept for the spectral audit

Every criterion prints one PASS/FAIL line; the lines are repeated in the
terminal summary.
"""

import time

import numpy as np
import pytest

from boussinesq import Grid3, ScalarField, SolverOptions, VectorField, simulate
from boussinesq.diagnostics import (FitRefused, NormVerdict, clean_window, energy_audit,
                                    fit_power_law, fit_trajectory, predicted_exponent,
                                    predicted_theta_rate, profile_compare_fields)
from boussinesq.initial import dipole_theta, gaussian_theta, solenoidal_u
from boussinesq.kernels import fundamental_second, kernel_identity_audit, kernel_table
from boussinesq.scenarios import (analyze_fourier_splitting, analyze_profile, analyze_weighted_sweep,
                                  config_for, run_picard, run_scenario, run_trajectory, _tail_value)
from boussinesq.spectral import divergence, gradient, heat_propagate, leray_project

from test_spectral import smooth_random

GROWTH_NORMS = ("u.Lp:p=2", "u.Lp_r:p=2,r=0.5", "u.Lp:p=4", "u.Lp_r:p=2,r=2",
                "theta.Lp:p=2", "theta.Lp:p=4")
ZERO_MEAN_NORMS = ("u.Lp:p=2", "theta.Lp:p=2", "theta.Lp:p=4")


@pytest.fixture(scope="session")
def growth():
    cfg = config_for("weighted_sweep", norms=GROWTH_NORMS)
    return cfg, run_trajectory(cfg)


@pytest.fixture(scope="session")
def zero_mean():
    cfg = config_for("fourier_splitting", norms=ZERO_MEAN_NORMS)
    return cfg, run_trajectory(cfg)


def _fit(traj, name, label):
    try:
        return fit_trajectory(traj, name, label)
    except FitRefused as exc:
        return exc


def _slope_ok(fit, target, tol):
    return not isinstance(fit, FitRefused) and abs(fit.slope - target) <= tol


def _fmt(fit):
    if isinstance(fit, FitRefused):
        return f"refused ({fit})"
    return f"{fit.slope:+.4f} +/- {fit.half_width:.4f} on [{fit.window[0]:g}, {fit.window[1]:g}]"


def test_criterion_01_kernel_identities(acceptance_log):
    kernel_table()
    start = time.perf_counter()
    rep = kernel_identity_audit(samples=100)
    elapsed = time.perf_counter() - start
    psi = float(np.max(rep.psi_ratios))
    checks = {"trace": rep.trace_error <= 1e-6, "scaling K": rep.scaling_K <= 1e-6,
              "scaling grad K": rep.scaling_F <= 1e-6, "psi ratio": psi <= 1e-3,
              "runtime": elapsed < 60}
    ok = acceptance_log(1, all(checks.values()),
                        f"trace {rep.trace_error:.2e}, scaling {rep.scaling_K:.2e}/{rep.scaling_F:.2e}, "
                        f"max |Psi(4y)|/|Psi(y)| = {psi:.4f} (bound 1e-3), {elapsed:.2f} s; "
                        f"failing: {[k for k, v in checks.items() if not v] or 'none'}")
    assert ok


def test_criterion_02_linear_theta_decay(acceptance_log):
    g = Grid3(64, 64.0)
    t = np.linspace(5.0, 50.0, 19)
    start = time.perf_counter()
    slopes = {}
    for name, th0 in (("dipole", dipole_theta(g, 0.025, 1.0)), ("gaussian", gaussian_theta(g, 0.025, 1.0))):
        vals = [np.sqrt(g.cell_volume * np.sum(heat_propagate(th0, s).values ** 2)) for s in t]
        slopes[name] = fit_power_law(t, np.array(vals), (5.0, 50.0)).slope
    elapsed = time.perf_counter() - start
    ok = abs(slopes["dipole"] + 1.25) <= 0.05 and abs(slopes["gaussian"] + 0.75) <= 0.05 and elapsed < 60
    acceptance_log(2, ok, f"dipole {slopes['dipole']:+.4f} (target -1.25), gaussian {slopes['gaussian']:+.4f} "
                          f"(target -0.75), {elapsed:.1f} s")
    assert ok


def test_criterion_03_nonlinear_theta_rates(acceptance_log, growth, zero_mean):
    _, a = growth
    _, b = zero_mean
    l2, l4, zm = _fit(a, "theta", "Lp:p=2"), _fit(a, "theta", "Lp:p=4"), _fit(b, "theta", "Lp:p=2")
    target4 = predicted_theta_rate(4)[0]
    ok = _slope_ok(l2, -0.75, 0.1) and _slope_ok(l4, target4, 0.15) and _slope_ok(zm, -1.25, 0.1)
    acceptance_log(3, ok, f"L2 {_fmt(l2)}; L4 {_fmt(l4)} (target {target4:g}); zero mean L2 {_fmt(zm)}")
    assert ok


def test_criterion_04_energy_growth(acceptance_log, growth):
    _, a = growth
    fit = _fit(a, "u", "Lp:p=2")
    if isinstance(fit, FitRefused):
        acceptance_log(4, False, f"REFUSED: {fit}")
        pytest.fail(f"fit refused: {fit}")
    c = a.series["containment.theta"]
    sel = (a.times >= fit.window[0]) & (a.times <= fit.window[1])
    clean = float(np.min(c[sel]))
    ok = _slope_ok(fit, 0.25, 0.08) and clean >= 0.99
    acceptance_log(4, ok, f"||u||_2 slope {_fmt(fit)}, min containment in window {clean:.4f}")
    assert ok


def test_criterion_05_zero_mean_decay(acceptance_log, zero_mean):
    _, b = zero_mean
    fit = _fit(b, "u", "Lp:p=2")
    t1, t2 = clean_window(b)
    t = np.geomspace(max(t1, 1.0), t2, 12)
    lin = [b.box.cell_volume * np.sum(heat_propagate(b.u0, s).values ** 2) for s in t]
    lin_slope = fit_power_law(t, np.array(lin), (t[0], t[-1])).slope
    ok = _slope_ok(fit, -0.25, 0.1) and lin_slope <= -0.5
    acceptance_log(5, ok, f"||u||_2 slope {_fmt(fit)}; ||e^(t Lap) u0||_2^2 slope {lin_slope:+.3f} "
                          f"(must decay at least like t^-0.5)")
    assert ok


def test_criterion_06_weighted_sweep(acceptance_log, growth):
    cfg, a = growth
    rows, _ = analyze_weighted_sweep(a, cfg)
    verdict = predicted_exponent(2, 2, "nonzero_mean")
    ok = all(r.verdict == "PASS" for r in rows) and isinstance(verdict, NormVerdict) and len(rows) == 4
    acceptance_log(6, ok, "; ".join(f"{r.claim}: {r.value:.4f} vs {r.target} [{r.verdict}]" for r in rows))
    assert ok


def test_criterion_07_profile(acceptance_log, growth):
    cfg, a = growth
    assert cfg.A * np.sqrt(cfg.profile_t) <= cfg.L / 2
    rows, extra = analyze_profile(a, cfg)
    measured = rows[0].value
    g = Grid3(64, 16.0)
    u0 = solenoidal_u(g, 0.01, 2.0)
    x = np.stack(np.broadcast_arrays(*g.axes()), axis=-1)
    t, m0 = 2.0, 0.025
    exact = heat_propagate(u0, t).values + np.moveaxis(m0 * t * fundamental_second(x)[..., :, 2], -1, 0)
    synth = profile_compare_fields(VectorField(g, exact), u0, t, 6.0, "nonzero_mean", m0=m0)
    synth_err = max(abs(m - 1.0) for m in synth.median)
    ok = 0.85 <= measured <= 1.15 and synth_err <= 1e-8
    acceptance_log(7, ok, f"median u_3/(m0 t E_33) at |x| = {extra['profile']['radius']:g}: {measured:.4f} "
                          f"over {extra['profile']['admissible'][2]} nodes; synthetic |ratio - 1| {synth_err:.1e}")
    assert ok


def test_criterion_08_zero_mean_tail(acceptance_log, zero_mean):
    cfg, b = zero_mean
    alpha, t = _tail_value(b, cfg)
    ok = abs(alpha - 4.0) <= 0.4
    acceptance_log(8, ok, f"tail exponent of u - e^(t Lap) u0 at t = {t:g}: {alpha:.3f} (target 4 +/- 0.4)")
    assert ok


def test_criterion_09_picard(acceptance_log):
    cfg = config_for("picard")
    rows, extra = run_picard(cfg)
    gate = extra["gate"]
    size = max(gate["theta_l1"], gate["theta_weighted_sup"], gate["u_weighted_sup"])
    ratios = extra["ratios"][:5]
    ok = len(ratios) == 5 and max(ratios) <= 0.5 and all(r.verdict == "PASS" for r in rows) \
        and size <= 0.1 * gate["epsilon"] * (1 + 1e-12)
    acceptance_log(9, ok, f"data {size:.3g} = {size / gate['epsilon']:.0%} of the gate; "
                          f"ratios {[round(r, 4) for r in ratios]}; C = {rows[1].value:.4g}")
    assert ok


def test_criterion_10_structure(acceptance_log, growth, zero_mean, rng, tmp_path):
    notes, ok = [], True
    g = Grid3(16, 4.0)
    v = smooth_random(g, rng, 3)
    p1 = leray_project(v, periodic=True)
    idem = np.max(np.abs(leray_project(p1, periodic=True).values - p1.values)) / np.max(np.abs(p1.values))
    grad = gradient(smooth_random(g, rng), periodic=True)
    ann = np.max(np.abs(leray_project(grad, periodic=True).values)) / np.max(np.abs(grad.values))
    ok &= idem <= 1e-10 and ann <= 1e-10
    notes.append(f"Leray idempotence {idem:.1e}, annihilation {ann:.1e}")
    for label, (_, tr) in (("growth", growth), ("zero mean", zero_mean)):
        div = float(np.max(tr.series["div_u"]))
        mass = float(np.ptp(tr.series["mass"])) / (tr.box.cell_volume * np.sum(np.abs(tr.theta0.values)))
        audit = energy_audit(tr)
        ok &= div <= 1e-8 and mass <= 1e-8 and audit.passed
        notes.append(f"{label}: div {div:.1e}, mass drift {mass:.1e}, energy worst {audit.worst:.1e}")
    small = Grid3(32, 8.0)
    u0 = solenoidal_u(small, 0.02, 0.5)
    th0 = ScalarField(small, np.zeros(small.shape))
    on = simulate(u0, th0, 1.0, 0.25, snapshot_times=[1.0])
    off = simulate(u0, th0, 1.0, 0.25, SolverOptions(buoyancy=False), snapshot_times=[1.0])
    bitwise = np.array_equal(on.snapshots[-1].u.values, off.snapshots[-1].u.values)
    ok &= bitwise
    notes.append(f"Navier-Stokes reduction bitwise {bitwise}")
    base = config_for("growth", n=32, L=8.0, T=0.5, dt=0.125, theta_width=0.5, u="solenoidal",
                      u_width=0.5, snapshot_times=(0.5,))
    outs = [run_scenario(base.replace(output=str(tmp_path / k)), write_snapshots=True).out_dir for k in "ab"]
    files = ["series.csv", "audit.csv"] + sorted(f"snapshots/{p.name}" for p in (outs[0] / "snapshots").iterdir())
    same = len(files) > 2 and all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files)
    ok &= same
    notes.append(f"reruns byte-identical {same}")
    acceptance_log(10, bool(ok), "; ".join(notes))
    assert ok


def test_criterion_11_fourier_splitting(acceptance_log, zero_mean):
    cfg, b = zero_mean
    rows, extra = analyze_fourier_splitting(b, cfg)
    sp = extra["splitting"]
    ok = all(r.verdict == "PASS" for r in rows)
    acceptance_log(11, ok, f"theta constant drift {sp['constants']['C_drift']:.3f}, velocity constant drift "
                           f"{sp['constants']['A_drift']:.3f} over t in [{sp['times'][0]:g}, {sp['times'][-1]:g}], "
                           f"violations {sp['violations']}")
    assert ok
