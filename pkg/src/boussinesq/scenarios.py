"""Scenario runner: one configuration in, artifacts and an exit status out.

Every scenario produces a list of claim rows.  A row carries the claimed value,
its tolerance, the measured value with a half-width and a verdict (PASS, FAIL,
REFUSED or INFO).  Exit status is 1 when any row FAILs, 3 when a fit was
refused because the run left the box, 0 otherwise.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .diagnostics import (Cone, FitRefused, NormVerdict, clean_window, energy_audit,
                          envelope_audit, fit_trajectory, fourier_splitting_audit, m_tilde,
                          predicted_exponent, predicted_theta_rate, profile_compare,
                          tail_exponent_probe)
from .fields import Grid3, NormDescriptor, VectorField
from .initial import generate_initial
from .kernels import kernel_identity_audit
from .mild import picard_solve
from .snapshot import state_fields, write_snapshot
from .spaces import smallness_gate
from .solver import SolverOptions, Trajectory, simulate
from .spectral import heat_propagate

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONTAMINATED = 3

# per-scenario overrides of the ExperimentConfig defaults
SCENARIO_DEFAULTS: dict[str, dict] = {
    "zero": dict(theta="zero", u="zero", n=16, L=8.0, T=1.0, dt=0.5, snapshot_times=(1.0,)),
    "growth": {},
    "theta_rates": dict(norms=("u.Lp:p=2", "theta.Lp:p=2", "theta.Lp:p=4")),
    "zero_mean_decay": dict(theta="dipole", u="solenoidal", case="zero_mean"),
    "fourier_splitting": dict(theta="dipole", u="solenoidal", case="zero_mean"),
    "profile": {},
    "weighted_sweep": dict(norms=("u.Lp:p=2", "u.Lp_r:p=2,r=0.5", "u.Lp:p=4", "u.Lp_r:p=2,r=2",
                                  "theta.Lp:p=2")),
    "tail": {},
    "picard": dict(n=32, L=16.0, T=2.0, dt=0.25, theta_amplitude=0.005, u="solenoidal",
                   u_amplitude=0.005, u_width=2.0, snapshot_times=()),
    "mollified": dict(n=32, L=32.0, T=10.0, dt=0.5, mollify_delta=0.5,
                      snapshot_times=(1.0, 5.0, 10.0)),
    "kernels": {},
}

CLAIMS = {
    "zero": "zero data stays zero",
    "growth": "energy growth ||u(t)||_2 ~ t^(1/4) for nonzero-mean temperature",
    "theta_rates": "temperature L^p decay -(3/2)(1 - 1/p)",
    "zero_mean_decay": "zero-mean velocity decay ||u(t)||_2 ~ t^(-1/4)",
    "fourier_splitting": "bounded low-frequency constants on the shrinking ball",
    "profile": "far-field potential-flow profile of the velocity",
    "weighted_sweep": "weighted L^p_r exponents (r + 3/p - 1)/2 and the infinite-norm range",
    "tail": "spatial velocity tail |x|^-3 (nonzero mean) or |x|^-4 (zero mean)",
    "picard": "contraction of the mild-solution iteration for small data",
    "mollified": "retarded-mollifier approximation stays solenoidal and dissipative",
    "kernels": "Oseen kernel identities and far-field residual",
}


def config_for(scenario: str, **overrides) -> ExperimentConfig:
    """Scenario defaults with ``overrides`` on top."""
    if scenario not in SCENARIO_DEFAULTS:
        raise ValueError(f"unknown scenario {scenario!r}")
    return ExperimentConfig(scenario=scenario, **{**SCENARIO_DEFAULTS[scenario], **overrides})


@dataclass
class Row:
    claim: str
    target: float | str | None
    tolerance: float | None
    value: float | str | None
    half_width: float | None = 0.0
    verdict: str = "INFO"
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        return {"claim": self.claim, "target": self.target, "tolerance": self.tolerance,
                "value": self.value, "half_width": self.half_width, "verdict": self.verdict,
                **({"detail": self.detail} if self.detail else {})}


def _check(claim, target, tol, value, hw=0.0, **detail) -> Row:
    verdict = "PASS" if abs(value - target) <= tol else "FAIL"
    return Row(claim, target, tol, float(value), hw, verdict, detail)


def _at_most(claim, bound, value, **detail) -> Row:
    return Row(claim, f"<= {bound:g}", None, float(value), 0.0,
               "PASS" if value <= bound else "FAIL", detail)


@dataclass
class RunResult:
    status: int
    out_dir: Path
    rows: list[Row]
    reports: dict
    trajectory: Trajectory | None = None


# ---------------------------------------------------------------------------
# trajectories


def build_initial(cfg: ExperimentConfig):
    grid = Grid3(cfg.n, cfg.L)
    return generate_initial(grid, cfg.theta, cfg.theta_amplitude, cfg.theta_width, cfg.u,
                            cfg.u_amplitude, cfg.u_width, cfg.separation)


def run_trajectory(cfg: ExperimentConfig, options: SolverOptions | None = None) -> Trajectory:
    """Simulate ``cfg``.  Fourier-splitting runs keep full computational-grid
    snapshots: cropping to the box cuts the velocity tail and spoils the
    lowest modes the audit looks at."""
    u0, th0 = build_initial(cfg)
    opt = options or SolverOptions(nonlinear=cfg.nonlinear, buoyancy=cfg.buoyancy)
    kw = {}
    if cfg.snapshot_stride:
        kw["snapshot_stride"] = cfg.snapshot_stride
    else:
        kw["snapshot_times"] = [t for t in cfg.snapshot_times if t <= cfg.T + 1e-12]
    return simulate(u0, th0, cfg.T, cfg.dt, opt, descriptors=cfg.descriptors,
                    containment_floor=cfg.containment_floor,
                    keep_full=cfg.scenario == "fourier_splitting", **kw)


# ---------------------------------------------------------------------------
# analyses: (trajectory, config) -> (rows, extra report data)


def _fit_row(traj, cfg, name, label, target, tol, claim) -> Row:
    try:
        fit = fit_trajectory(traj, name, label, cfg.fit_window)
    except FitRefused as exc:
        return Row(claim, target, tol, None, None, "REFUSED", {"reason": str(exc)})
    return _check(claim, target, tol, fit.slope, fit.half_width, window=list(fit.window), n=fit.n)


def _energy_row(traj) -> Row:
    rep = energy_audit(traj)
    return Row("energy inequalities within 1% slack", f"<= {rep.slack:g}", None, rep.worst, 0.0,
               "PASS" if rep.passed else "FAIL", {"violations": rep.violations})


def _structure_rows(traj) -> list[Row]:
    s = traj.series
    mass = s["mass"]
    scale = max(traj.box.cell_volume * float(np.sum(np.abs(traj.theta0.values))), 1e-300)
    return [
        _at_most("max divergence of u", 1e-8, float(np.max(s["div_u"]))),
        _at_most("temperature mass drift (relative)", 1e-8, float(np.ptp(mass)) / scale),
    ]


def analyze_zero(traj, cfg):
    vals = [np.max(np.abs(v)) for k, v in traj.series.items() if k.startswith(("u.", "theta."))]
    return [_at_most("all recorded norms vanish", 0.0, float(max(vals, default=0.0)))], {}


def analyze_growth(traj, cfg):
    rows = [_fit_row(traj, cfg, "u", "Lp:p=2", 0.25, 0.08, "||u||_2 growth exponent"),
            _energy_row(traj)]
    env = envelope_audit(traj, cfg.a, cfg.b, cfg.case)
    rows.append(Row(f"pointwise envelopes a={cfg.a:g}, b={cfg.b:g}", "stable", None,
                    "stable" if env.stable else "growth", None, "INFO",
                    {"C_u": env.C_u, "C_theta": env.C_theta}))
    return rows + _structure_rows(traj), {"envelope": env.to_dict()}


def analyze_theta_rates(traj, cfg):
    rows = []
    for name, d in cfg.descriptors:
        if name != "theta" or d.kind != "lebesgue" or np.isinf(d.p):
            continue
        if cfg.case == "zero_mean":
            if d.p != 2:
                continue
            target, tol = -1.25, 0.1
        else:
            target = predicted_theta_rate(d.p)[0]
            tol = 0.1 if d.p == 2 else 0.15
        rows.append(_fit_row(traj, cfg, "theta", d.label, target, tol,
                             f"||theta||_{d.p:g} decay exponent"))
    return rows, {}


def analyze_zero_mean_decay(traj, cfg):
    rows = [_fit_row(traj, cfg, "u", "Lp:p=2", -0.25, 0.1, "||u||_2 zero-mean decay exponent"),
            _fit_row(traj, cfg, "theta", "Lp:p=2", -1.25, 0.1, "||theta||_2 zero-mean decay exponent"),
            _energy_row(traj)]
    return rows + _structure_rows(traj), {"m_tilde": m_tilde(traj)}


def analyze_fourier_splitting(traj, cfg):
    rep = fourier_splitting_audit(traj, cfg.k, (1.0, min(50.0, cfg.T)))
    d = rep.to_dict()
    rows = [
        Row("theta low-frequency constant drift", "<= 2", None, rep.theta_drift, 0.0,
            "PASS" if rep.theta_drift <= 2 else "FAIL"),
        Row("velocity low-frequency constant drift", "<= 2", None, rep.velocity_drift, 0.0,
            "PASS" if rep.velocity_drift <= 2 else "FAIL"),
        Row("violations with run-wide constants", 0, None, rep.violations, 0.0,
            "PASS" if rep.violations == 0 else "FAIL"),
    ]
    return rows, {"splitting": d}


def analyze_profile(traj, cfg):
    rep = profile_compare(traj, cfg.profile_t, cfg.A, cfg.case)
    if cfg.case == "nonzero_mean":
        row = _check("median ratio u_3 / (m0 t E_33) on the shell", 1.0, 0.15, rep.primary_median,
                     rep.iqr[2] / 2, radius=rep.radius, admissible=rep.admissible[2])
    else:
        row = Row("zero-mean profile medians per component", None, None, rep.primary_median,
                  rep.iqr[2] / 2, "INFO", {"median": rep.median})
    return [row], {"profile": rep.to_dict()}


def _tail_cone(traj, cfg, t):
    r_min = cfg.A * np.sqrt(t)
    r_max = 0.875 * traj.box.L
    if r_min >= r_max:
        raise ValueError(f"A sqrt(t) = {r_min:.3g} leaves no room for a tail probe below {r_max:.3g}")
    return Cone(r_min=r_min, r_max=r_max)


def _tail_value(traj, cfg):
    snap = traj.box_snapshot(cfg.profile_t)
    u = snap.u
    if cfg.case == "zero_mean":
        u = VectorField(u.grid, u.values - heat_propagate(traj.u0, snap.t).values)
    return tail_exponent_probe(u, _tail_cone(traj, cfg, snap.t)), snap.t


def analyze_tail(traj, cfg):
    alpha, t = _tail_value(traj, cfg)
    target, tol = (3.0, 0.3) if cfg.case == "nonzero_mean" else (4.0, 0.4)
    return [_check("spatial decay exponent of the velocity tail", target, tol, alpha, 0.0, t=t)], {}


def analyze_weighted_sweep(traj, cfg):
    rows = []
    for name, d in cfg.descriptors:
        if name != "u" or d.kind == "weak":
            continue
        pred = predicted_exponent(d.p, d.r, cfg.case)
        claim = f"||u||_(p={d.p:g}, r={d.r:g}) exponent"
        if isinstance(pred, NormVerdict):
            alpha, t = _tail_value(traj, cfg)
            target = 3.0 if cfg.case == "nonzero_mean" else 4.0
            tol = 0.1 * target
            row = _check(f"{claim}: {pred.verdict} norm, tail exponent", target, tol, alpha, 0.0,
                         verdict_reason=pred.reason, t=t)
            rows.append(row)
        else:
            rows.append(_fit_row(traj, cfg, "u", d.label, pred, 0.1, claim))
    return rows, {}


def analyze_mollified(traj, cfg):
    return [_energy_row(traj)] + _structure_rows(traj), {}


TRAJECTORY_ANALYSES = {
    "zero": analyze_zero,
    "growth": analyze_growth,
    "theta_rates": analyze_theta_rates,
    "zero_mean_decay": analyze_zero_mean_decay,
    "fourier_splitting": analyze_fourier_splitting,
    "profile": analyze_profile,
    "weighted_sweep": analyze_weighted_sweep,
    "tail": analyze_tail,
    "mollified": analyze_mollified,
}


def run_picard(cfg):
    u0, th0 = build_initial(cfg)
    gate = smallness_gate(u0, th0, cfg.epsilon)
    res = picard_solve(u0, th0, cfg.T, cfg.dt, cfg.picard_iterations, keep_iterates=False)
    ratios = res.ratios[:5]
    rows = [_at_most("successive X-distance ratio (first 5)", 0.5, max(ratios, default=np.inf),
                     ratios=ratios)]
    data = max(gate.theta_l1, gate.theta_weighted_sup, gate.u_weighted_sup)
    C = max(res.x_norms) / data if data > 0 else 0.0
    rows.append(Row("iterate X-norms bounded by C * data size", None, None, C, 0.0,
                    "FAIL" if res.diverged or not np.isfinite(C) else "PASS",
                    {"x_norms": res.x_norms, "y_norms": res.y_norms}))
    return rows, {"gate": gate.to_dict(), "x_distances": res.x_distances,
                  "y_distances": res.y_distances, "ratios": res.ratios}


def run_kernels(cfg):
    rep = kernel_identity_audit(seed=cfg.seed)
    rows = [
        _at_most("trace K = 2 g_t (relative)", 1e-6, rep.trace_error),
        _at_most("scaling law for K", 1e-6, rep.scaling_K),
        _at_most("scaling law for grad K", 1e-6, rep.scaling_F),
        _at_most("tables against the erf closed form", 1e-6, rep.closed_form_error),
        _at_most("residual ratio |Psi(4y)| / |Psi(y)|", 1e-3, float(np.max(rep.psi_ratios))),
    ]
    return rows, {"kernels": rep.to_dict()}


# ---------------------------------------------------------------------------
# artifacts


def _fmt(x: float) -> str:
    return repr(float(x))


def write_series_csv(path, traj: Trajectory, cfg: ExperimentConfig) -> None:
    cols = [f"{name}.{d.label}" for name, d in cfg.descriptors]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + cols)
        for i, t in enumerate(traj.times):
            w.writerow([_fmt(t)] + [_fmt(traj.series[c][i]) for c in cols])


AUDIT_COLUMNS = ("containment.theta", "containment.u", "mass", "div_u", "energy.u",
                 "energy.theta", "dissipation.u", "dissipation.theta", "integral.theta",
                 "integral.u_theta")


def write_audit_csv(path, traj: Trajectory) -> None:
    cols = [c for c in AUDIT_COLUMNS if c in traj.series]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + cols)
        for i, t in enumerate(traj.times):
            w.writerow([_fmt(t)] + [_fmt(traj.series[c][i]) for c in cols])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def status_of(rows: list[Row], contaminated: bool = False) -> int:
    verdicts = {r.verdict for r in rows}
    if "FAIL" in verdicts:
        return EXIT_FAIL
    if "REFUSED" in verdicts or contaminated:
        return EXIT_CONTAMINATED
    return EXIT_OK


def run_scenario(cfg: ExperimentConfig, trajectory: Trajectory | None = None,
                 write_snapshots: bool = True) -> RunResult:
    """Run one scenario and write its artifacts into ``cfg.output_dir()``.

    A precomputed ``trajectory`` for the same configuration may be passed to
    share one simulation between several trajectory scenarios.
    """
    start = time.perf_counter()
    out = cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    traj = None
    if cfg.scenario == "picard":
        rows, extra = run_picard(cfg)
    elif cfg.scenario == "kernels":
        rows, extra = run_kernels(cfg)
    else:
        traj = trajectory if trajectory is not None else run_trajectory(
            cfg, SolverOptions(nonlinear=cfg.nonlinear, buoyancy=cfg.buoyancy,
                               mollify_delta=cfg.mollify_delta if cfg.scenario == "mollified" else None))
        write_series_csv(out / "series.csv", traj, cfg)
        write_audit_csv(out / "audit.csv", traj)
        if write_snapshots:
            snap_dir = out / "snapshots"
            snap_dir.mkdir(exist_ok=True)
            for s in traj.snapshots:
                write_snapshot(snap_dir / f"t{s.t:010.4f}.bqsnap", s.grid, s.t, state_fields(s.u, s.theta))
        rows, extra = TRAJECTORY_ANALYSES[cfg.scenario](traj, cfg)
        try:
            window = list(clean_window(traj))
        except FitRefused:
            window = None
        extra = {**extra, "contaminated": traj.contaminated, "halted_at": traj.halted_at,
                 "clean_window": window}
    status = status_of(rows, traj.contaminated if traj is not None else False)
    write_json(out / "report.json", {"scenario": cfg.scenario, "rows": [r.to_dict() for r in rows],
                                     "status": status, **extra})
    write_json(out / "manifest.json", {
        "scenario": cfg.scenario, "claim": CLAIMS[cfg.scenario], "config": cfg.to_dict(),
        "version": __version__, "numpy": np.__version__,
        "wall_time": time.perf_counter() - start, "status": status})
    return RunResult(status, out, rows, extra, traj)


# ---------------------------------------------------------------------------
# summaries


REQUIRED = ("manifest.json", "report.json")


def _fmt_cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _summarize(run_dir: Path) -> list[str]:
    manifest = json.loads((run_dir / "manifest.json").read_text())
    lines = [f"== {manifest['scenario']} ({run_dir}) status {manifest.get('status')}",
             f"   claim: {manifest['claim']}"]
    rep_path = run_dir / "report.json"
    if not rep_path.exists():
        lines.append("   missing: report.json")
        return lines
    report = json.loads(rep_path.read_text())
    for r in report["rows"]:
        tol = f" +/- {r['tolerance']:g}" if r.get("tolerance") is not None else ""
        hw = r.get("half_width")
        hw_txt = f" +/- {_fmt_cell(hw)}" if hw is not None else " +/- n/a"
        lines.append(f"   {r['claim']}: claim {_fmt_cell(r['target'])}{tol} | "
                     f"measured {_fmt_cell(r['value'])}{hw_txt} | {r['verdict']}")
    return lines


def report(run_dir) -> str:
    """Human-readable summary of one run directory or of every run below it."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise FileNotFoundError(f"{run_dir}: not a directory")
    dirs = sorted(p.parent for p in run_dir.rglob("manifest.json"))
    if not dirs:
        missing = ", ".join(REQUIRED)
        raise FileNotFoundError(f"{run_dir}: no run found; missing {missing}")
    out = []
    for d in dirs:
        out.extend(_summarize(d))
    return "\n".join(out)
