"""Command-line entry point: ``boussinesq <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, parse_pairs, read_pairs
from .diagnostics import FitRefused, fit_power_law
from .scenarios import (EXIT_CONTAMINATED, EXIT_FAIL, EXIT_OK, SCENARIO_DEFAULTS, config_for,
                        report, run_scenario)

log = logging.getLogger("boussinesq")

TRAJECTORY_SCENARIOS = tuple(s for s in SCENARIO_DEFAULTS if s not in ("picard", "kernels"))
_KEYS = [f.name for f in fields(ExperimentConfig) if f.name != "scenario"]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; explicit flags override it")
    g = p.add_argument_group("configuration keys")
    for key in _KEYS:
        g.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}", metavar="VALUE")


def build_config(args, scenario: str) -> ExperimentConfig:
    file_pairs = read_pairs(Path(args.config).read_text()) if args.config else {}
    scenario = file_pairs.pop("scenario", scenario)
    flag_pairs = {k: getattr(args, f"cfg_{k}") for k in _KEYS if getattr(args, f"cfg_{k}") is not None}
    cfg = config_for(scenario)
    cfg = parse_pairs(file_pairs, cfg)
    return parse_pairs(flag_pairs, cfg)


def _run(cfg: ExperimentConfig) -> int:
    res = run_scenario(cfg)
    print(report(res.out_dir))
    return res.status


def cmd_scenario(args, scenario: str) -> int:
    return _run(build_config(args, scenario))


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    head, body = rows[0], rows[1:]
    data = np.array(body, dtype=float).reshape(len(body), len(head))
    return {h: data[:, i] for i, h in enumerate(head)}


def cmd_fit(args) -> int:
    run = Path(args.run_dir)
    series = _read_csv(run / "series.csv")
    if args.norm not in series:
        cols = ", ".join(c for c in series if c != "t")
        print(f"no column {args.norm!r}; available: {cols}", file=sys.stderr)
        return EXIT_FAIL
    t = series["t"]
    window = (args.t1, args.t2) if args.t1 is not None else (t[-1] / 10.0, t[-1])
    audit = run / "audit.csv"
    if audit.exists():
        c = _read_csv(audit)["containment.theta"]
        sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
        if np.any(c[sel] < args.floor):
            print(json.dumps({"refused": f"containment below {args.floor} inside {list(window)}"}))
            return EXIT_CONTAMINATED
    try:
        fit = fit_power_law(t, series[args.norm], window)
    except FitRefused as exc:
        print(json.dumps({"refused": str(exc)}))
        return EXIT_FAIL
    print(json.dumps({"norm": args.norm, **fit.to_dict()}, indent=2))
    return EXIT_OK


def _sweep_one(cfg: ExperimentConfig) -> tuple[str, int]:
    return str(cfg.output_dir()), run_scenario(cfg).status


def cmd_sweep(args) -> int:
    base = build_config(args, args.scenario)
    if args.param not in _KEYS:
        print(f"unknown sweep parameter {args.param!r}", file=sys.stderr)
        return EXIT_FAIL
    values = [v.strip() for v in args.values.split(args.sep) if v.strip()]
    root = base.output_dir()
    configs = [parse_pairs({args.param: v, "output": str(root / f"{args.param}={v}")}, base)
               for v in values]
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(_sweep_one, configs))
    for out, status in results:
        print(f"{out}: exit {status}")
    print(report(root))
    return max((s for _, s in results), default=EXIT_OK)


def cmd_report(args) -> int:
    try:
        print(report(args.run_dir))
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boussinesq", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a trajectory scenario")
    s.add_argument("--scenario", default="growth", choices=TRAJECTORY_SCENARIOS)
    _add_config_flags(s)
    s.set_defaults(func=lambda a: cmd_scenario(a, a.scenario))

    for name, helptext in (("kernels", "kernel identity audits"),
                           ("picard", "Picard iteration contraction"),
                           ("profile", "far-field profile comparison")):
        q = sub.add_parser(name, help=helptext)
        _add_config_flags(q)
        q.set_defaults(func=lambda a, n=name: cmd_scenario(a, n))

    f = sub.add_parser("fit", help="fit a power law to a recorded norm column")
    f.add_argument("run_dir")
    f.add_argument("--norm", default="u.Lp:p=2")
    f.add_argument("--t1", type=float)
    f.add_argument("--t2", type=float)
    f.add_argument("--floor", type=float, default=0.99)
    f.set_defaults(func=cmd_fit)

    w = sub.add_parser("sweep", help="run one scenario over several values of a key")
    w.add_argument("--scenario", default="growth", choices=TRAJECTORY_SCENARIOS + ("picard",))
    w.add_argument("--param", required=True)
    w.add_argument("--values", required=True)
    w.add_argument("--sep", default=",", help="value separator (use ';' for norm lists)")
    w.add_argument("--workers", type=int, default=None)
    _add_config_flags(w)
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="summarize run directories")
    r.add_argument("run_dir")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
