"""Experiment configuration.

Config files are flat ``key = value`` text; ``#`` starts a comment, blank lines
are ignored and unknown keys are errors.  List-valued keys take comma
separated values, except ``norms`` which separates entries with ``;`` because
norm labels contain commas.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .fields import NormDescriptor

SCENARIOS = ("zero", "growth", "zero_mean_decay", "theta_rates", "fourier_splitting", "profile",
             "weighted_sweep", "tail", "picard", "mollified", "kernels")

OUTPUT_ENV = "BQ_OUTPUT_ROOT"

DEFAULT_NORMS = ("u.Lp:p=2", "theta.Lp:p=2")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _norms(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(";") if v.strip())


@dataclass
class ExperimentConfig:
    scenario: str = "growth"
    # grid: n^3 nodes on [-L, L]^3
    n: int = 64
    L: float = 64.0
    T: float = 80.0
    dt: float = 1.0
    snapshot_stride: int = 0          # 0: use snapshot_times
    snapshot_times: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 20.0, 25.0, 50.0, 80.0)
    # initial data
    theta: str = "gaussian"
    theta_amplitude: float = 0.025
    theta_width: float = 1.0
    u: str = "zero"
    u_amplitude: float = 0.01
    u_width: float = 8.0
    separation: float = 2.0
    norms: tuple[str, ...] = DEFAULT_NORMS
    # diagnostics
    case: str = "nonzero_mean"
    k: float = 3.5
    A: float = 6.0
    profile_t: float = 25.0
    fit_t1: float | None = None
    fit_t2: float | None = None
    a: float = 2.0
    b: float = 4.0
    epsilon: float = 0.05
    containment_floor: float = 0.99
    picard_iterations: int = 6
    mollify_delta: float = 0.5
    nonlinear: bool = True
    buoyancy: bool = True
    seed: int = 0
    output: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        for name in ("n", "L", "T", "dt", "theta_width", "u_width", "separation", "k", "A",
                     "profile_t", "epsilon", "picard_iterations", "mollify_delta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("theta_amplitude", "u_amplitude", "snapshot_stride", "seed"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.case not in ("nonzero_mean", "zero_mean"):
            raise ValueError("case must be nonzero_mean or zero_mean")
        if not 0 < self.containment_floor <= 1:
            raise ValueError("containment_floor must lie in (0, 1]")
        if (self.fit_t1 is None) != (self.fit_t2 is None):
            raise ValueError("give both fit_t1 and fit_t2 or neither")
        if self.fit_t1 is not None and not 0 <= self.fit_t1 < self.fit_t2:
            raise ValueError("fit window needs 0 <= fit_t1 < fit_t2")
        for label in self.norms:
            field_name, _, norm_label = label.partition(".")
            if field_name not in ("u", "theta"):
                raise ValueError(f"norm {label!r} must start with 'u.' or 'theta.'")
            NormDescriptor.parse(norm_label)

    @property
    def descriptors(self):
        out = []
        for label in self.norms:
            name, _, rest = label.partition(".")
            out.append((name, NormDescriptor.parse(rest)))
        return out

    @property
    def fit_window(self):
        return None if self.fit_t1 is None else (self.fit_t1, self.fit_t2)

    def output_dir(self) -> Path:
        if self.output:
            return Path(self.output)
        return Path(os.environ.get(OUTPUT_ENV, "runs")) / self.scenario

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        for key, val in d.items():
            if isinstance(val, tuple):
                d[key] = list(val)
        return d


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _convert(key: str, text: str):
    f = _FIELDS[key]
    default = f.default if f.default is not dataclasses.MISSING else None
    text = text.strip()
    if key == "norms":
        return _norms(text)
    if key == "snapshot_times":
        return _floats(text)
    if key in ("fit_t1", "fit_t2", "output"):
        if text.lower() in ("", "none"):
            return None
        return text if key == "output" else float(text)
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def parse_pairs(pairs: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    unknown = sorted(set(pairs) - set(_FIELDS))
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    changes = {}
    for key, text in pairs.items():
        try:
            changes[key] = _convert(key, text)
        except ValueError as exc:
            raise ValueError(f"bad value for {key!r}: {exc}") from None
    base = base or ExperimentConfig()
    return base.replace(**changes)


def read_pairs(text: str) -> dict[str, str]:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        pairs[key.strip()] = value.strip()
    return pairs


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_pairs(read_pairs(Path(path).read_text()), base)
