"""Uniform cell-centred grids and the field containers that live on them."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid3:
    """Cube [-L, L]^3 sampled at the n^3 cell centres ``-L + (i + 1/2) h``."""

    n: int
    L: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"half-width must be positive, got {self.L}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @cached_property
    def coords(self) -> np.ndarray:
        return -self.L + (np.arange(self.n) + 0.5) * self.h

    def axes(self):
        """Broadcastable coordinate arrays (x1, x2, x3)."""
        c = self.coords
        return c[:, None, None], c[None, :, None], c[None, None, :]

    @cached_property
    def radius(self) -> np.ndarray:
        x1, x2, x3 = self.axes()
        return np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)

    def padded(self) -> "Grid3":
        """The doubled grid with the same spacing; this box sits in its centre."""
        return Grid3(2 * self.n, 2 * self.L)

    @property
    def inner(self) -> tuple[slice, slice, slice]:
        """Index of this box inside ``self.padded()``."""
        s = slice(self.n // 2, self.n // 2 + self.n)
        return (s, s, s)

    def embed(self, values: np.ndarray) -> np.ndarray:
        """Zero-extend box values onto the padded grid (leading axes kept)."""
        big = np.zeros(values.shape[:-3] + (2 * self.n,) * 3, dtype=values.dtype)
        big[(...,) + self.inner] = values
        return big

    def crop(self, values: np.ndarray) -> np.ndarray:
        """Restrict padded-grid values back to this box."""
        return np.ascontiguousarray(values[(...,) + self.inner])


def _check_values(grid: Grid3, values: np.ndarray, lead: tuple[int, ...]) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != lead + grid.shape:
        raise ValueError(f"expected array of shape {lead + grid.shape}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field contains non-finite values")
    return values


@dataclass
class ScalarField:
    grid: Grid3
    values: np.ndarray

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values, ())

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class VectorField:
    grid: Grid3
    values: np.ndarray  # shape (3, n, n, n)

    def __post_init__(self):
        self.values = _check_values(self.grid, self.values, (3,))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.values.copy())

    def magnitude(self) -> np.ndarray:
        v = self.values
        return np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


KINDS = ("lebesgue", "weighted", "weak")
_LABEL_RE = re.compile(r"^(Lp|Lp_r|Lpw):p=([^,]+)(?:,r=(.+))?$")


@dataclass(frozen=True)
class NormDescriptor:
    """Which norm to take: plain L^p, weighted L^p_r, or weak L^p."""

    p: float
    r: float = 0.0
    kind: str = "lebesgue"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.r < 0:
            raise ValueError(f"weight exponent must be >= 0, got {self.r}")
        if self.kind == "weighted" and np.isinf(self.p):
            raise ValueError("weighted norms need finite p")
        if self.kind == "weak" and not (1 < self.p < np.inf):
            raise ValueError("weak norms need 1 < p < inf")
        if self.kind != "weighted" and self.r != 0:
            raise ValueError("only weighted norms carry a weight exponent")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "r", float(self.r))

    @property
    def label(self) -> str:
        p = _fmt(self.p)
        if self.kind == "weighted":
            return f"Lp_r:p={p},r={_fmt(self.r)}"
        if self.kind == "weak":
            return f"Lpw:p={p}"
        return f"Lp:p={p}"

    @classmethod
    def parse(cls, label: str) -> "NormDescriptor":
        m = _LABEL_RE.match(label.strip())
        if not m:
            raise ValueError(f"cannot parse norm label {label!r}")
        tag, p, r = m.groups()
        kind = {"Lp": "lebesgue", "Lp_r": "weighted", "Lpw": "weak"}[tag]
        return cls(float(p), float(r) if r is not None else 0.0, kind)


def _fmt(x: float) -> str:
    if np.isinf(x):
        return "inf"
    return f"{x:g}"


@dataclass
class NormSeries:
    """Time series of one norm; times must strictly increase."""

    descriptor: NormDescriptor
    times: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.times = [float(t) for t in self.times]
        self.values = [float(v) for v in self.values]
        if len(self.times) != len(self.values):
            raise ValueError("times and values differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if any(v < 0 for v in self.values):
            raise ValueError("norm values must be non-negative")

    def append(self, t: float, value: float) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("times must be strictly increasing")
        if value < 0:
            raise ValueError("norm values must be non-negative")
        self.times.append(float(t))
        self.values.append(float(value))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.times), np.asarray(self.values)

    def __len__(self):
        return len(self.times)
