"""Heat, Oseen and fundamental-solution kernels.

The Oseen kernel K (kernel of e^{t Lap} P) is rotation covariant, so at t = 1

    K(x) = A(rho) I + B(rho) xhat xhat^T,    rho = |x|,

and the two radial profiles follow from the symbol by a one-dimensional
Hankel-type quadrature with spherical Bessel functions.  Profiles and their
radial derivatives are tabulated once on a uniform rho grid, cached on disk and
interpolated with cubic splines; other times follow from the parabolic scaling
K(x, t) = t^{-3/2} K(x / sqrt(t), 1) and grad K(x, t) = t^{-2} grad K(x / sqrt(t), 1).
"""

from __future__ import annotations

import enum
import os
import struct
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erf, spherical_jn

FOUR_PI = 4.0 * np.pi


class KernelId(str, enum.Enum):
    heat = "heat"
    oseen_K = "oseen_K"
    oseen_grad_F = "oseen_grad_F"
    heat_grad_Ftilde = "heat_grad_Ftilde"
    E_second = "E_second"
    E_third = "E_third"


class KernelAccuracyWarning(UserWarning):
    """Evaluation fell outside the tabulated range and used the far-field form."""


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (3,):
        raise ValueError("points must have a trailing axis of length 3")
    return x


def _check_t(t):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("kernel time must be positive")


def heat_kernel_eval(x, t):
    """g_t(x) = (4 pi t)^{-3/2} exp(-|x|^2 / 4t)."""
    _check_t(t)
    x = _as_points(x)
    r2 = np.sum(x * x, axis=-1)
    return (FOUR_PI * t) ** -1.5 * np.exp(-r2 / (4.0 * t))


def heat_grad_eval(x, t):
    """grad g_t(x) = -x g_t(x) / (2t)."""
    x = _as_points(x)
    return -x * (heat_kernel_eval(x, t) / (2.0 * t))[..., None]


def _nonzero(x):
    x = _as_points(x)
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0):
        raise ValueError("fundamental-solution derivatives are singular at x = 0")
    return x, r


def fundamental_second(x):
    """Second derivatives of E = 1/(4 pi |x|)."""
    x, r = _nonzero(x)
    eye = np.eye(3)
    xx = x[..., :, None] * x[..., None, :]
    r2 = (r * r)[..., None, None]
    return (3.0 * xx - eye * r2) / (FOUR_PI * r[..., None, None] ** 5)


def fundamental_third(x):
    """Third derivatives of E = 1/(4 pi |x|)."""
    x, r = _nonzero(x)
    eye = np.eye(3)
    sigma = (eye[:, :, None] * x[..., None, None, :]
             + eye[None, :, :] * x[..., :, None, None]
             + eye[:, None, :] * x[..., None, :, None])
    xxx = x[..., :, None, None] * x[..., None, :, None] * x[..., None, None, :]
    r2 = (r * r)[..., None, None, None]
    return 3.0 / FOUR_PI * (sigma * r2 - 5.0 * xxx) / r[..., None, None, None] ** 7


# ---------------------------------------------------------------------------
# radial profile tables

RHO_MAX = 16.0
TABLE_LENGTH = 3201
XI_CUT = 1.6          # exp(-4 pi^2 xi^2) < 1e-43 beyond this
QUAD_NODES = 400

_MAGIC = b"BQKERN01"
_HEAD = struct.Struct("<8sId")


def _bessel_parts(z):
    j0 = spherical_jn(0, z)
    j1 = spherical_jn(1, z)
    j2 = spherical_jn(2, z)
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    j1z = np.where(small, 1.0 / 3.0 - z * z / 30.0, j1 / zs)
    j2z = np.where(small, z / 15.0, j2 / zs)
    return j0, j1, j2, j1z, j2z


def compute_profiles(rho: np.ndarray, nodes: int = QUAD_NODES):
    """A, B, A', B' at t = 1 by Gauss-Legendre quadrature in |xi|."""
    s, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * XI_CUT * (s + 1.0)
    w = 0.5 * XI_CUT * w * FOUR_PI * s * s * np.exp(-4.0 * np.pi**2 * s * s)
    rho = np.asarray(rho, dtype=float)
    out = np.empty((4, rho.size))
    for lo in range(0, rho.size, 256):
        r = rho.ravel()[lo:lo + 256]
        z = 2.0 * np.pi * r[:, None] * s[None, :]
        j0, j1, j2, j1z, j2z = _bessel_parts(z)
        ks = 2.0 * np.pi * s[None, :]
        out[0, lo:lo + 256] = (j0 - j1z) @ w
        out[1, lo:lo + 256] = j2 @ w
        out[2, lo:lo + 256] = (ks * (-j1 + j2z)) @ w
        out[3, lo:lo + 256] = (ks * (j1 - 3.0 * j2z)) @ w
    return out.reshape((4,) + rho.shape)


@dataclass
class KernelTable:
    rho_max: float
    profiles: np.ndarray  # rows: A, B, A', B'
    _splines: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        rho = self.rho
        self._splines = [CubicSpline(rho, row) for row in self.profiles]

    @property
    def length(self) -> int:
        return self.profiles.shape[1]

    @property
    def rho(self) -> np.ndarray:
        return np.linspace(0.0, self.rho_max, self.length)

    @classmethod
    def build(cls, rho_max: float = RHO_MAX, length: int = TABLE_LENGTH) -> "KernelTable":
        rho = np.linspace(0.0, rho_max, length)
        return cls(rho_max, compute_profiles(rho))

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "wb") as fh:
            fh.write(_HEAD.pack(_MAGIC, self.length, self.rho_max))
            fh.write(np.asarray(self.profiles, dtype="<f8").tobytes())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "KernelTable":
        data = Path(path).read_bytes()
        magic, length, rho_max = _HEAD.unpack_from(data, 0)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a kernel table")
        need = _HEAD.size + 4 * 8 * length
        if len(data) != need:
            raise ValueError(f"{path}: expected {need} bytes, found {len(data)}")
        prof = np.frombuffer(data, dtype="<f8", offset=_HEAD.size).reshape(4, length).copy()
        return cls(rho_max, prof)

    def evaluate(self, rho):
        """Profiles at radii rho; beyond the table the far-field forms are used."""
        rho = np.asarray(rho, dtype=float)
        inside = rho <= self.rho_max
        out = np.empty((4,) + rho.shape)
        ri = np.where(inside, rho, 0.0)
        for i, sp in enumerate(self._splines):
            out[i] = sp(ri)
        if not np.all(inside):
            warnings.warn(
                f"kernel evaluated beyond tabulated radius {self.rho_max}; "
                "using the far-field form (relative error below 1e-12)",
                KernelAccuracyWarning, stacklevel=3)
            ro = np.where(inside, 1.0, rho)
            far = np.stack([-1.0 / (FOUR_PI * ro**3), 3.0 / (FOUR_PI * ro**3),
                            3.0 / (FOUR_PI * ro**4), -9.0 / (FOUR_PI * ro**4)])
            out = np.where(inside, out, far)
        return out


def cache_path() -> Path:
    env = os.environ.get("BQ_KERNEL_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "boussinesq" / "kernel_table.bin"


@lru_cache(maxsize=1)
def kernel_table() -> KernelTable:
    """Load the cached table, rebuilding it when absent or unreadable."""
    path = cache_path()
    try:
        tab = KernelTable.load(path)
        if tab.length == TABLE_LENGTH and tab.rho_max == RHO_MAX:
            return tab
    except (OSError, ValueError, struct.error):
        pass
    tab = KernelTable.build()
    try:
        tab.save(path)
    except OSError:
        pass  # read-only home: keep the in-memory table
    return tab


def _scaled(x, t):
    _check_t(t)
    x = _as_points(x)
    st = np.sqrt(np.asarray(t, dtype=float))
    y = x / st[..., None]
    rho = np.linalg.norm(y, axis=-1)
    safe = np.where(rho > 0, rho, 1.0)
    xhat = y / safe[..., None]
    xhat = np.where((rho > 0)[..., None], xhat, 0.0)
    return y, rho, xhat


def oseen_eval(x, t):
    """K(x, t), kernel of e^{t Lap} P, shape (..., 3, 3)."""
    _, rho, xh = _scaled(x, t)
    A, B, _, _ = kernel_table().evaluate(rho)
    K = A[..., None, None] * np.eye(3) + B[..., None, None] * xh[..., :, None] * xh[..., None, :]
    return K * np.asarray(t, dtype=float)[..., None, None] ** -1.5


def oseen_grad_eval(x, t):
    """F[j, k, l] = d_l K_jk (x, t), shape (..., 3, 3, 3)."""
    _, rho, xh = _scaled(x, t)
    A, B, dA, dB = kernel_table().evaluate(rho)
    safe = np.where(rho > 0, rho, 1.0)
    b_over = np.where(rho > 0, B / safe, 0.0)
    eye = np.eye(3)
    xj = xh[..., :, None, None]
    xk = xh[..., None, :, None]
    xl = xh[..., None, None, :]
    F = (dA[..., None, None, None] * xl * eye[:, :, None]
         + dB[..., None, None, None] * xj * xk * xl
         + b_over[..., None, None, None] * (eye[:, None, :] * xk + eye[None, :, :] * xj
                                             - 2.0 * xj * xk * xl))
    return F * np.asarray(t, dtype=float)[..., None, None, None] ** -2.0


def oseen_closed_form(x, t):
    """K(x, t) = g_t I + Hess(E * g_t) from the erf potential, away from the origin.

    Independent of the tables; used to audit them.
    """
    _check_t(t)
    x, r = _nonzero(x)
    t = np.asarray(t, dtype=float)
    a = np.exp(-r * r / (4.0 * t)) / np.sqrt(np.pi * t)
    e = erf(r / (2.0 * np.sqrt(t)))
    d1 = (a / r - e / r**2) / FOUR_PI                      # Phi'
    d2 = (-a / (2.0 * t) - 2.0 * a / r**2 + 2.0 * e / r**3) / FOUR_PI   # Phi''
    xh = x / r[..., None]
    xx = xh[..., :, None] * xh[..., None, :]
    eye = np.eye(3)
    g = heat_kernel_eval(x, t)
    return (g[..., None, None] * eye + d2[..., None, None] * xx
            + (d1 / r)[..., None, None] * (eye - xx))


def residual_psi(y):
    """|y|^3 (K(y, 1) - E''(y))."""
    y, r = _nonzero(y)
    return r[..., None, None] ** 3 * (oseen_eval(y, 1.0) - fundamental_second(y))


def residual_psi_grad(y):
    """|y|^4 (grad K(y, 1) - E'''(y))."""
    y, r = _nonzero(y)
    return r[..., None, None, None] ** 4 * (oseen_grad_eval(y, 1.0) - fundamental_third(y))


# ---------------------------------------------------------------------------
# envelope audits

# admissible spatial exponents and the total homogeneity degree d, so the
# bound reads |k(x,t)| <= C |x|^-eta t^-(d - eta)/2
_ENVELOPE = {
    KernelId.heat: (0.0, np.inf, 3.0),
    KernelId.oseen_K: (0.0, 3.0, 3.0),
    KernelId.oseen_grad_F: (0.0, 4.0, 4.0),
    KernelId.heat_grad_Ftilde: (0.0, np.inf, 4.0),
}


def cube_directions() -> np.ndarray:
    """The 26 face, edge and corner directions of the cube, normalized."""
    d = np.array([(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)
                  if (i, j, k) != (0, 0, 0)], dtype=float)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@dataclass
class SampleSet:
    radii: np.ndarray          # in units of sqrt(t)
    times: np.ndarray
    directions: np.ndarray

    @classmethod
    def default(cls, n_radii: int = 24, times=(0.25, 1.0, 4.0)) -> "SampleSet":
        return cls(np.geomspace(0.5, 8.0, n_radii), np.asarray(times, float), cube_directions())

    def describe(self) -> str:
        return (f"{self.radii.size} log-spaced radii in [{self.radii[0]:g}, {self.radii[-1]:g}]*sqrt(t) "
                f"x {len(self.directions)} directions x times {list(map(float, self.times))}")


@dataclass
class EnvelopeReport:
    kernel: KernelId
    eta: float
    C: float
    samples: str
    max_violation: float

    def to_dict(self):
        return {"kernel": self.kernel.value, "eta": self.eta, "constants": {"C": self.C},
                "samples": self.samples, "violations": self.max_violation}


def kernel_values(kernel: KernelId, x, t):
    kernel = KernelId(kernel)
    if kernel is KernelId.heat:
        return heat_kernel_eval(x, t)
    if kernel is KernelId.oseen_K:
        return oseen_eval(x, t)
    if kernel is KernelId.oseen_grad_F:
        return oseen_grad_eval(x, t)
    if kernel is KernelId.heat_grad_Ftilde:
        return heat_grad_eval(x, t)
    if kernel is KernelId.E_second:
        return fundamental_second(x)
    return fundamental_third(x)


def _pointwise_size(vals):
    vals = np.asarray(vals)
    if vals.ndim == 0:
        return np.abs(vals)
    return np.sqrt(np.sum(vals.reshape(vals.shape[:1] + (-1,)) ** 2, axis=-1)) \
        if vals.ndim > 1 else np.abs(vals)


def envelope_audit(kernel: KernelId, eta: float, samples: SampleSet | None = None) -> EnvelopeReport:
    """Smallest C with |k(x,t)| <= C |x|^-eta t^-(d-eta)/2 over the sample set.

    Tensor kernels are measured in the Frobenius norm.
    """
    kernel = KernelId(kernel)
    if kernel not in _ENVELOPE:
        raise ValueError(f"{kernel.value} is time independent; no envelope audit")
    lo, hi, d = _ENVELOPE[kernel]
    if not (lo <= eta <= hi):
        raise ValueError(f"eta={eta} outside the admissible range [{lo}, {hi}] for {kernel.value}")
    samples = samples or SampleSet.default()
    scaled = []
    for t in samples.times:
        pts = (samples.radii[:, None, None] * np.sqrt(t)) * samples.directions[None, :, :]
        pts = pts.reshape(-1, 3)
        vals = kernel_values(kernel, pts, t)
        size = _pointwise_size(vals) if kernel is not KernelId.heat else np.abs(vals)
        r = np.linalg.norm(pts, axis=-1)
        scaled.append(size * r**eta * t ** ((d - eta) / 2.0))
    scaled = np.concatenate(scaled)
    C = float(np.max(scaled))
    viol = float(np.max(scaled / C) - 1.0) if C > 0 else 0.0
    return EnvelopeReport(kernel, float(eta), C, samples.describe(), viol)


# exponent of the far-field power of the Frobenius norm, used for the tail
_FAR_DEGREE = {KernelId.oseen_K: 3, KernelId.oseen_grad_F: 4}


def kernel_lp_norm(kernel: KernelId, p: float, t: float, nodes: int = 200) -> float:
    """L^p norm in x of a kernel at time t (Frobenius norm for tensors).

    Radial Gauss-Legendre quadrature along a fixed direction (all kernels here
    have radial Frobenius norms), plus the exact homogeneous tail beyond the
    tabulated range for the Oseen kernels.
    """
    kernel = KernelId(kernel)
    _check_t(t)
    if not (1 <= p < np.inf):
        raise ValueError("p must be finite and >= 1")
    st = np.sqrt(t)
    R = RHO_MAX * st
    edges = np.r_[0.0, np.geomspace(0.05, RHO_MAX, 12)] * st
    total = 0.0
    tail_coeff = None
    for a, b in zip(edges[:-1], edges[1:]):
        s, w = np.polynomial.legendre.leggauss(nodes // 4)
        r = 0.5 * (b - a) * (s + 1.0) + a
        w = 0.5 * (b - a) * w
        pts = r[:, None] * np.array([0.0, 0.0, 1.0])
        size = _pointwise_size(kernel_values(kernel, pts, t))
        total += float(np.sum(w * FOUR_PI * r * r * size**p))
    if kernel in _FAR_DEGREE:
        m = _FAR_DEGREE[kernel]
        if m * p <= 3:
            return np.inf
        probe = np.array([[0.0, 0.0, 1.0]])
        c = float(_pointwise_size(kernel_values(
            KernelId.E_second if m == 3 else KernelId.E_third, probe, t))[0])
        tail_coeff = c
        total += FOUR_PI * tail_coeff**p * R ** (3 - m * p) / (m * p - 3)
    return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# identity audits

@dataclass
class KernelAuditReport:
    samples: int
    trace_error: float          # max |tr K - 2 g_t| / (2 g_t)
    scaling_K: float            # max relative deviation from K(lx, l^2 t) = l^-3 K(x, t)
    scaling_F: float            # same for grad K with l^-4
    closed_form_error: float    # tables against the erf closed form, relative to |K|
    psi_ratios: np.ndarray      # |Psi(4 d)| / |Psi(d)| per cube direction

    def to_dict(self):
        return {"samples": self.samples, "trace_error": self.trace_error,
                "scaling_K": self.scaling_K, "scaling_F": self.scaling_F,
                "closed_form_error": self.closed_form_error,
                "psi_ratio_max": float(np.max(self.psi_ratios)),
                "psi_ratios": [float(v) for v in self.psi_ratios]}


def _rel_err(a, b):
    scale = np.max(np.abs(b).reshape(b.shape[0], -1), axis=1)
    diff = np.max(np.abs(a - b).reshape(b.shape[0], -1), axis=1)
    return float(np.max(diff / scale))


def kernel_identity_audit(samples: int = 100, seed: int = 0, rho_max: float = 4.0) -> KernelAuditReport:
    """Trace identity, parabolic scaling and far-field residual decay of the Oseen tables.

    Points are drawn with |x| / sqrt(t) uniform in [0.05, rho_max] and t
    log-uniform in [0.1, 10]; beyond a few sqrt(t) the relative trace error
    is dominated by the vanishing heat kernel, not by the tables.
    """
    rng = np.random.default_rng(seed)
    t = np.exp(rng.uniform(np.log(0.1), np.log(10.0), samples))
    d = rng.normal(size=(samples, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    rho = rng.uniform(0.05, rho_max, samples)
    x = d * (rho * np.sqrt(t))[:, None]
    lam = rng.uniform(0.5, 2.0, samples)
    K = oseen_eval(x, t)
    tr = np.trace(K, axis1=-2, axis2=-1)
    g2 = 2.0 * heat_kernel_eval(x, t)
    trace_error = float(np.max(np.abs(tr - g2) / g2))
    Ks = oseen_eval(lam[:, None] * x, lam**2 * t)
    F = oseen_grad_eval(x, t)
    Fs = oseen_grad_eval(lam[:, None] * x, lam**2 * t)
    scaling_K = _rel_err(Ks * lam[:, None, None] ** 3, K)
    scaling_F = _rel_err(Fs * lam[:, None, None, None] ** 4, F)
    closed = _rel_err(K, oseen_closed_form(x, t))
    dirs = cube_directions()
    near = np.linalg.norm(residual_psi(dirs), axis=(-2, -1))
    far = np.linalg.norm(residual_psi(4.0 * dirs), axis=(-2, -1))
    return KernelAuditReport(samples, trace_error, scaling_K, scaling_F, closed, far / near)
