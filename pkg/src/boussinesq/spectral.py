"""Spectral operators on cell-centred grids.

Two modes are supported everywhere.  In free-space mode (the default) box data
is zero-extended to the doubled grid before transforming and the result is
cropped back, so symbol products act as linear (non-periodic) convolutions for
data supported in the box.  In periodic mode the grid is used as is; the
solver works this way on its already padded computational grid, and algebraic
identities (idempotence, symmetry) hold to round-off there.

Transforms follow ``f_hat(xi) = int f(x) exp(-2 pi i x.xi) dx``, so ``xi`` is in
cycles per unit length and the heat symbol is ``exp(-4 pi^2 |xi|^2 t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .fields import Grid3, ScalarField, VectorField


class Symbols:
    """Frequency arrays for the rfft layout of an ``N^3`` grid with spacing h."""

    def __init__(self, N: int, h: float):
        self.N = N
        self.h = h
        kf = sfft.fftfreq(N, d=h)
        kr = sfft.rfftfreq(N, d=h)
        self.xi = (kf[:, None, None], kf[None, :, None], kr[None, None, :])
        self.xi2 = self.xi[0] ** 2 + self.xi[1] ** 2 + self.xi[2] ** 2
        self.lam = 4.0 * np.pi**2 * self.xi2  # heat symbol rate

        # derivative wavenumbers with the Nyquist planes removed: an odd
        # symbol there cannot act on a real field
        def strip(k):
            k = k.copy()
            k[np.isclose(np.abs(k), 0.5 / h)] = 0.0
            return k

        self.k = tuple(2.0 * np.pi * strip(x) for x in self.xi)
        k2 = self.k[0] ** 2 + self.k[1] ** 2 + self.k[2] ** 2
        with np.errstate(divide="ignore"):
            self.inv_k2 = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
        self.k2 = k2

        # 2/3-rule mask on integer mode numbers
        mf = np.abs(sfft.fftfreq(N, d=1.0 / N))
        mr = sfft.rfftfreq(N, d=1.0 / N)
        cut = N / 3.0
        self.dealias = (
            (mf[:, None, None] < cut) & (mf[None, :, None] < cut) & (mr[None, None, :] < cut)
        )

        # column of the projector applied to e3: P e3 = e3 - k k3 / |k|^2
        self.pe3 = (
            -self.k[0] * self.k[2] * self.inv_k2,
            -self.k[1] * self.k[2] * self.inv_k2,
            1.0 - self.k[2] ** 2 * self.inv_k2,
        )

    @property
    def shape(self):
        return self.xi2.shape

    def parseval(self, a: np.ndarray, b: np.ndarray | None = None) -> float:
        """h^3 sum f g over the grid, from raw rfft coefficients (last axis halved)."""
        b = a if b is None else b
        s = 2.0 * np.vdot(a, b).real
        # the k3 = 0 and Nyquist planes appear once in the half spectrum
        s -= np.vdot(a[..., 0], b[..., 0]).real
        if self.N % 2 == 0:
            s -= np.vdot(a[..., -1], b[..., -1]).real
        return float(s) * self.h**3 / self.N**3


@lru_cache(maxsize=8)
def symbols(N: int, h: float) -> Symbols:
    return Symbols(N, h)


def fft3(a: np.ndarray) -> np.ndarray:
    return sfft.rfftn(a, axes=(-3, -2, -1))


def ifft3(a: np.ndarray, N: int) -> np.ndarray:
    return sfft.irfftn(a, s=(N, N, N), axes=(-3, -2, -1))


def leray(S: Symbols, vh: np.ndarray) -> np.ndarray:
    """Apply I - k k^T / |k|^2 (identity at k = 0) to stacked coefficients."""
    k = S.k
    kv = (k[0] * vh[0] + k[1] * vh[1] + k[2] * vh[2]) * S.inv_k2
    return np.stack([vh[i] - k[i] * kv for i in range(3)])


def div_hat(S: Symbols, vh: np.ndarray) -> np.ndarray:
    k = S.k
    return 1j * (k[0] * vh[0] + k[1] * vh[1] + k[2] * vh[2])


@dataclass
class SpectralField:
    """Raw transform of a box field.

    ``coeffs`` holds ``h^3 * DFT`` of the (padded, unless ``periodic``) samples,
    in rfft layout with a leading component axis.  These equal the continuous
    transform up to the phase ``exp(-2 pi i x0.xi)``, where ``x0`` is the first
    node of the transformed grid; ``continuous()`` applies that phase.
    """

    grid: Grid3
    coeffs: np.ndarray
    periodic: bool = False
    vector: bool = False

    @property
    def work_grid(self) -> Grid3:
        return self.grid if self.periodic else self.grid.padded()

    @property
    def symbols(self) -> Symbols:
        g = self.work_grid
        return symbols(g.n, g.h)

    def continuous(self) -> np.ndarray:
        S = self.symbols
        x0 = self.work_grid.coords[0]
        phase = (np.exp(-2j * np.pi * x0 * S.xi[0])
                 * np.exp(-2j * np.pi * x0 * S.xi[1])
                 * np.exp(-2j * np.pi * x0 * S.xi[2]))
        return self.coeffs * phase


def _values(f) -> tuple[np.ndarray, bool]:
    if isinstance(f, VectorField):
        return f.values, True
    if isinstance(f, ScalarField):
        return f.values[None], False
    raise TypeError(f"expected ScalarField or VectorField, got {type(f).__name__}")


def _wrap(grid: Grid3, values: np.ndarray, vector: bool):
    return VectorField(grid, values) if vector else ScalarField(grid, values[0])


def spectral_transform(f, direction: str = "forward", periodic: bool = False):
    """Forward: field -> SpectralField.  Inverse: SpectralField -> field."""
    if direction == "forward":
        vals, vector = _values(f)
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite values in field passed to spectral_transform")
        g = f.grid
        work = vals if periodic else g.embed(vals)
        return SpectralField(g, fft3(work) * g.h**3, periodic=periodic, vector=vector)
    if direction == "inverse":
        if not isinstance(f, SpectralField):
            raise TypeError("inverse transform expects a SpectralField")
        g = f.grid
        work = ifft3(f.coeffs / g.h**3, f.work_grid.n)
        vals = work if f.periodic else g.crop(work)
        return _wrap(g, vals, f.vector)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def _apply(f, op, periodic: bool, out_vector: bool | None = None):
    """Transform, hand raw coefficients and symbols to ``op``, transform back."""
    vals, vector = _values(f)
    g = f.grid
    work_grid = g if periodic else g.padded()
    S = symbols(work_grid.n, work_grid.h)
    coef = fft3(vals if periodic else g.embed(vals))
    out = op(S, coef)
    back = ifft3(out, work_grid.n)
    if not periodic:
        back = g.crop(back)
    if out_vector is None:
        out_vector = vector
    return _wrap(g, back, out_vector)


def heat_propagate(f, t: float, periodic: bool = False):
    """Apply the heat semigroup e^{t Laplacian}."""
    if t < 0:
        raise ValueError(f"heat flow needs t >= 0, got {t}")
    if t == 0:
        return f.copy()
    return _apply(f, lambda S, c: c * np.exp(-S.lam * t), periodic)


def leray_project(v: VectorField, periodic: bool = False) -> VectorField:
    if not isinstance(v, VectorField):
        raise TypeError("leray_project expects a VectorField")
    return _apply(v, leray, periodic)


def divergence(v: VectorField, periodic: bool = False) -> ScalarField:
    if not isinstance(v, VectorField):
        raise TypeError("divergence expects a VectorField")
    return _apply(v, lambda S, c: div_hat(S, c)[None], periodic, out_vector=False)


def gradient(f: ScalarField, periodic: bool = False) -> VectorField:
    return _apply(f, lambda S, c: np.stack([1j * k * c[0] for k in S.k]), periodic, out_vector=True)


def curl(v: VectorField, periodic: bool = False) -> VectorField:
    def op(S, c):
        k = S.k
        return 1j * np.stack([k[1] * c[2] - k[2] * c[1],
                              k[2] * c[0] - k[0] * c[2],
                              k[0] * c[1] - k[1] * c[0]])
    return _apply(v, op, periodic)


def _pressure_spectra(u: VectorField, theta: ScalarField, dealias: bool, periodic: bool):
    if u.grid != theta.grid:
        raise ValueError("velocity and temperature live on different grids")
    g = u.grid
    wg = g if periodic else g.padded()
    S = symbols(wg.n, wg.h)
    lift = (lambda a: a) if periodic else g.embed
    uu = [lift(u.values[i]) for i in range(3)]
    mask = S.dealias if dealias else 1.0
    # source of -Delta p1 = d_i d_j (u_i u_j), summed over the six distinct pairs
    src1 = np.zeros(S.shape, dtype=complex)
    for i in range(3):
        for j in range(i, 3):
            pij = fft3(uu[i] * uu[j]) * mask
            w = 1.0 if i == j else 2.0
            src1 += w * (-S.k[i] * S.k[j]) * pij
    th = fft3(lift(theta.values))
    src2 = 1j * S.k[2] * th
    # Delta p = src  ->  -|k|^2 p_hat = src_hat
    p1 = -src1 * S.inv_k2
    p2 = -src2 * S.inv_k2
    return S, wg, p1, p2, src1, src2


def pressure_recover(u: VectorField, theta: ScalarField, dealias: bool = True,
                     periodic: bool = False) -> tuple[ScalarField, ScalarField]:
    """Solve Delta p1 = -d_i d_j (u_i u_j) and Delta p2 = d_3 theta (zero mean)."""
    S, wg, p1, p2, _, _ = _pressure_spectra(u, theta, dealias, periodic)
    out = []
    for ph in (p1, p2):
        back = ifft3(ph, wg.n)
        out.append(ScalarField(u.grid, back if periodic else u.grid.crop(back)))
    return out[0], out[1]


def pressure_residuals(u: VectorField, theta: ScalarField, dealias: bool = True,
                       periodic: bool = False) -> tuple[float, float]:
    """Relative spectral residuals of both Poisson problems (zero mode excluded)."""
    S, _, p1, p2, src1, src2 = _pressure_spectra(u, theta, dealias, periodic)
    nz = S.k2 > 0
    res = []
    for ph, src in ((p1, src1), (p2, src2)):
        r = (-S.k2 * ph - src)[nz]
        scale = np.max(np.abs(src[nz])) if np.any(src[nz]) else 1.0
        res.append(float(np.max(np.abs(r)) / scale))
    return res[0], res[1]
