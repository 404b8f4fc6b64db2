"""Binary snapshot files.

Layout (little-endian): 8-byte magic ``BQSNAP01``, u32 n, f64 L, f64 t, u32 field
count, then per field a 16-byte NUL-padded ASCII name followed by n^3 float64
values with x1 varying fastest.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fields import Grid3, ScalarField, VectorField

MAGIC = b"BQSNAP01"
_HEAD = struct.Struct("<8sIddI")


def _name_bytes(name: str) -> bytes:
    raw = name.encode("ascii")
    if len(raw) > 16:
        raise ValueError(f"field name {name!r} longer than 16 bytes")
    return raw.ljust(16, b"\0")


def write_snapshot(path, grid: Grid3, t: float, fields: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, grid.n, grid.L, float(t), len(fields)))
        for name, arr in fields.items():
            arr = np.asarray(arr, dtype="<f8")
            if arr.shape != grid.shape:
                raise ValueError(f"field {name!r} has shape {arr.shape}, expected {grid.shape}")
            fh.write(_name_bytes(name))
            fh.write(arr.T.tobytes())  # C order of the transpose = x1 fastest


def read_snapshot(path) -> tuple[Grid3, float, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if len(data) < _HEAD.size:
        raise ValueError(f"{path}: truncated header")
    magic, n, L, t, count = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    grid = Grid3(n, L)
    off = _HEAD.size
    nbytes = 8 * n**3
    out = {}
    for _ in range(count):
        if off + 16 + nbytes > len(data):
            raise ValueError(f"{path}: truncated field data")
        name = data[off:off + 16].rstrip(b"\0").decode("ascii")
        off += 16
        flat = np.frombuffer(data, dtype="<f8", count=n**3, offset=off)
        out[name] = flat.reshape(n, n, n).T.astype(float)
        off += nbytes
    return grid, t, out


def state_fields(u: VectorField, theta: ScalarField) -> dict[str, np.ndarray]:
    return {"u1": u.values[0], "u2": u.values[1], "u3": u.values[2], "theta": theta.values}


def fields_from(grid: Grid3, data: dict[str, np.ndarray]) -> tuple[VectorField, ScalarField]:
    u = VectorField(grid, np.stack([data["u1"], data["u2"], data["u3"]]))
    return u, ScalarField(grid, data["theta"])
