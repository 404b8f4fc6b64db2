import numpy as np
import pytest

from boussinesq import Grid3
from boussinesq.initial import generate_initial
from boussinesq.snapshot import MAGIC, fields_from, read_snapshot, state_fields, write_snapshot


def test_snapshot_round_trip(tmp_path):
    g = Grid3(16, 12.0)
    u0, th0 = generate_initial(g, "dipole", 0.1, 1.0, "solenoidal", 0.05, 1.0)
    path = tmp_path / "s.bqsnap"
    write_snapshot(path, g, 2.5, state_fields(u0, th0))
    g2, t, data = read_snapshot(path)
    assert g2 == g and t == 2.5
    u, th = fields_from(g2, data)
    assert np.array_equal(u.values, u0.values) and np.array_equal(th.values, th0.values)
    assert path.read_bytes()[:8] == MAGIC


def test_x1_varies_fastest(tmp_path):
    g = Grid3(8, 1.0)
    a = np.zeros(g.shape)
    a[1, 0, 0] = 7.0
    path = tmp_path / "s.bqsnap"
    write_snapshot(path, g, 0.0, {"theta": a})
    body = np.frombuffer(path.read_bytes()[-8 * 8**3:], dtype="<f8")
    assert body[1] == 7.0


def test_corrupt_files_are_rejected(tmp_path):
    path = tmp_path / "bad.bqsnap"
    path.write_bytes(b"NOTASNAP" + bytes(40))
    with pytest.raises(ValueError, match="magic"):
        read_snapshot(path)
    g = Grid3(8, 1.0)
    write_snapshot(path, g, 0.0, {"theta": np.zeros(g.shape)})
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(ValueError, match="truncated"):
        read_snapshot(path)
