import numpy as np
import pytest
from hypothesis import given, strategies as st

from boussinesq import Grid3, NormDescriptor, NormSeries, ScalarField, VectorField


def test_grid_is_cell_centred():
    g = Grid3(8, 4.0)
    assert g.h == 1.0
    np.testing.assert_allclose(g.coords, np.arange(-3.5, 4.0, 1.0))
    assert not np.any(g.radius == 0)


@pytest.mark.parametrize("n, L", [(7, 1.0), (6, 1.0), (8, 0.0), (8, -1.0), (8, np.inf)])
def test_grid_rejects_bad_sizes(n, L):
    with pytest.raises(ValueError):
        Grid3(n, L)


def test_padded_grid_keeps_spacing_and_box_round_trips():
    g = Grid3(8, 2.0)
    big = g.padded()
    assert big.h == g.h and big.n == 16
    np.testing.assert_allclose(big.coords[g.inner[0]], g.coords)
    a = np.random.default_rng(0).normal(size=(3,) + g.shape)
    assert np.array_equal(g.crop(g.embed(a)), a)
    assert g.embed(a).sum() == pytest.approx(a.sum())


def test_fields_validate_shape_and_values():
    g = Grid3(8, 1.0)
    with pytest.raises(ValueError, match="shape"):
        ScalarField(g, np.zeros((8, 8, 7)))
    with pytest.raises(ValueError, match="non-finite"):
        ScalarField(g, np.full(g.shape, np.nan))
    with pytest.raises(ValueError):
        VectorField(g, np.zeros(g.shape))
    v = VectorField(g, np.ones((3,) + g.shape))
    np.testing.assert_allclose(v.magnitude(), np.sqrt(3.0))


@pytest.mark.parametrize("label", ["Lp:p=2", "Lp:p=inf", "Lp_r:p=2,r=0.5", "Lpw:p=3"])
def test_norm_label_round_trip(label):
    assert NormDescriptor.parse(label).label == label


@pytest.mark.parametrize("kw", [dict(p=0.5), dict(p=2, r=-1, kind="weighted"),
                                dict(p=np.inf, kind="weighted"), dict(p=1, kind="weak"),
                                dict(p=2, r=1), dict(p=2, kind="sobolev")])
def test_bad_descriptors(kw):
    with pytest.raises(ValueError):
        NormDescriptor(**kw)


@given(st.floats(1, 50), st.floats(0, 4))
def test_weighted_label_parses_back(p, r):
    d = NormDescriptor(p, r, "weighted")
    back = NormDescriptor.parse(d.label)
    assert back.kind == "weighted"
    assert back.p == pytest.approx(p, rel=1e-5) and back.r == pytest.approx(r, rel=1e-5, abs=1e-9)


def test_norm_series_invariants():
    s = NormSeries(NormDescriptor(2), [0, 1], [1.0, 0.5])
    s.append(2, 0.25)
    assert len(s) == 3
    with pytest.raises(ValueError):
        s.append(2, 0.1)
    with pytest.raises(ValueError):
        s.append(3, -1.0)
    with pytest.raises(ValueError):
        NormSeries(NormDescriptor(2), [1, 0], [1, 1])
