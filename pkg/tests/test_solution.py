import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holderlab.solution import GridSolution, ball_volume, cell_window_average, line_segments, window_pieces


def _sol(shape=(8,), nt=2, seed=0, **kw):
    rng = np.random.default_rng(seed)
    return GridSolution(rng.uniform(0, 1, (nt, *shape)), np.linspace(0, 1, nt), 1.0, **kw)


def test_basic_properties():
    s = _sol((16, 16), nt=3)
    assert s.d == 2 and s.shape == (16, 16) and s.nt == 3
    assert s.dx == pytest.approx(1 / 16)
    assert s.dt == pytest.approx(0.5)
    np.testing.assert_allclose(s.centers(1)[:2], [1 / 32, 3 / 32])
    assert s.time_index(0.5) == 1
    with pytest.raises(ValueError):
        s.time_index(0.3)
    with pytest.raises(IndexError):
        s.slice(3)


def test_rejects_out_of_range_values():
    with pytest.raises(ValueError, match="leave"):
        GridSolution(np.full((1, 4), 1.1), [0.0], 1.0)
    # rounding-level excursions are tolerated
    GridSolution(np.full((1, 4), 1 + 1e-13), [0.0], 1.0)


def test_rejects_anisotropic_step():
    with pytest.raises(ValueError, match="non-uniform"):
        GridSolution(np.zeros((1, 4, 8)), [0.0], (1.0, 1.0))


@settings(max_examples=20, deadline=None)
@given(d=st.integers(1, 3), n=st.integers(2, 6), nt=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_save_load_roundtrip(tmp_path_factory, d, n, nt, seed):
    s = _sol((n,) * d, nt=nt, seed=seed, origin=-0.5, meta={"flux": {"kind": "burgers_family", "d": d}})
    path = s.save(tmp_path_factory.mktemp("io") / "sol.bin")
    r = GridSolution.load(path)
    np.testing.assert_array_equal(r.data, s.data)
    np.testing.assert_array_equal(r.times, s.times)
    assert r.origin == s.origin and r.extents == s.extents and r.meta == s.meta


def test_load_rejects_bad_files(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"garbage!")
    with pytest.raises(ValueError, match="not a solution"):
        GridSolution.load(p)
    _sol((8,)).save(p)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError, match="truncated"):
        GridSolution.load(p)


def test_line_segments_cover_interval():
    vals = np.linspace(0, 1, 10)
    ua, ub, ln = line_segments(vals, 0.0, 0.1, 0.23, 0.71)
    assert ln.sum() == pytest.approx(0.48)


def test_line_segments_reproduce_linear_field():
    x = (np.arange(10) + 0.5) / 10
    ua, ub, ln = line_segments(x, 0.0, 0.1, 0.23, 0.71)
    keep = ln > 0
    assert ua[keep][0] == pytest.approx(0.23)
    assert ub[keep][-1] == pytest.approx(0.71)
    np.testing.assert_allclose(ub[keep] - ua[keep], ln[keep])


def test_window_pieces_measure():
    u = np.zeros((32, 32))
    for geom, vol in (("cube", 0.25**2 * 4), ("ball", np.pi * 0.25**2)):
        _, _, w = window_pieces(u, (0, 0), 1 / 32, (0.5, 0.5), 0.25, geom)
        assert w.sum() == pytest.approx(vol, rel=0.05 if geom == "ball" else 1e-12)


def test_ball_volume():
    assert ball_volume(1, 2.0) == pytest.approx(4.0)
    assert ball_volume(2, 1.0) == pytest.approx(np.pi)
    assert ball_volume(3, 1.0) == pytest.approx(4 * np.pi / 3)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(8, 64), k=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_cell_window_average_matches_direct_sum(n, k, seed):
    vals = np.random.default_rng(seed).uniform(0, 1, n)
    dx = 1 / n
    out = cell_window_average(vals, dx, k * dx)
    # window around vertex i covers cells i-k .. i+k-1
    direct = np.array([vals[np.arange(i - k, i + k) % n].mean() for i in range(n)])
    np.testing.assert_allclose(out, direct, atol=1e-13)


def test_cell_window_average_fractional_radius():
    vals = np.array([0.0, 1.0, 0.0, 0.0])
    out = cell_window_average(vals, 1.0, 0.5)
    np.testing.assert_allclose(out, [0.0, 0.5, 0.5, 0.0])
