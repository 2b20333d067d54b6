import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llgflow import GridSpec, read_field, write_field


def test_real_roundtrip(tmp_path, grid3):
    rng = np.random.default_rng(0)
    m = rng.standard_normal((3,) + grid3.shape)
    path = tmp_path / "m.llgf"
    write_field(path, m, grid3)
    back, g = read_field(path, kind="real")
    assert g == grid3
    assert back.dtype == np.float64
    np.testing.assert_array_equal(back, m)


def test_complex_roundtrip(tmp_path, grid2):
    rng = np.random.default_rng(1)
    u = rng.standard_normal((2,) + grid2.shape) + 1j * rng.standard_normal((2,) + grid2.shape)
    path = tmp_path / "u.llgf"
    write_field(path, u, grid2)
    back, g = read_field(path, kind="complex")
    assert g == grid2
    np.testing.assert_array_equal(back, u)


def test_scalar_field_shape(tmp_path, grid1):
    f = np.arange(grid1.num_points, dtype=float).reshape(grid1.shape)
    path = tmp_path / "f.llgf"
    write_field(path, f, grid1)
    back, _ = read_field(path)
    assert back.shape == grid1.shape
    np.testing.assert_array_equal(back, f)


def test_header_layout(tmp_path, grid2):
    path = tmp_path / "h.llgf"
    write_field(path, np.zeros(grid2.shape), grid2)
    raw = path.read_bytes()
    assert raw[:4] == b"LLGF"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:12], "little") == grid2.dimension
    assert int.from_bytes(raw[12:16], "little") == grid2.points_per_axis
    assert np.frombuffer(raw[16:24], dtype="<f8")[0] == grid2.box_length
    assert len(raw) == 24 + 8 * grid2.num_points


def test_bad_inputs(tmp_path, grid2):
    with pytest.raises(ValueError):
        write_field(tmp_path / "x.llgf", np.zeros((3, 4)), grid2)
    path = tmp_path / "y.llgf"
    path.write_bytes(b"NOPE" + b"\0" * 30)
    with pytest.raises(ValueError):
        read_field(path)
    good = tmp_path / "z.llgf"
    write_field(good, np.zeros(grid2.shape), grid2)
    with pytest.raises(ValueError):
        read_field(good, kind="float32")


def test_write_is_deterministic(tmp_path, grid1):
    rng = np.random.default_rng(2)
    f = rng.standard_normal((3,) + grid1.shape)
    p1, p2 = tmp_path / "a.llgf", tmp_path / "b.llgf"
    write_field(p1, f, grid1)
    write_field(p2, f, grid1)
    assert p1.read_bytes() == p2.read_bytes()


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**31 - 1),
    ncomp=st.integers(1, 4),
    complex_data=st.booleans(),
)
def test_roundtrip_property(tmp_path_factory, seed, ncomp, complex_data):
    grid = GridSpec(dimension=1, points_per_axis=16, box_length=3.5)
    rng = np.random.default_rng(seed)
    shape = (ncomp,) + grid.shape if ncomp > 1 else grid.shape
    values = rng.standard_normal(shape)
    if complex_data:
        values = values + 1j * rng.standard_normal(shape)
    path = tmp_path_factory.mktemp("io") / "f.llgf"
    write_field(path, values, grid)
    back, g = read_field(path, kind="complex" if complex_data else "real")
    assert g == grid
    np.testing.assert_array_equal(back, values)
