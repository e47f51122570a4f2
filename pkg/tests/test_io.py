import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from taxel import io
from taxel.errors import DomainError
from taxel.optics import calibrate_default


def test_png_round_trip_is_exact_on_8bit_values(tmp_path):
    rng = np.random.default_rng(0)
    px = rng.integers(0, 256, size=(32, 64, 3)) / 255.0
    io.write_png(tmp_path / "f.png", px)
    assert np.array_equal(io.read_png(tmp_path / "f.png"), px)


def test_png_bytes_are_reproducible(tmp_path):
    px = np.random.default_rng(1).random((32, 32, 3))
    io.write_png(tmp_path / "a.png", px)
    io.write_png(tmp_path / "b.png", px)
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_raw_round_trip_with_sidecar(tmp_path):
    grid = np.random.default_rng(0).normal(size=(2, 8, 16))
    io.write_raw(tmp_path / "g.raw", grid, 0.08, kind="gradients")
    back, meta = io.read_raw(tmp_path / "g.raw")
    assert np.array_equal(back, grid.astype(np.float32))
    assert meta == {"width": 16, "height": 8, "channels": 2, "pitch": 0.08, "dtype": "float32-le", "kind": "gradients"}
    assert (tmp_path / "g.raw").stat().st_size == 2 * 8 * 16 * 4


def test_raw_size_mismatch_detected(tmp_path):
    io.write_raw(tmp_path / "d.raw", np.zeros((4, 4)), 0.1)
    (tmp_path / "d.raw").write_bytes(b"\0" * 12)
    with pytest.raises(DomainError):
        io.read_raw(tmp_path / "d.raw")


@given(st.dictionaries(st.text("abcxyz", min_size=1, max_size=5), hnp.arrays(float, hnp.array_shapes(max_dims=3, max_side=4)), max_size=4))
def test_container_round_trip(tensors):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "c.bin"
        io.write_container(p, {"hello": [1, 2]}, tensors)
        header, back = io.read_container(p)
        assert header["hello"] == [1, 2]
        assert set(back) == set(tensors)
        for k, v in tensors.items():
            assert back[k].shape == v.shape
            assert back[k].tobytes() == v.astype("<f8").tobytes()
        assert p.read_bytes()[:4] == b"TAXL"


def test_container_rejects_bad_magic(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"NOPE" + b"\0" * 10)
    with pytest.raises(DomainError):
        io.read_container(tmp_path / "x.bin")


def test_lut_round_trip(tmp_path):
    lut, _ = calibrate_default()
    io.save_lut(tmp_path / "lut.bin", lut)
    back = io.load_lut(tmp_path / "lut.bin")
    assert np.array_equal(back.table, lut.table) and np.array_equal(back.counts, lut.counts)
    d = np.random.default_rng(0).normal(scale=0.1, size=(50, 3))
    assert np.array_equal(back.query(d), lut.query(d))


def test_canonical_json_is_sorted():
    assert io.dumps_json({"b": 1, "a": [1.5]}) == '{\n  "a": [\n    1.5\n  ],\n  "b": 1\n}\n'
