import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dynocc.flowio import (
    FLO_MAGIC,
    FlowDimensionError,
    FlowFileError,
    FlowMagicError,
    FlowTruncationError,
    load_depth_png16,
    load_depth_raw,
    load_frame,
    read_flo,
    save_depth_raw,
    save_frame_png,
    save_scalar_png16,
    write_flo,
)


def test_round_trip_tiny_field():
    field = np.array([[[1.5, -2.0]]], dtype=np.float32)
    again = read_flo(write_flo(field))
    assert again.dtype == np.float32
    assert np.array_equal(again, field)


def test_byte_layout_2x1():
    field = np.array([[[0.0, 0.0], [1.0, -1.0]]], dtype=np.float32)
    data = write_flo(field)
    assert len(data) == 12 + 16
    magic, width, height = struct.unpack_from("<fii", data)
    assert magic == FLO_MAGIC
    assert (width, height) == (2, 1)
    payload = np.frombuffer(data[12:], dtype="<f4")
    assert payload.tolist() == [0.0, 0.0, 1.0, -1.0]


def test_zero_field_payload():
    data = write_flo(np.zeros((3, 3, 2), dtype=np.float32))
    assert data[12:] == b"\x00" * 72


def test_bad_magic_rejected():
    data = struct.pack("<fii", 202021.24, 1, 1) + b"\x00" * 8
    with pytest.raises(FlowMagicError):
        read_flo(data)


def test_truncated_payload_rejected():
    # header claims 4x4 but carries only 10 floats
    data = struct.pack("<fii", FLO_MAGIC, 4, 4) + b"\x00" * 40
    with pytest.raises(FlowTruncationError):
        read_flo(data)


def test_truncated_header_rejected():
    with pytest.raises(FlowTruncationError):
        read_flo(b"\x00\x00")


def test_nonpositive_dimensions_rejected():
    data = struct.pack("<fii", FLO_MAGIC, 0, 4)
    with pytest.raises(FlowDimensionError):
        read_flo(data)
    data = struct.pack("<fii", FLO_MAGIC, 2, -1)
    with pytest.raises(FlowDimensionError):
        read_flo(data)


def test_trailing_bytes_rejected():
    data = write_flo(np.zeros((1, 1, 2), dtype=np.float32)) + b"\x00"
    with pytest.raises(FlowFileError):
        read_flo(data)


def test_round_trip_random_64x64():
    rng = np.random.default_rng(0)
    field = rng.standard_normal((64, 64, 2)).astype(np.float32)
    assert np.array_equal(read_flo(write_flo(field)), field)


@settings(max_examples=40, deadline=None)
@given(
    hnp.arrays(
        dtype=np.float32,
        shape=hnp.array_shapes(min_dims=3, max_dims=3, min_side=1, max_side=8).filter(
            lambda s: s[2] == 2
        ),
        elements=st.floats(
            min_value=-1e6, max_value=1e6, allow_nan=False, width=32
        ),
    )
)
def test_round_trip_property(field):
    encoded = write_flo(field)
    again = read_flo(encoded)
    assert np.array_equal(again, field)
    assert write_flo(again) == encoded


def test_frame_png_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    frame = np.round(rng.random((16, 12)) * 255) / 255.0
    path = tmp_path / "frame.png"
    save_frame_png(frame, path)
    loaded = load_frame(path)
    assert loaded.shape == (16, 12)
    assert np.allclose(loaded, frame, atol=1e-12)


def test_frame_ppm(tmp_path):
    # 2x1 RGB PPM, 8-bit
    path = tmp_path / "frame.ppm"
    path.write_bytes(b"P6\n2 1\n255\n" + bytes([255, 0, 0, 0, 128, 255]))
    loaded = load_frame(path)
    assert loaded.shape == (1, 2, 3)
    assert np.allclose(loaded[0, 0], [1.0, 0.0, 0.0])
    assert np.allclose(loaded[0, 1], [0.0, 128 / 255.0, 1.0])


def test_scalar_png16(tmp_path):
    values = np.array([[0.0, 1.0], [2.0, 4.0]])
    path = tmp_path / "map.png"
    save_scalar_png16(values, path)
    raw = load_depth_png16(path)
    assert raw[0, 0] == 0
    assert raw[1, 1] == 65535
    assert raw[0, 1] == np.rint(65535 / 4.0)


def test_scalar_png16_all_zero(tmp_path):
    path = tmp_path / "zero.png"
    save_scalar_png16(np.zeros((4, 4)), path)
    assert (load_depth_png16(path) == 0).all()


def test_depth_raw_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    depth = rng.standard_normal((5, 7)).astype(np.float32).astype(np.float64)
    path = tmp_path / "depth.f32"
    save_depth_raw(depth, path)
    loaded = load_depth_raw(path, width=7, height=5)
    assert np.array_equal(loaded, depth)
    with pytest.raises(ValueError):
        load_depth_raw(path, width=7, height=6)


def test_depth_png16_scale(tmp_path):
    path = tmp_path / "d16.png"
    save_scalar_png16(np.array([[1.0, 2.0]]), path)
    scaled = load_depth_png16(path, scale=0.5)
    assert scaled[0, 1] == 65535 * 0.5
