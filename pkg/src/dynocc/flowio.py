"""Flow-field and raster file I/O.

Flow fields use the Middlebury binary layout: a little-endian float32
magic tag (202021.25), int32 width and height, then width*height
interleaved (u, v) float32 pairs in row-major order. Reads and writes
are bit-exact round trips.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .validation import check_frame, check_scalar_map

FLO_MAGIC = 202021.25
_HEADER = struct.Struct("<fii")


class FlowFileError(ValueError):
    """Base error for malformed flow files."""


class FlowMagicError(FlowFileError):
    """Leading tag does not identify a flow file."""


class FlowDimensionError(FlowFileError):
    """Header declares non-positive dimensions."""


class FlowTruncationError(FlowFileError):
    """Stream ends before width*height flow vectors."""


def read_flo(data: bytes) -> np.ndarray:
    """Decode a flow stream into a float32 array of shape (H, W, 2).

    Raises FlowMagicError, FlowDimensionError, or FlowTruncationError on
    malformed input; trailing bytes beyond the payload are also rejected.
    """
    if len(data) < _HEADER.size:
        raise FlowTruncationError(
            f"stream of {len(data)} bytes is shorter than the 12-byte header"
        )
    magic, width, height = _HEADER.unpack_from(data)
    if magic != FLO_MAGIC:
        raise FlowMagicError(f"bad magic value {magic!r}, expected {FLO_MAGIC}")
    if width <= 0 or height <= 0:
        raise FlowDimensionError(f"non-positive dimensions {width}x{height}")
    expected = width * height * 2 * 4
    payload = data[_HEADER.size :]
    if len(payload) < expected:
        raise FlowTruncationError(
            f"payload holds {len(payload)} bytes, {expected} required for "
            f"{width}x{height}"
        )
    if len(payload) > expected:
        raise FlowFileError(f"{len(payload) - expected} trailing bytes after payload")
    vecs = np.frombuffer(payload, dtype="<f4", count=width * height * 2)
    return vecs.reshape(height, width, 2).copy()


def write_flo(flow) -> bytes:
    """Encode a flow field to the binary layout; inverse of read_flo."""
    arr = np.asarray(flow)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError(f"flow field must be (H, W, 2), got shape {arr.shape}")
    height, width = arr.shape[:2]
    if not np.isfinite(arr).all():
        raise ValueError("flow field contains non-finite values")
    body = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return _HEADER.pack(FLO_MAGIC, width, height) + body


def read_flo_file(path) -> np.ndarray:
    return read_flo(Path(path).read_bytes())


def write_flo_file(path, flow) -> None:
    Path(path).write_bytes(write_flo(flow))


def load_frame(path) -> np.ndarray:
    """Load a PNG/PPM image as intensities in [0, 1].

    8-bit data is divided by 255 (16-bit by 65535). Palette images are
    expanded to RGB; an alpha channel is dropped.
    """
    with Image.open(path) as img:
        if img.mode in ("P", "RGBA"):
            img = img.convert("RGB")
        elif img.mode == "LA":
            img = img.convert("L")
        mode = img.mode
        arr = np.asarray(img)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    if arr.dtype == np.uint16 or mode == "I":
        return np.clip(arr.astype(np.float64) / 65535.0, 0.0, 1.0)
    raise ValueError(f"unsupported image dtype {arr.dtype} in {path}")


def save_frame_png(frame, path) -> None:
    """Write an intensity frame as an 8-bit grayscale or RGB PNG."""
    arr = check_frame(frame)
    data = np.rint(arr * 255.0).astype(np.uint8)
    mode = "L" if data.ndim == 2 else "RGB"
    Image.fromarray(data, mode=mode).save(path, format="PNG")


def save_rgb_png(image, path) -> None:
    """Write an already-quantized (H, W, 3) uint8 image as PNG."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[-1] != 3 or arr.dtype != np.uint8:
        raise ValueError("expected a (H, W, 3) uint8 image")
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def save_scalar_png16(values, path) -> None:
    """Dump a scalar map as 16-bit grayscale PNG, scaled linearly from [0, max]."""
    arr = check_scalar_map(values, non_negative=True)
    peak = arr.max()
    if peak > 0:
        data = np.rint(arr / peak * 65535.0).astype(np.uint16)
    else:
        data = np.zeros(arr.shape, dtype=np.uint16)
    Image.fromarray(data).save(path, format="PNG")


def load_depth_raw(path, width: int, height: int) -> np.ndarray:
    """Load a raw little-endian float32 depth raster of known dimensions."""
    data = Path(path).read_bytes()
    expected = width * height * 4
    if len(data) != expected:
        raise ValueError(f"{path}: {len(data)} bytes, expected {expected}")
    return np.frombuffer(data, dtype="<f4").reshape(height, width).astype(np.float64)


def save_depth_raw(values, path) -> None:
    arr = check_scalar_map(values)
    Path(path).write_bytes(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_depth_png16(path, scale: float = 1.0) -> np.ndarray:
    """Load a 16-bit grayscale PNG as depth values: raw * scale."""
    with Image.open(path) as img:
        arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError(f"{path}: expected single-channel 16-bit PNG")
    return arr.astype(np.float64) * scale
