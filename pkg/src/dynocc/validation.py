"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

# gradients shorter than this are treated as directionless
DEGENERATE_GRADIENT = 1e-8


def check_frame(frame) -> np.ndarray:
    """Validate an intensity frame: (H, W) luma or (H, W, 3) RGB in [0, 1]."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[-1] == 1:
        arr = arr[..., 0]
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[-1] != 3):
        raise ValueError(f"frame must be (H, W) or (H, W, 3), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("frame must be non-empty")
    if not np.isfinite(arr).all():
        raise ValueError("frame contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("frame intensities must lie in [0, 1]")
    return arr


def check_flow_field(flow) -> np.ndarray:
    """Validate a dense flow field of shape (H, W, 2) with finite entries."""
    arr = np.asarray(flow, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValueError(f"flow field must be (H, W, 2), got shape {np.shape(flow)}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("flow field must be non-empty")
    if not np.isfinite(arr).all():
        raise ValueError("flow field contains non-finite values")
    return arr


def check_scalar_map(values, non_negative: bool = False) -> np.ndarray:
    """Validate a per-pixel scalar map of shape (H, W)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"scalar map must be 2-D, got shape {np.shape(values)}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("scalar map must be non-empty")
    if not np.isfinite(arr).all():
        raise ValueError("scalar map contains non-finite values")
    if non_negative and arr.min() < 0.0:
        raise ValueError("scalar map must be non-negative")
    return arr


def check_mask(mask) -> np.ndarray:
    """Validate a binary mask; accepts any 2-D array of 0/1 values."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {np.shape(mask)}")
    if arr.dtype != np.bool_:
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("mask contains values other than 0 and 1")
        arr = arr.astype(bool)
    return arr


def round_points(points) -> np.ndarray:
    """Round coordinates to the nearest lattice point (ties to even)."""
    return np.rint(np.asarray(points, dtype=np.float64)).astype(np.int64)


def clamp_points(points, width: int, height: int) -> np.ndarray:
    """Clamp integer (x, y) coordinates into the raster, elementwise."""
    pts = np.asarray(points, dtype=np.int64)
    return np.clip(pts, 0, np.array([width - 1, height - 1], dtype=np.int64))


def in_bounds(points, width: int, height: int):
    """Boolean test that (x, y) coordinates index the raster."""
    pts = np.asarray(points, dtype=np.int64)
    x = pts[..., 0]
    y = pts[..., 1]
    return (x >= 0) & (x < width) & (y >= 0) & (y < height)
