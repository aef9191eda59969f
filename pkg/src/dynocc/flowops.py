"""Dense flow-field operators: gradient magnitude, lattice sampling, local
gradient directions."""

from __future__ import annotations

import numpy as np

from .validation import (
    DEGENERATE_GRADIENT,
    check_flow_field,
    check_scalar_map,
    clamp_points,
    round_points,
)


def _axis_gradient(values: np.ndarray, axis: int) -> np.ndarray:
    # np.gradient needs >= 2 samples along the axis; a single sample has no slope
    if values.shape[axis] < 2:
        return np.zeros_like(values)
    return np.gradient(values, axis=axis)


def flow_gradient_magnitude(flow) -> np.ndarray:
    """L1 norm of the flow Jacobian per pixel.

    Central differences in the interior, one-sided at the borders. The
    result is |du/dx| + |du/dy| + |dv/dx| + |dv/dy|, always >= 0.
    """
    arr = check_flow_field(flow)
    u = arr[..., 0]
    v = arr[..., 1]
    return (
        np.abs(_axis_gradient(u, 1))
        + np.abs(_axis_gradient(u, 0))
        + np.abs(_axis_gradient(v, 1))
        + np.abs(_axis_gradient(v, 0))
    )


def sample_flow(flow, point) -> tuple[float, float]:
    """Flow vector at the nearest lattice point, clamping to the border."""
    arr = check_flow_field(flow)
    height, width = arr.shape[:2]
    x, y = clamp_points(round_points(point), width, height)
    return float(arr[y, x, 0]), float(arr[y, x, 1])


def _point_gradient(values: np.ndarray, x: int, y: int) -> tuple[float, float]:
    height, width = values.shape
    x0, x1 = max(x - 1, 0), min(x + 1, width - 1)
    y0, y1 = max(y - 1, 0), min(y + 1, height - 1)
    gx = (values[y, x1] - values[y, x0]) / (x1 - x0) if x1 > x0 else 0.0
    gy = (values[y1, x] - values[y0, x]) / (y1 - y0) if y1 > y0 else 0.0
    return float(gx), float(gy)


def gradient_direction(values, point):
    """Unit vector along the local gradient of a scalar map at a pixel.

    Returns None when the gradient norm falls below the degeneracy
    threshold; callers must skip such pixels rather than guess a direction.
    """
    arr = check_scalar_map(values)
    height, width = arr.shape
    x, y = clamp_points(round_points(point), width, height)
    gx, gy = _point_gradient(arr, int(x), int(y))
    norm = float(np.hypot(gx, gy))
    if norm < DEGENERATE_GRADIENT:
        return None
    return np.array([gx / norm, gy / norm])


def gradient_direction_map(values) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized gradient_direction: (H, W, 2) directions plus validity mask.

    Invalid (degenerate) pixels carry a zero vector and a False flag.
    """
    arr = check_scalar_map(values)
    gx = _axis_gradient(arr, 1)
    gy = _axis_gradient(arr, 0)
    norm = np.hypot(gx, gy)
    valid = norm >= DEGENERATE_GRADIENT
    safe = np.where(valid, norm, 1.0)
    dirs = np.stack((gx / safe, gy / safe), axis=-1)
    dirs[~valid] = 0.0
    return dirs, valid
