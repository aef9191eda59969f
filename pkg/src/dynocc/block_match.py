"""Integer block-matching flow estimation with sum-of-absolute-differences.

Self-contained fallback so the extraction pipeline can run without any
externally computed flow. Production runs should feed precomputed flow
files instead.
"""

from __future__ import annotations

import numpy as np

from .validation import check_frame


def _window_sums(values: np.ndarray, size: int) -> np.ndarray:
    """Sliding size*size window sums; output trims to valid positions."""
    integral = np.zeros((values.shape[0] + 1, values.shape[1] + 1), dtype=np.float64)
    integral[1:, 1:] = values.cumsum(axis=0).cumsum(axis=1)
    return (
        integral[size:, size:]
        - integral[:-size, size:]
        - integral[size:, :-size]
        + integral[:-size, :-size]
    )


def _search_offsets(radius: int) -> list[tuple[int, int]]:
    # visit order implements the tie-break: smallest |d|, then (dy, dx)
    offsets = [
        (dy, dx)
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
    ]
    offsets.sort(key=lambda o: (o[0] * o[0] + o[1] * o[1], o[0], o[1]))
    return offsets


def estimate_flow_block_matching(a, b, block_size: int = 9, radius: int = 10) -> np.ndarray:
    """Per-pixel integer displacement from frame a to frame b minimizing SAD.

    The block around each pixel of `a` is compared against displaced blocks
    of `b` within a square search window (edge-replicated at the borders).
    Ties keep the earlier candidate in the (|d|, dy, dx) visit order, so
    identical frames and flat content resolve to the zero field.
    """
    fa = check_frame(a)
    fb = check_frame(b)
    if fa.shape != fb.shape:
        raise ValueError(f"frame shapes differ: {fa.shape} vs {fb.shape}")
    if block_size < 1 or block_size % 2 == 0:
        raise ValueError("block_size must be odd and >= 1")
    if radius < 1:
        raise ValueError("radius must be >= 1")

    height, width = fa.shape[:2]
    half = block_size // 2
    spatial = [(half, half), (half, half)] + [(0, 0)] * (fa.ndim - 2)
    apad = np.pad(fa, spatial, mode="edge")
    spatial_b = [(half + radius, half + radius)] * 2 + [(0, 0)] * (fb.ndim - 2)
    bpad = np.pad(fb, spatial_b, mode="edge")

    best = np.full((height, width), np.inf)
    flow = np.zeros((height, width, 2), dtype=np.float64)
    span_y = height + 2 * half
    span_x = width + 2 * half
    for dy, dx in _search_offsets(radius):
        window = bpad[radius + dy : radius + dy + span_y, radius + dx : radius + dx + span_x]
        diff = np.abs(apad - window)
        if diff.ndim == 3:
            diff = diff.sum(axis=-1)
        sad = _window_sums(diff, block_size)
        better = sad < best
        if better.any():
            best[better] = sad[better]
            flow[better] = (dx, dy)
    return flow
