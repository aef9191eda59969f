"""Occlusion-boundary confidence from two-way flow and its post-processing
chain: box blur, percentile normalization, thresholding, thinning."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .flowops import flow_gradient_magnitude, gradient_direction_map
from .thinning import thin
from .validation import (
    check_flow_field,
    check_mask,
    check_scalar_map,
    clamp_points,
    round_points,
)

ZERO_NORMALIZER = 1e-12


@dataclass(frozen=True)
class FusedConfidence:
    """Per-pixel boundary confidence plus which flow field supplied it."""

    values: np.ndarray     # (H, W) confidence, >= 0
    from_prev: np.ndarray  # (H, W) bool; True where the backward field won


def divergence_score(flow, point, direction) -> float:
    """Difference of flow projections at the two helper pixels around a point.

    Helpers sit at unit distance along -direction and +direction (rounded to
    the lattice, clamped); the score is positive when the projections
    diverge and negative when they converge.
    """
    arr = check_flow_field(flow)
    height, width = arr.shape[:2]
    d = np.asarray(direction, dtype=np.float64)
    p = np.asarray(point, dtype=np.float64)
    h1 = clamp_points(round_points(p - d), width, height)
    h2 = clamp_points(round_points(p + d), width, height)
    f1 = arr[h1[1], h1[0]] @ d
    f2 = arr[h2[1], h2[0]] @ d
    return float(f2 - f1)


def divergence_map(flow, magnitude=None) -> np.ndarray:
    """Vectorized divergence_score with per-pixel directions taken from the
    gradient of the field's own gradient-magnitude map.

    Pixels with a degenerate direction score 0 (no evidence either way).
    """
    arr = check_flow_field(flow)
    height, width = arr.shape[:2]
    if magnitude is None:
        magnitude = flow_gradient_magnitude(arr)
    dirs, valid = gradient_direction_map(magnitude)
    xs, ys = np.meshgrid(np.arange(width), np.arange(height))
    dx = dirs[..., 0]
    dy = dirs[..., 1]
    h1x = np.clip(np.rint(xs - dx).astype(np.int64), 0, width - 1)
    h1y = np.clip(np.rint(ys - dy).astype(np.int64), 0, height - 1)
    h2x = np.clip(np.rint(xs + dx).astype(np.int64), 0, width - 1)
    h2y = np.clip(np.rint(ys + dy).astype(np.int64), 0, height - 1)
    f1 = arr[h1y, h1x, 0] * dx + arr[h1y, h1x, 1] * dy
    f2 = arr[h2y, h2x, 0] * dx + arr[h2y, h2x, 1] * dy
    scores = f2 - f1
    scores[~valid] = 0.0
    return scores


def fuse_confidence(flow_prev, flow_next) -> FusedConfidence:
    """Select, per pixel, the gradient magnitude of the more reliable field.

    Reliability is the divergence score of each field; the backward field
    wins strictly, otherwise the forward field is used. The output value is
    always one of the two input magnitudes, never a blend.
    """
    prev = check_flow_field(flow_prev)
    nxt = check_flow_field(flow_next)
    if prev.shape != nxt.shape:
        raise ValueError(f"flow field shapes differ: {prev.shape} vs {nxt.shape}")
    mag_prev = flow_gradient_magnitude(prev)
    mag_next = flow_gradient_magnitude(nxt)
    score_prev = divergence_map(prev, mag_prev)
    score_next = divergence_map(nxt, mag_next)
    from_prev = score_prev > score_next
    values = np.where(from_prev, mag_prev, mag_next)
    return FusedConfidence(values=values, from_prev=from_prev)


def box_blur(values, size: int) -> np.ndarray:
    """Mean over a size*size window; border windows normalize by the actual
    pixel count inside the image."""
    arr = check_scalar_map(values)
    if size < 1 or size % 2 == 0:
        raise ValueError("blur size must be odd and >= 1")
    height, width = arr.shape
    radius = size // 2
    integral = np.zeros((height + 1, width + 1), dtype=np.float64)
    integral[1:, 1:] = arr.cumsum(axis=0).cumsum(axis=1)
    y0 = np.clip(np.arange(height) - radius, 0, None)
    y1 = np.clip(np.arange(height) + radius + 1, None, height)
    x0 = np.clip(np.arange(width) - radius, 0, None)
    x1 = np.clip(np.arange(width) + radius + 1, None, width)
    sums = (
        integral[y1[:, None], x1[None, :]]
        - integral[y0[:, None], x1[None, :]]
        - integral[y1[:, None], x0[None, :]]
        + integral[y0[:, None], x0[None, :]]
    )
    counts = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return sums / counts


def nearest_rank_percentile(values, percentile: float) -> float:
    """Nearest-rank order statistic: the ceil(p/100 * N)-th smallest value."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("percentile of an empty collection")
    if not 0.0 < percentile <= 100.0:
        raise ValueError("percentile must lie in (0, 100]")
    rank = math.ceil(percentile * arr.size / 100.0)
    return float(np.partition(arr, rank - 1)[rank - 1])


def percentile_normalize(values, percentile: float = 90.0) -> np.ndarray:
    """Divide by the nearest-rank percentile value; all-zero maps (or maps
    whose reference value vanishes) normalize to zeros rather than erroring."""
    arr = check_scalar_map(values, non_negative=True)
    reference = nearest_rank_percentile(arr, percentile)
    if reference < ZERO_NORMALIZER:
        return np.zeros_like(arr)
    return arr / reference


def threshold_mask(values, threshold: float = 0.3) -> np.ndarray:
    """Bits set strictly above the threshold."""
    arr = check_scalar_map(values)
    return arr > threshold


def detect_boundaries(
    flow_prev,
    flow_next,
    blur_size: int = 31,
    norm_percentile: float = 90.0,
    threshold: float = 0.3,
) -> np.ndarray:
    """Full boundary chain: fuse, blur, normalize, threshold, thin."""
    fused = fuse_confidence(flow_prev, flow_next)
    blurred = box_blur(fused.values, blur_size)
    normalized = percentile_normalize(blurred, norm_percentile)
    return thin(threshold_mask(normalized, threshold))


def detect_boundaries_one_way(
    flow,
    blur_size: int = 31,
    norm_percentile: float = 90.0,
    threshold: float = 0.3,
) -> np.ndarray:
    """Single-field boundary chain for clip ends where only one flow exists.

    Without a second field there is no reliability selection; the raw
    gradient magnitude stands in for the fused confidence.
    """
    magnitude = flow_gradient_magnitude(flow)
    blurred = box_blur(magnitude, blur_size)
    normalized = percentile_normalize(blurred, norm_percentile)
    return thin(threshold_mask(normalized, threshold))


class BoundaryDetector(BaseEstimator):
    """Occlusion-boundary detector over two-way flow pairs.

    Stateless transformer: fit is a no-op and transform maps an iterable of
    (flow_prev, flow_next) pairs to thinned boundary masks.
    """

    def __init__(
        self,
        blur_size: int = 31,
        norm_percentile: float = 90.0,
        threshold: float = 0.3,
    ):
        self.blur_size = blur_size
        self.norm_percentile = norm_percentile
        self.threshold = threshold

    def fit(self, X=None, y=None):
        return self

    def confidence(self, flow_prev, flow_next) -> FusedConfidence:
        return fuse_confidence(flow_prev, flow_next)

    def detect(self, flow_prev, flow_next) -> np.ndarray:
        return detect_boundaries(
            flow_prev,
            flow_next,
            blur_size=self.blur_size,
            norm_percentile=self.norm_percentile,
            threshold=self.threshold,
        )

    def detect_one_way(self, flow) -> np.ndarray:
        return detect_boundaries_one_way(
            flow,
            blur_size=self.blur_size,
            norm_percentile=self.norm_percentile,
            threshold=self.threshold,
        )

    def transform(self, X) -> list[np.ndarray]:
        return [self.detect(flow_prev, flow_next) for flow_prev, flow_next in X]

    def intermediate_maps(self, flow_prev, flow_next) -> dict[str, np.ndarray]:
        """Named stages of the chain, for debug dumps."""
        fused = fuse_confidence(flow_prev, flow_next)
        blurred = box_blur(fused.values, self.blur_size)
        normalized = percentile_normalize(blurred, self.norm_percentile)
        return {
            "confidence": fused.values,
            "blurred": blurred,
            "normalized": normalized,
        }


# re-exported here so the whole boundary chain is importable from one module
__all__ = [
    "FusedConfidence",
    "BoundaryDetector",
    "divergence_score",
    "divergence_map",
    "fuse_confidence",
    "box_blur",
    "nearest_rank_percentile",
    "percentile_normalize",
    "threshold_mask",
    "detect_boundaries",
    "detect_boundaries_one_way",
    "thin",
    "check_mask",
]
