"""Figure/ground classification of boundary segments by warp validation.

Each side of a segment proposes its own flow for the boundary; the side
whose flow warps the segment onto the edges of the temporally adjacent
frame, with enough margin and in both temporal directions, is foreground.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator

from .segments import BoundarySegment, split_segments
from .validation import check_flow_field, check_mask, clamp_points, in_bounds, round_points


def helper_pixels(point, direction, offset: int, width: int, height: int):
    """Lattice pixels at -offset and +offset along a unit direction, clamped."""
    p = np.asarray(point, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    p1 = clamp_points(round_points(p - offset * d), width, height)
    p2 = clamp_points(round_points(p + offset * d), width, height)
    return p1, p2


def dilate_mask(mask, radius: int) -> np.ndarray:
    """Chebyshev dilation: bit set iff an input bit lies within radius."""
    arr = check_mask(mask)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return arr.copy()
    return ndimage.binary_dilation(arr, structure=np.ones((2 * radius + 1,) * 2, bool))


def _side_directions(segment: BoundarySegment, side: int) -> np.ndarray:
    # side 1 lives on the -normal side, side 2 on the +normal side
    if side == 1:
        return -segment.normals
    if side == 2:
        return segment.normals
    raise ValueError("side must be 1 or 2")


def _count_aligned(
    segment: BoundarySegment,
    side: int,
    flow: np.ndarray,
    dilated_edges: np.ndarray,
    helper_offset: int,
) -> int:
    height, width = flow.shape[:2]
    dirs = _side_directions(segment, side)
    helpers = clamp_points(
        round_points(segment.points + helper_offset * dirs), width, height
    )
    vectors = flow[helpers[:, 1], helpers[:, 0]]
    warped = round_points(segment.points + vectors)
    ok = in_bounds(warped, width, height)
    if not ok.any():
        return 0
    wx = warped[ok, 0]
    wy = warped[ok, 1]
    return int(dilated_edges[wy, wx].sum())


def warp_match_count(
    segment: BoundarySegment,
    side: int,
    flow,
    edges_other,
    helper_offset: int = 5,
    align_tolerance: int = 1,
) -> int:
    """How many segment pixels, warped by the given side's flow, land within
    align_tolerance (Chebyshev) of an edge pixel in the adjacent frame."""
    arr = check_flow_field(flow)
    dilated = dilate_mask(edges_other, align_tolerance)
    return _count_aligned(segment, side, arr, dilated, helper_offset)


def decide_foreground_side(counts_prev, counts_next, length: int, delta: float):
    """Margin test per temporal direction; a side wins only if it clears the
    margin in both. Returns 1, 2, or None (unclassified)."""
    c1p, c2p = counts_prev
    c1n, c2n = counts_next
    if (c1p - c2p) / length > delta and (c1n - c2n) / length > delta:
        return 1
    if (c2p - c1p) / length > delta and (c2n - c1n) / length > delta:
        return 2
    return None


@dataclass(frozen=True)
class FigureGroundVerdict:
    """A segment with its classified foreground side and the vote counts."""

    segment: BoundarySegment
    foreground_side: int       # 1 or 2
    counts_prev: tuple[int, int]
    counts_next: tuple[int, int]

    def foreground_directions(self) -> np.ndarray:
        """Per-pixel unit vectors pointing into the foreground region."""
        return _side_directions(self.segment, self.foreground_side)


def classify_segment(
    segment: BoundarySegment,
    flow_prev,
    flow_next,
    edges_prev,
    edges_next,
    helper_offset: int = 5,
    align_tolerance: int = 1,
    delta: float = 0.5,
):
    """Two-way warp-validation verdict for one segment, or None.

    Unclassified is a normal outcome: ambiguous segments are dropped rather
    than guessed.
    """
    kwargs = {"helper_offset": helper_offset, "align_tolerance": align_tolerance}
    counts_prev = (
        warp_match_count(segment, 1, flow_prev, edges_prev, **kwargs),
        warp_match_count(segment, 2, flow_prev, edges_prev, **kwargs),
    )
    counts_next = (
        warp_match_count(segment, 1, flow_next, edges_next, **kwargs),
        warp_match_count(segment, 2, flow_next, edges_next, **kwargs),
    )
    side = decide_foreground_side(counts_prev, counts_next, len(segment), delta)
    if side is None:
        return None
    return FigureGroundVerdict(
        segment=segment,
        foreground_side=side,
        counts_prev=counts_prev,
        counts_next=counts_next,
    )


class DepthOrderClassifier(BaseEstimator):
    """Splits a thinned edge mask into segments and classifies each side.

    Stateless; transform maps an iterable of
    (edge_mask, flow_prev, flow_next, edges_prev, edges_next) tuples to
    verdict lists.
    """

    def __init__(
        self,
        segment_len: int = 20,
        delta: float = 0.5,
        helper_offset: int = 5,
        align_tolerance: int = 1,
    ):
        self.segment_len = segment_len
        self.delta = delta
        self.helper_offset = helper_offset
        self.align_tolerance = align_tolerance

    def fit(self, X=None, y=None):
        return self

    def classify(
        self, edge_mask, flow_prev, flow_next, edges_prev, edges_next
    ) -> list[FigureGroundVerdict]:
        prev = check_flow_field(flow_prev)
        nxt = check_flow_field(flow_next)
        dil_prev = dilate_mask(edges_prev, self.align_tolerance)
        dil_next = dilate_mask(edges_next, self.align_tolerance)
        verdicts = []
        for segment in split_segments(edge_mask, self.segment_len):
            counts_prev = (
                _count_aligned(segment, 1, prev, dil_prev, self.helper_offset),
                _count_aligned(segment, 2, prev, dil_prev, self.helper_offset),
            )
            counts_next = (
                _count_aligned(segment, 1, nxt, dil_next, self.helper_offset),
                _count_aligned(segment, 2, nxt, dil_next, self.helper_offset),
            )
            side = decide_foreground_side(
                counts_prev, counts_next, len(segment), self.delta
            )
            if side is not None:
                verdicts.append(
                    FigureGroundVerdict(segment, side, counts_prev, counts_next)
                )
        return verdicts

    def transform(self, X) -> list[list[FigureGroundVerdict]]:
        return [self.classify(*item) for item in X]
