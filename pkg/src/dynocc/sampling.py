"""Relative depth pair extraction from classified boundary segments.

For each boundary pixel of a classified segment this emits up to two pairs:
(boundary, background sample) with ordinal +1 and (foreground sample,
boundary) with ordinal 0. Sample points are drawn at random offsets along
the segment normal and kept only when their flow agrees with the helper
pixel anchoring that side, which keeps samples on the intended region.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np
from sklearn.base import BaseEstimator

from .validation import check_flow_field, clamp_points, in_bounds, round_points


class DepthPair(NamedTuple):
    i: tuple[int, int]
    j: tuple[int, int]
    o: int  # +1: i closer, -1: j closer, 0: same depth


def flow_consistent(flow, a, b, eps: float) -> bool:
    """True iff the flow vectors at two pixels agree within eps per component."""
    arr = check_flow_field(flow)
    height, width = arr.shape[:2]
    pa = clamp_points(round_points(a), width, height)
    pb = clamp_points(round_points(b), width, height)
    va = arr[pa[1], pa[0]]
    vb = arr[pb[1], pb[0]]
    return float(np.abs(va - vb).max()) <= eps


def _sample_along(
    point,
    direction,
    anchor,
    flow: np.ndarray,
    max_offset: float,
    flow_epsilon: float,
    max_attempts: int,
    rng: np.random.Generator,
) -> Optional[tuple[int, int]]:
    height, width = flow.shape[:2]
    anchor_vec = flow[anchor[1], anchor[0]]
    p = np.asarray(point, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    for _ in range(max_attempts):
        t = rng.uniform(1.0, max_offset)
        q = round_points(p + t * d)
        if not bool(in_bounds(q, width, height)):
            continue
        if float(np.abs(flow[q[1], q[0]] - anchor_vec).max()) <= flow_epsilon:
            return int(q[0]), int(q[1])
    return None


def sample_background_point(
    point,
    direction,
    anchor,
    flow,
    max_offset: float = 30.0,
    flow_epsilon: float = 0.5,
    max_attempts: int = 8,
    rng: Optional[np.random.Generator] = None,
) -> Optional[tuple[int, int]]:
    """Random in-bounds pixel within max_offset along the background normal
    whose flow matches the background helper pixel; None after exhausting
    the attempt budget."""
    arr = check_flow_field(flow)
    if rng is None:
        rng = np.random.default_rng()
    return _sample_along(
        point, direction, anchor, arr, max_offset, flow_epsilon, max_attempts, rng
    )


def sample_foreground_point(
    point,
    direction,
    anchor,
    flow,
    max_offset: float = 7.0,
    flow_epsilon: float = 0.5,
    max_attempts: int = 8,
    rng: Optional[np.random.Generator] = None,
) -> Optional[tuple[int, int]]:
    """Same strategy as sample_background_point with the tighter foreground
    radius and the foreground helper as the consistency anchor."""
    arr = check_flow_field(flow)
    if rng is None:
        rng = np.random.default_rng()
    return _sample_along(
        point, direction, anchor, arr, max_offset, flow_epsilon, max_attempts, rng
    )


def extract_pairs(
    verdicts,
    flow,
    flow_other=None,
    helper_offset: int = 5,
    bg_max_offset: float = 30.0,
    fg_max_offset: float = 7.0,
    flow_epsilon: float = 0.5,
    max_attempts: int = 8,
    rng: Optional[np.random.Generator] = None,
) -> list[DepthPair]:
    """One positive and one same-depth pair per boundary pixel, where sampling
    succeeds.

    A boundary pixel rides with the occluding region, so pixels whose own
    flow disagrees with the foreground helper (the thinned edge drifted onto
    the background lattice) are skipped outright. When the opposite-direction
    field is supplied the agreement must hold in both; estimated flow is
    unreliable on the soon-to-be-occluded side in one direction but not the
    other, and the two-way check rejects exactly those pixels.
    """
    arr = check_flow_field(flow)
    other = None if flow_other is None else check_flow_field(flow_other)
    height, width = arr.shape[:2]
    if rng is None:
        rng = np.random.default_rng()
    pairs: list[DepthPair] = []
    for verdict in verdicts:
        segment = verdict.segment
        fg_dirs = verdict.foreground_directions()
        for k in range(len(segment)):
            p = segment.points[k]
            fg_dir = fg_dirs[k]
            bg_dir = -fg_dir
            p1 = clamp_points(round_points(p + helper_offset * fg_dir), width, height)
            p2 = clamp_points(round_points(p + helper_offset * bg_dir), width, height)
            if float(np.abs(arr[p[1], p[0]] - arr[p1[1], p1[0]]).max()) > flow_epsilon:
                continue
            if other is not None and float(
                np.abs(other[p[1], p[0]] - other[p1[1], p1[0]]).max()
            ) > flow_epsilon:
                continue
            p_b = _sample_along(
                p, bg_dir, p2, arr, bg_max_offset, flow_epsilon, max_attempts, rng
            )
            if p_b is not None:
                pairs.append(DepthPair(i=(int(p[0]), int(p[1])), j=p_b, o=1))
            p_f = _sample_along(
                p, fg_dir, p1, arr, fg_max_offset, flow_epsilon, max_attempts, rng
            )
            if p_f is not None:
                pairs.append(DepthPair(i=p_f, j=(int(p[0]), int(p[1])), o=0))
    return pairs


def random_drop(pairs, keep_rate: float, rng: np.random.Generator) -> list[DepthPair]:
    """Keep a uniform random subset of exactly floor(keep_rate * n) pairs,
    preserving input order; deterministic for a fixed generator state."""
    if not 0.0 < keep_rate <= 1.0:
        raise ValueError("keep_rate must lie in (0, 1]")
    pairs = list(pairs)
    n = len(pairs)
    k = int(math.floor(keep_rate * n))
    if k >= n:
        return pairs
    chosen = np.sort(rng.permutation(n)[:k])
    return [pairs[index] for index in chosen]


class PairSampler(BaseEstimator):
    """Turns figure/ground verdicts into randomly thinned depth pairs."""

    def __init__(
        self,
        bg_max_offset: float = 30.0,
        fg_max_offset: float = 7.0,
        flow_epsilon: float = 0.5,
        keep_rate: float = 0.1,
        max_attempts: int = 8,
        helper_offset: int = 5,
        seed: int = 0,
    ):
        self.bg_max_offset = bg_max_offset
        self.fg_max_offset = fg_max_offset
        self.flow_epsilon = flow_epsilon
        self.keep_rate = keep_rate
        self.max_attempts = max_attempts
        self.helper_offset = helper_offset
        self.seed = seed

    def fit(self, X=None, y=None):
        return self

    def extract(self, verdicts, flow, flow_other=None, rng=None) -> list[DepthPair]:
        if rng is None:
            rng = np.random.default_rng(self.seed)
        return extract_pairs(
            verdicts,
            flow,
            flow_other=flow_other,
            helper_offset=self.helper_offset,
            bg_max_offset=self.bg_max_offset,
            fg_max_offset=self.fg_max_offset,
            flow_epsilon=self.flow_epsilon,
            max_attempts=self.max_attempts,
            rng=rng,
        )

    def sample(self, verdicts, flow, flow_other=None, rng=None) -> tuple[list[DepthPair], int]:
        """Extract then randomly drop; returns (kept pairs, count before drop)."""
        if rng is None:
            rng = np.random.default_rng(self.seed)
        pairs = self.extract(verdicts, flow, flow_other=flow_other, rng=rng)
        kept = random_drop(pairs, self.keep_rate, rng)
        return kept, len(pairs)

    def transform(self, X) -> list[list[DepthPair]]:
        return [self.sample(verdicts, flow)[0] for verdicts, flow in X]
