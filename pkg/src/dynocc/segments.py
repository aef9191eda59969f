"""Skeleton tracing and splitting into short segments with per-pixel normals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_mask

_OFFSETS = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]


@dataclass(frozen=True)
class BoundarySegment:
    """A contiguous run of traced skeleton pixels.

    points: (c, 2) int array of (x, y) along the trace.
    normals: (c, 2) float array of unit vectors perpendicular to the local
    tangent; sign is consistent along the trace but otherwise arbitrary.
    """

    points: np.ndarray
    normals: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def _neighbors_of(point, pixels):
    x, y = point
    return [(x + dx, y + dy) for dx, dy in _OFFSETS if (x + dx, y + dy) in pixels]


def _walk(start, body, visited):
    path = [start]
    visited.add(start)
    current = start
    while True:
        candidates = sorted(
            (q for q in _neighbors_of(current, body) if q not in visited),
            key=lambda q: (q[1], q[0]),
        )
        if not candidates:
            return path
        current = candidates[0]
        visited.add(current)
        path.append(current)


def trace_skeleton_paths(mask) -> list[np.ndarray]:
    """Trace a thinned mask into ordered pixel chains.

    Junction pixels (3 or more skeleton neighbors) are dropped and split the
    curves passing through them. Open chains are traced endpoint-to-endpoint;
    closed loops are cut at their lexicographically smallest pixel. The walk
    order is deterministic.
    """
    arr = check_mask(mask)
    ys, xs = np.nonzero(arr)
    pixels = set(zip(xs.tolist(), ys.tolist()))
    if not pixels:
        return []
    junctions = {p for p in pixels if len(_neighbors_of(p, pixels)) >= 3}
    body = pixels - junctions

    degree = {p: len(_neighbors_of(p, body)) for p in body}
    endpoints = sorted((p for p in body if degree[p] <= 1), key=lambda p: (p[1], p[0]))

    visited: set = set()
    paths = []
    for start in endpoints:
        if start in visited:
            continue
        paths.append(_walk(start, body, visited))
    # whatever remains is cycles
    for start in sorted(body - visited, key=lambda p: (p[1], p[0])):
        if start in visited:
            continue
        paths.append(_walk(start, body, visited))
    return [np.array(path, dtype=np.int64) for path in paths]


def path_normals(path: np.ndarray) -> np.ndarray:
    """Unit normals from the chord between neighbors two steps away."""
    length = len(path)
    idx = np.arange(length)
    lo = np.maximum(idx - 2, 0)
    hi = np.minimum(idx + 2, length - 1)
    chord = (path[hi] - path[lo]).astype(np.float64)
    norm = np.hypot(chord[:, 0], chord[:, 1])
    norm[norm == 0] = 1.0
    tangent = chord / norm[:, None]
    return np.stack((-tangent[:, 1], tangent[:, 0]), axis=1)


def split_segments(mask, segment_len: int = 20) -> list[BoundarySegment]:
    """Chop traced skeleton curves into runs of at most segment_len pixels.

    Trailing runs shorter than max(3, segment_len / 4) are discarded, as are
    whole curves below that length; normals are estimated on the full curve
    before chopping.
    """
    if segment_len < 1:
        raise ValueError("segment_len must be >= 1")
    min_len = max(3.0, segment_len / 4.0)
    segments = []
    for path in trace_skeleton_paths(mask):
        normals = path_normals(path)
        for start in range(0, len(path), segment_len):
            run = path[start : start + segment_len]
            if len(run) < min_len:
                continue
            segments.append(
                BoundarySegment(points=run, normals=normals[start : start + segment_len])
            )
    return segments
