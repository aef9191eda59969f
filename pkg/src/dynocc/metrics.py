"""Ordinal ranking loss, hard-query selection, and the weighted disagreement
rate for evaluating depth predictions against relative depth pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from .validation import check_scalar_map


def softplus(x: float) -> float:
    """log(1 + exp(x)) computed as max(x, 0) + log1p(exp(-|x|))."""
    x = float(x)
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


def _softplus_vec(x: np.ndarray) -> np.ndarray:
    # same formula as softplus, elementwise
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def query_loss(z_i: float, z_j: float, o: int) -> float:
    """Per-query ranking loss: logistic on the depth gap for ordered pairs,
    squared gap for same-depth pairs."""
    if o == 1:
        return softplus(z_j - z_i)
    if o == -1:
        return softplus(z_i - z_j)
    if o == 0:
        return (z_i - z_j) ** 2
    raise ValueError(f"ordinal must be -1, 0, or +1, got {o}")


def query_loss_gradient(z_i: float, z_j: float, o: int) -> float:
    """Derivative of query_loss with respect to the gap (z_i - z_j)."""
    gap = z_i - z_j
    if o == 1:
        return float(-expit(-gap))
    if o == -1:
        return float(expit(gap))
    if o == 0:
        return 2.0 * gap
    raise ValueError(f"ordinal must be -1, 0, or +1, got {o}")


@dataclass(frozen=True)
class QuerySet:
    """Point pairs with ground-truth ordinals and optional weights."""

    i: np.ndarray                      # (K, 2) int (x, y)
    j: np.ndarray                      # (K, 2) int (x, y)
    o: np.ndarray                      # (K,) in {-1, 0, +1}
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        i = np.asarray(self.i, dtype=np.int64).reshape(-1, 2)
        j = np.asarray(self.j, dtype=np.int64).reshape(-1, 2)
        o = np.asarray(self.o, dtype=np.int64).reshape(-1)
        if not (len(i) == len(j) == len(o)):
            raise ValueError("i, j, o must have matching lengths")
        if len(o) < 1:
            raise ValueError("a query set needs at least one query")
        if not np.isin(o, (-1, 0, 1)).all():
            raise ValueError("ordinals must be -1, 0, or +1")
        weights = self.weights
        if weights is not None:
            weights = np.asarray(weights, dtype=np.float64).reshape(-1)
            if len(weights) != len(o):
                raise ValueError("weights length must match query count")
            if (weights < 0).any():
                raise ValueError("weights must be non-negative")
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "o", o)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.o)

    def resolved_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.o), dtype=np.float64)
        return self.weights

    @classmethod
    def from_pairs(cls, pairs, weights=None) -> "QuerySet":
        i = [p[0] for p in pairs]
        j = [p[1] for p in pairs]
        o = [p[2] for p in pairs]
        return cls(i=np.asarray(i), j=np.asarray(j), o=np.asarray(o), weights=weights)


def _gather(depth: np.ndarray, points: np.ndarray) -> np.ndarray:
    height, width = depth.shape
    x = points[:, 0]
    y = points[:, 1]
    if (x < 0).any() or (x >= width).any() or (y < 0).any() or (y >= height).any():
        raise ValueError("query point outside the depth map")
    return depth[y, x]


def query_losses(depth, queries: QuerySet) -> np.ndarray:
    """Vector of per-query losses over a depth map."""
    z = check_scalar_map(depth)
    zi = _gather(z, queries.i)
    zj = _gather(z, queries.j)
    gap = zi - zj
    losses = np.empty(len(queries), dtype=np.float64)
    pos = queries.o == 1
    neg = queries.o == -1
    same = queries.o == 0
    losses[pos] = _softplus_vec(-gap[pos])
    losses[neg] = _softplus_vec(gap[neg])
    losses[same] = gap[same] ** 2
    return losses


def ranking_loss(depth, queries: QuerySet) -> float:
    """Sum of query_loss over all queries of the set."""
    return float(np.sum(query_losses(depth, queries)))


def top_fraction(losses, fraction: float = 0.75) -> np.ndarray:
    """Indices of the ceil(fraction * K) largest losses, ties resolved toward
    lower indices; returned in ascending index order."""
    arr = np.asarray(losses, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError("losses must be non-empty")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    k = math.ceil(fraction * arr.size)
    order = np.argsort(-arr, kind="stable")
    return np.sort(order[:k])


def predict_orders(depth, queries: QuerySet, band: float = 0.0) -> np.ndarray:
    """Ordinals implied by a depth map: +1 / -1 outside the equality band,
    0 when |z_i - z_j| <= band."""
    if band < 0:
        raise ValueError("band must be >= 0")
    z = check_scalar_map(depth)
    gap = _gather(z, queries.i) - _gather(z, queries.j)
    pred = np.zeros(len(queries), dtype=np.int64)
    pred[gap > band] = 1
    pred[gap < -band] = -1
    return pred


def whdr(predicted_orders, queries: QuerySet) -> float:
    """Weighted fraction of queries whose predicted ordinal disagrees with
    the ground truth."""
    pred = np.asarray(predicted_orders, dtype=np.int64).reshape(-1)
    if len(pred) != len(queries):
        raise ValueError("prediction count must match query count")
    weights = queries.resolved_weights()
    total = float(weights.sum())
    if total <= 0.0:
        raise ValueError("total weight must be positive")
    return float(np.sum(weights * (pred != queries.o)) / total)


def whdr_from_depth(depth, queries: QuerySet, band: float = 0.0) -> float:
    return whdr(predict_orders(depth, queries, band), queries)
