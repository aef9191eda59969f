"""Binary skeletonization via two-subiteration parallel thinning.

Each full iteration runs two deletion phases over the whole image at once;
pixels are removed only where doing so keeps the 8-connected structure
intact, so the result is a one-pixel-wide skeleton that is a subset of the
input, idempotent under re-thinning, and component-preserving.
"""

from __future__ import annotations

import numpy as np

from .validation import check_mask


def _neighbors(padded: np.ndarray):
    """Eight neighbor planes of the zero-padded image, clockwise from north."""
    return (
        padded[:-2, 1:-1],  # n
        padded[:-2, 2:],    # ne
        padded[1:-1, 2:],   # e
        padded[2:, 2:],     # se
        padded[2:, 1:-1],   # s
        padded[2:, :-2],    # sw
        padded[1:-1, :-2],  # w
        padded[:-2, :-2],   # nw
    )


def _deletable(img: np.ndarray, phase: int) -> np.ndarray:
    padded = np.pad(img, 1, mode="constant", constant_values=False)
    n, ne, e, se, s, sw, w, nw = _neighbors(padded)

    crossings = (
        (~n & (ne | e)).astype(np.uint8)
        + (~e & (se | s)).astype(np.uint8)
        + (~s & (sw | w)).astype(np.uint8)
        + (~w & (nw | n)).astype(np.uint8)
    )
    n1 = (
        (nw | n).astype(np.uint8)
        + (ne | e).astype(np.uint8)
        + (se | s).astype(np.uint8)
        + (sw | w).astype(np.uint8)
    )
    n2 = (
        (n | ne).astype(np.uint8)
        + (e | se).astype(np.uint8)
        + (s | sw).astype(np.uint8)
        + (w | nw).astype(np.uint8)
    )
    count = np.minimum(n1, n2)
    if phase == 0:
        blocked = (s | sw | ~nw) & w
    else:
        blocked = (n | ne | ~se) & e
    return img & (crossings == 1) & (count >= 2) & (count <= 3) & ~blocked


def thin(mask) -> np.ndarray:
    """Reduce a binary mask to its one-pixel-wide 8-connected skeleton."""
    img = check_mask(mask).copy()
    while True:
        changed = False
        for phase in (0, 1):
            deletion = _deletable(img, phase)
            if deletion.any():
                img[deletion] = False
                changed = True
        if not changed:
            return img
