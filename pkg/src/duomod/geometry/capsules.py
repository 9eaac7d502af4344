"""Capsule collision primitives for kinematic chains.

Links are capsules around the FK segments. The only primitive needed is the
minimum distance between two segments, vectorized over a batch axis.
"""

from __future__ import annotations

import numpy as np


def segment_distance(p1: np.ndarray, q1: np.ndarray, p2: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Minimum distance between segments [p1,q1] and [p2,q2], batched over leading axes.

    Standard clamped closest-point parametrization (Ericson, Real-Time
    Collision Detection), written branch-free for numpy batches.
    """
    p1 = np.asarray(p1, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    f = np.sum(d2 * r, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    denom = a * e - b * b

    tiny = 1e-14
    # General case; degenerate (parallel or point) segments fall out of the clamps.
    s = np.where(denom > tiny, (b * f - c * e) / np.where(denom > tiny, denom, 1.0), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = np.where(e > tiny, (b * s + f) / np.where(e > tiny, e, 1.0), 0.0)
    t_clamped = np.clip(t, 0.0, 1.0)
    # Re-derive s where t was clamped.
    s = np.where(
        t != t_clamped,
        np.clip(np.where(a > tiny, (t_clamped * b - c) / np.where(a > tiny, a, 1.0), 0.0), 0.0, 1.0),
        s,
    )
    t = t_clamped
    closest1 = p1 + s[..., None] * d1
    closest2 = p2 + t[..., None] * d2
    return np.linalg.norm(closest1 - closest2, axis=-1)


def point_segment_distance(pt: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from points to segments [a, b], batched."""
    pt = np.asarray(pt, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    denom = np.sum(d * d, axis=-1)
    t = np.sum((pt - a) * d, axis=-1) / np.where(denom > 1e-14, denom, 1.0)
    t = np.clip(np.where(denom > 1e-14, t, 0.0), 0.0, 1.0)
    proj = a + t[..., None] * d
    return np.linalg.norm(pt - proj, axis=-1)
