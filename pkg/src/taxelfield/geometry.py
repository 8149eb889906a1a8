"""Planar distance primitives used by the field builder."""

import math

import numpy as np

__all__ = ["point_segment_distance", "point_segment_distance_array"]


def point_segment_distance(px, py, ax, ay, bx, by):
    """Euclidean distance from point P to the closed segment AB.

    A degenerate segment (A == B) reduces to point-to-point distance.
    """
    dx = bx - ax
    dy = by - ay
    wx = px - ax
    wy = py - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return math.sqrt(wx * wx + wy * wy)
    t = (wx * dx + wy * dy) / seg2
    if t <= 0.0:
        ex, ey = wx, wy
    elif t >= 1.0:
        ex, ey = px - bx, py - by
    else:
        ex = wx - t * dx
        ey = wy - t * dy
    return math.sqrt(ex * ex + ey * ey)


def point_segment_distance_array(px, py, ax, ay, bx, by):
    """Vectorized :func:`point_segment_distance` over broadcastable arrays.

    Uses the same arithmetic, in the same order, as the scalar version so the
    two agree to the last bit on identical inputs.
    """
    px, py, ax, ay, bx, by = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64) for a in (px, py, ax, ay, bx, by))
    )
    dx = bx - ax
    dy = by - ay
    wx = px - ax
    wy = py - ay
    seg2 = dx * dx + dy * dy
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (wx * dx + wy * dy) / seg2
    ex = wx - t * dx
    ey = wy - t * dy
    before = (seg2 == 0.0) | (t <= 0.0)
    after = ~before & (t >= 1.0)
    ex = np.where(before, wx, np.where(after, px - bx, ex))
    ey = np.where(before, wy, np.where(after, py - by, ey))
    return np.sqrt(ex * ex + ey * ey)
