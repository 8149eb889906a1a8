"""Direct triple-loop field construction, kept as a correctness oracle.

Loops over every cell and every vector with plain floats, no pruning and no
numpy. Far too slow for real data; used to check :func:`field.build_slice`.
"""

import math

import numpy as np

from .field import FieldSlice, WeightingMode
from .ingest import TimeSlot


def _distance(px, py, ax, ay, bx, by):
    # projection onto the segment, clamped to its endpoints
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        qx, qy = ax, ay
        ex, ey = px - qx, py - qy
        return math.sqrt(ex * ex + ey * ey)
    t = ((px - ax) * dx + (py - ay) * dy) / seg2
    if t <= 0.0:
        ex, ey = px - ax, py - ay
    elif t >= 1.0:
        ex, ey = px - bx, py - by
    else:
        ex, ey = (px - ax) - t * dx, (py - ay) - t * dy
    return math.sqrt(ex * ex + ey * ey)


def build_slice_bruteforce(vectors, grid, params, mode=WeightingMode.KERNEL, slot=None):
    mode = WeightingMode.parse(mode)
    vectors = list(vectors)
    R = params.bandwidth
    density = np.zeros(grid.shape)
    vx = np.zeros(grid.shape)
    vy = np.zeros(grid.shape)
    for i in range(grid.m):
        for j in range(grid.n):
            cx = grid.min_x + (i + 0.5) * grid.cell_size
            cy = grid.min_y + (j + 0.5) * grid.cell_size
            d = ax = ay = 0.0
            for v in vectors:
                r = _distance(cx, cy, v.start_x, v.start_y, v.end_x, v.end_y)
                if r > R:
                    continue
                q = max(0.0, 1.0 - (r * r) / (R * R))
                kde = params.constant / (math.pi * (R * R)) * (q * q)
                d += kde
                dx, dy = v.end_x - v.start_x, v.end_y - v.start_y
                if mode is WeightingMode.KERNEL:
                    length = math.sqrt(dx * dx + dy * dy)
                    if length > 0.0:
                        ax += kde * (dx / length)
                        ay += kde * (dy / length)
                elif kde > 0.0:
                    rr = max(r, grid.cell_size / 100.0)
                    ax += dx / rr
                    ay += dy / rr
            density[i, j] = d
            vx[i, j] = ax
            vy[i, j] = ay
    if slot is None:
        slot = (
            TimeSlot(0, min(v.start_t for v in vectors), max(v.end_t for v in vectors))
            if vectors
            else TimeSlot(0, 0.0, 1.0)
        )
    return FieldSlice(slot, grid, params, mode, density, vx, vy, len(vectors))
