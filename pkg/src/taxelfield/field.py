"""Per-slot vector kernel density fields.

Each :class:`FieldSlice` holds, for every grid cell, the summed quartic line
kernel density of the travel vectors in one time slot, plus the accumulated
direction vector of those travel vectors (the cell's travel momentum).

Cell arrays have shape ``(m, n)`` and are indexed ``[i, j]`` with ``i``
running along x and ``j`` along y.
"""

import math
import threading
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .geometry import point_segment_distance_array
from .ingest import TimeSlot, VectorBatch, clip_batch, tile_slots

__all__ = [
    "DEFAULT_KERNEL_CONSTANT",
    "GridSpec",
    "KernelParams",
    "WeightingMode",
    "FieldSlice",
    "FieldMismatchError",
    "FieldStore",
    "kernel_value",
    "build_slice",
    "build_field",
    "update_slice",
    "empty_slice",
]

DEFAULT_KERNEL_CONSTANT = 21.75

# pairs (vector, candidate cell) evaluated per numpy batch
_PAIR_BUDGET = 1 << 21


class FieldMismatchError(ValueError):
    """Raised when slices or parameters that must agree do not."""


class WeightingMode(IntEnum):
    """How a travel vector's direction is weighted into a cell vector.

    KERNEL
        unit direction of the vector times the kernel value at the cell.
    LITERAL
        raw displacement divided by the cell-to-segment distance, the distance
        clamped below at ``cell_size / 100``.
    """

    KERNEL = 0
    LITERAL = 1

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"kernel": cls.KERNEL, "kernel-weighted": cls.KERNEL, "literal": cls.LITERAL}
        if key not in aliases:
            raise ValueError(f"unknown weighting mode {value!r}; use 'kernel-weighted' or 'literal'")
        return aliases[key]

    @property
    def label(self):
        return "kernel-weighted" if self is WeightingMode.KERNEL else "literal"


@dataclass(frozen=True)
class GridSpec:
    """Regular raster of square cells anchored at ``(min_x, min_y)``."""

    min_x: float
    min_y: float
    cell_size: float
    m: int
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.min_x) and math.isfinite(self.min_y)):
            raise ValueError("grid origin must be finite")
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if int(self.m) < 1 or int(self.n) < 1:
            raise ValueError(f"grid needs at least one cell, got {self.m}x{self.n}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_bounds(cls, min_x, min_y, max_x, max_y, cell_size):
        if not cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {cell_size}")
        if not (max_x > min_x and max_y > min_y):
            raise ValueError("grid bounds need max_x > min_x and max_y > min_y")
        m = math.ceil((max_x - min_x) / cell_size)
        n = math.ceil((max_y - min_y) / cell_size)
        return cls(float(min_x), float(min_y), float(cell_size), m, n)

    @property
    def max_x(self):
        return self.min_x + self.m * self.cell_size

    @property
    def max_y(self):
        return self.min_y + self.n * self.cell_size

    @property
    def shape(self):
        return (self.m, self.n)

    def center(self, i, j):
        return (
            self.min_x + (i + 0.5) * self.cell_size,
            self.min_y + (j + 0.5) * self.cell_size,
        )

    def centers(self):
        """Cell-center coordinate arrays, each of shape ``(m, n)``."""
        cx = self.min_x + (np.arange(self.m) + 0.5) * self.cell_size
        cy = self.min_y + (np.arange(self.n) + 0.5) * self.cell_size
        return np.meshgrid(cx, cy, indexing="ij")

    def translated(self, dx, dy):
        return GridSpec(self.min_x + dx, self.min_y + dy, self.cell_size, self.m, self.n)


@dataclass(frozen=True)
class KernelParams:
    bandwidth: float
    constant: float = DEFAULT_KERNEL_CONSTANT
    kind: str = "quartic"

    def __post_init__(self):
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if not (self.constant > 0 and math.isfinite(self.constant)):
            raise ValueError(f"kernel constant must be positive, got {self.constant}")
        if self.kind != "quartic":
            raise ValueError(f"only the quartic kernel is implemented, got {self.kind!r}")

    @property
    def peak(self):
        """Kernel value at distance zero, ``c / (pi R^2)``."""
        return self.constant / (math.pi * (self.bandwidth * self.bandwidth))


def kernel_value(r, params):
    """Quartic kernel ``c/(pi R^2) * max(0, 1 - r^2/R^2)^2``."""
    R2 = params.bandwidth * params.bandwidth
    q = max(0.0, 1.0 - (r * r) / R2)
    return params.peak * (q * q)


@dataclass(frozen=True, eq=False)
class FieldSlice:
    """One time slot of the field: density and momentum per grid cell."""

    slot: TimeSlot
    grid: GridSpec
    params: KernelParams
    mode: WeightingMode
    density: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    contributing_vector_count: int = 0

    def __post_init__(self):
        for name in ("density", "vx", "vy"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.shape != self.grid.shape:
                raise ValueError(f"{name} has shape {arr.shape}, grid is {self.grid.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "mode", WeightingMode.parse(self.mode))

    def __eq__(self, other):
        if not isinstance(other, FieldSlice):
            return NotImplemented
        return (
            self.slot == other.slot
            and self.grid == other.grid
            and self.params == other.params
            and self.mode == other.mode
            and self.contributing_vector_count == other.contributing_vector_count
            and all(
                np.array_equal(getattr(self, a), getattr(other, a))
                for a in ("density", "vx", "vy")
            )
        )

    __hash__ = None

    def is_zero(self):
        return not (self.density.any() or self.vx.any() or self.vy.any())

    def compatible_with(self, other):
        """List of ``(name, self_value, other_value)`` for settings that differ."""
        diffs = []
        for name, a, b in (
            ("grid", self.grid, other.grid),
            ("bandwidth", self.params.bandwidth, other.params.bandwidth),
            ("kernel_constant", self.params.constant, other.params.constant),
            ("weighting_mode", self.mode.label, other.mode.label),
        ):
            if a != b:
                diffs.append((name, a, b))
        return diffs


def empty_slice(slot, grid, params, mode=WeightingMode.KERNEL):
    zeros = np.zeros(grid.shape)
    return FieldSlice(slot, grid, params, WeightingMode.parse(mode), zeros, zeros, zeros, 0)


def _candidate_ranges(vb, grid, R):
    """Inclusive index ranges of cells whose centers may lie within R."""
    cs = grid.cell_size
    lo_x = np.minimum(vb.start_x, vb.end_x) - R
    hi_x = np.maximum(vb.start_x, vb.end_x) + R
    lo_y = np.minimum(vb.start_y, vb.end_y) - R
    hi_y = np.maximum(vb.start_y, vb.end_y) + R
    # one cell of slack absorbs rounding; the exact distance test decides
    i0 = np.clip(np.floor((lo_x - grid.min_x) / cs - 0.5), 0, grid.m) .astype(np.int64)
    i1 = np.clip(np.ceil((hi_x - grid.min_x) / cs - 0.5), -1, grid.m - 1).astype(np.int64)
    j0 = np.clip(np.floor((lo_y - grid.min_y) / cs - 0.5), 0, grid.n).astype(np.int64)
    j1 = np.clip(np.ceil((hi_y - grid.min_y) / cs - 0.5), -1, grid.n - 1).astype(np.int64)
    ni = np.maximum(i1 - i0 + 1, 0)
    nj = np.maximum(j1 - j0 + 1, 0)
    return i0, j0, ni, nj


def _contributions(vb, grid, params, mode):
    """Yield ``(flat_cell_index, density, vx, vy)`` arrays, one batch at a time.

    Only (vector, cell) pairs with the cell center inside the bandwidth are
    emitted.
    """
    if not len(vb):
        return
    R = params.bandwidth
    R2 = R * R
    peak = params.peak
    floor_r = grid.cell_size / 100.0
    i0, j0, ni, nj = _candidate_ranges(vb, grid, R)
    counts = ni * nj
    live = np.flatnonzero(counts)
    if not live.size:
        return
    first_pair = np.cumsum(counts[live]) - counts[live]
    batch_id = first_pair // _PAIR_BUDGET
    bounds = np.concatenate(([0], np.flatnonzero(np.diff(batch_id)) + 1, [live.size]))

    for a, b in zip(bounds[:-1], bounds[1:]):
        idx = live[a:b]
        k = counts[idx]
        total = int(k.sum())
        owner = np.repeat(np.arange(idx.size), k)
        offset = np.arange(total) - np.repeat(np.cumsum(k) - k, k)
        njr = nj[idx][owner]
        ci = i0[idx][owner] + offset // njr
        cj = j0[idx][owner] + offset % njr
        vi = idx[owner]

        sx, sy = vb.start_x[vi], vb.start_y[vi]
        ex, ey = vb.end_x[vi], vb.end_y[vi]
        cx = grid.min_x + (ci + 0.5) * grid.cell_size
        cy = grid.min_y + (cj + 0.5) * grid.cell_size
        r = point_segment_distance_array(cx, cy, sx, sy, ex, ey)
        inside = r <= R
        if not inside.any():
            continue
        r = r[inside]
        sx, sy, ex, ey = sx[inside], sy[inside], ex[inside], ey[inside]
        flat = ci[inside] * grid.n + cj[inside]

        q = 1.0 - (r * r) / R2
        dens = peak * (q * q)
        dx = ex - sx
        dy = ey - sy
        if mode is WeightingMode.KERNEL:
            length = np.sqrt(dx * dx + dy * dy)
            moving = length > 0.0
            safe = np.where(moving, length, 1.0)
            wx = np.where(moving, dens * (dx / safe), 0.0)
            wy = np.where(moving, dens * (dy / safe), 0.0)
        else:
            rr = np.maximum(r, floor_r)
            on = dens > 0.0
            wx = np.where(on, dx / rr, 0.0)
            wy = np.where(on, dy / rr, 0.0)
        yield flat, dens, wx, wy


def _accumulate(density, vx, vy, vb, grid, params, mode, sparse=False):
    """Add the contributions of ``vb`` into flat accumulator arrays in place."""
    size = grid.m * grid.n
    for flat, dens, wx, wy in _contributions(vb, grid, params, mode):
        if sparse:
            np.add.at(density, flat, dens)
            np.add.at(vx, flat, wx)
            np.add.at(vy, flat, wy)
        else:
            density += np.bincount(flat, dens, minlength=size)
            vx += np.bincount(flat, wx, minlength=size)
            vy += np.bincount(flat, wy, minlength=size)


def _default_slot(vb):
    if len(vb):
        return TimeSlot(0, *vb.time_range())
    return TimeSlot(0, 0.0, 1.0)


def build_slice(vectors, grid, params, mode=WeightingMode.KERNEL, slot=None):
    """Vector kernel density of already-clipped travel vectors on ``grid``.

    Density at a cell is the sum of kernel values over vectors within the
    bandwidth of its center; the cell vector sums each such vector's weighted
    direction (see :class:`WeightingMode`). Each vector only visits the cells
    inside its bandwidth-expanded bounding box.
    """
    mode = WeightingMode.parse(mode)
    vb = VectorBatch.from_vectors(vectors)
    size = grid.m * grid.n
    density, vx, vy = np.zeros(size), np.zeros(size), np.zeros(size)
    _accumulate(density, vx, vy, vb, grid, params, mode)
    return FieldSlice(
        slot if slot is not None else _default_slot(vb),
        grid,
        params,
        mode,
        density.reshape(grid.shape),
        vx.reshape(grid.shape),
        vy.reshape(grid.shape),
        len(vb),
    )


def update_slice(slice_, new_vectors, params=None, mode=None, grid=None):
    """New slice equal to ``slice_`` plus the contributions of ``new_vectors``.

    Vectors are clipped to the slice's slot first. Only cells within the
    bandwidth of a new vector change. ``params``, ``mode`` and ``grid``, when
    given, must match the slice's own settings.
    """
    diffs = []
    if grid is not None and grid != slice_.grid:
        diffs.append(("grid", slice_.grid, grid))
    if params is not None and params != slice_.params:
        diffs.append(("kernel", slice_.params, params))
    if mode is not None and WeightingMode.parse(mode) != slice_.mode:
        diffs.append(("weighting_mode", slice_.mode.label, WeightingMode.parse(mode).label))
    if diffs:
        detail = "; ".join(f"{k}: slice={a} given={b}" for k, a, b in diffs)
        raise FieldMismatchError(f"update parameters do not match slice ({detail})")

    vb = clip_batch(new_vectors, slice_.slot)
    if not len(vb):
        return slice_
    density = slice_.density.ravel().copy()
    vx = slice_.vx.ravel().copy()
    vy = slice_.vy.ravel().copy()
    _accumulate(density, vx, vy, vb, slice_.grid, slice_.params, slice_.mode, sparse=True)
    shape = slice_.grid.shape
    return FieldSlice(
        slice_.slot,
        slice_.grid,
        slice_.params,
        slice_.mode,
        density.reshape(shape),
        vx.reshape(shape),
        vy.reshape(shape),
        slice_.contributing_vector_count + len(vb),
    )


def build_field(vectors, horizon, slot_duration, grid, params, mode=WeightingMode.KERNEL):
    """Build one slice per time slot tiling ``horizon = (start_t, end_t)``."""
    if not slot_duration > 0:
        raise ValueError(f"slot_duration must be positive, got {slot_duration}")
    vb = VectorBatch.from_vectors(vectors)
    slots = tile_slots(horizon[0], horizon[1], slot_duration)
    return [build_slice(clip_batch(vb, s), grid, params, mode, slot=s) for s in slots]


@dataclass
class FieldStore:
    """Slices of one field with atomic, lock-guarded replacement.

    Readers call :meth:`snapshot` (or index the store) and keep working on
    that immutable tuple; writers build the replacement slice outside the
    lock and swap it in, so a reader never sees a half-updated slice.
    """

    slices: tuple = ()
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        self.slices = tuple(self.slices)

    def snapshot(self):
        with self._lock:
            return self.slices

    def __len__(self):
        return len(self.slices)

    def __getitem__(self, index):
        return self.snapshot()[index]

    def update(self, index, new_vectors):
        current = self[index]
        updated = update_slice(current, new_vectors)
        with self._lock:
            if self.slices[index] is not current:
                raise RuntimeError("concurrent writers on the same slot")
            self.slices = self.slices[:index] + (updated,) + self.slices[index + 1:]
        return updated

    def extend(self, slices):
        with self._lock:
            self.slices = self.slices + tuple(slices)
