"""Binary slice and field files.

Slice record, little-endian::

    magic "VKDF" | u16 version | u32 m | u32 n
    f64 min_x | f64 min_y | f64 cell_size
    f64 slot_start_t | f64 slot_end_t | f64 R | f64 kernel_constant
    u8 weighting_mode | u64 contributing_vector_count
    m*n cells, row-major over (i, j), each (f64 density, f64 vx, f64 vy)

A field file is a u32 slice count followed by that many slice records. Slot
indices are not stored; they are the record positions within the file.
"""

import struct

import numpy as np

from .field import FieldSlice, GridSpec, KernelParams, WeightingMode
from .ingest import TimeSlot

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "DecodeError",
    "serialize_slice",
    "deserialize_slice",
    "serialize_field",
    "deserialize_field",
    "read_field",
    "write_field",
]

MAGIC = b"VKDF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHII7dBQ")
_COUNT = struct.Struct("<I")
_CELL_BYTES = 24
# refuse headers describing absurd grids before allocating anything
_MAX_CELLS = 1 << 31


class DecodeError(ValueError):
    """Malformed slice or field bytes."""


def serialize_slice(slice_):
    g = slice_.grid
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        g.m,
        g.n,
        g.min_x,
        g.min_y,
        g.cell_size,
        slice_.slot.start_t,
        slice_.slot.end_t,
        slice_.params.bandwidth,
        slice_.params.constant,
        int(slice_.mode),
        slice_.contributing_vector_count,
    )
    cells = np.stack([slice_.density, slice_.vx, slice_.vy], axis=-1).astype("<f8")
    return header + cells.tobytes(order="C")


def _decode_slice(buf, offset, index):
    if len(buf) - offset < _HEADER.size:
        raise DecodeError(
            f"truncated slice header at byte {offset}: need {_HEADER.size} bytes, "
            f"have {len(buf) - offset}"
        )
    (magic, version, m, n, min_x, min_y, cell_size, t0, t1, R, const, mode,
     count) = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise DecodeError(f"bad magic at byte {offset}: expected {MAGIC!r}, got {magic!r}")
    if version != FORMAT_VERSION:
        raise DecodeError(f"unsupported format version {version}")
    if m == 0 or n == 0 or m * n > _MAX_CELLS:
        raise DecodeError(f"dimension overflow: {m} x {n} cells")
    body = offset + _HEADER.size
    nbytes = m * n * _CELL_BYTES
    if len(buf) - body < nbytes:
        raise DecodeError(
            f"truncated cell payload: need {nbytes} bytes for {m}x{n} cells, have {len(buf) - body}"
        )
    try:
        grid = GridSpec(min_x, min_y, cell_size, m, n)
        slot = TimeSlot(index, t0, t1)
        params = KernelParams(R, const)
        mode = WeightingMode(mode)
    except ValueError as exc:
        raise DecodeError(f"invalid slice header: {exc}") from exc
    cells = np.frombuffer(buf, dtype="<f8", count=m * n * 3, offset=body).reshape(m, n, 3)
    cells = cells.astype(np.float64)
    sl = FieldSlice(slot, grid, params, mode, cells[..., 0], cells[..., 1], cells[..., 2], count)
    return sl, body + nbytes


def deserialize_slice(data, index=0):
    """Decode one slice record; ``index`` becomes the slot index."""
    buf = bytes(data)
    sl, end = _decode_slice(buf, 0, index)
    if end != len(buf):
        raise DecodeError(f"{len(buf) - end} trailing bytes after slice record")
    return sl


def serialize_field(slices):
    slices = sorted(slices, key=lambda s: s.slot.index)
    return _COUNT.pack(len(slices)) + b"".join(serialize_slice(s) for s in slices)


def deserialize_field(data):
    buf = bytes(data)
    if len(buf) < _COUNT.size:
        raise DecodeError("truncated field file: missing slice count")
    (count,) = _COUNT.unpack_from(buf, 0)
    offset = _COUNT.size
    slices = []
    for k in range(count):
        sl, offset = _decode_slice(buf, offset, k)
        slices.append(sl)
    if offset != len(buf):
        raise DecodeError(f"{len(buf) - offset} trailing bytes after {count} slice records")
    return slices


def write_field(path, slices):
    with open(path, "wb") as fh:
        fh.write(serialize_field(slices))


def read_field(path):
    with open(path, "rb") as fh:
        return deserialize_field(fh.read())
