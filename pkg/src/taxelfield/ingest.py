"""GPS point ingestion, travel-vector construction and time-slot clipping.

Points and vectors are held column-wise (:class:`PointTable`,
:class:`VectorBatch`) so day-scale fleets stay cheap; both still behave as
sequences of the scalar :class:`GpsPoint` / :class:`TravelVector` records.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

__all__ = [
    "METERS_PER_DEGREE",
    "GpsPoint",
    "TravelVector",
    "TimeSlot",
    "PointTable",
    "VectorBatch",
    "SchemaConfig",
    "ParseReport",
    "FilterConfig",
    "FilterReport",
    "IngestError",
    "parse_points",
    "project_coords",
    "unproject_coords",
    "build_travel_vectors",
    "clip_to_slot",
    "clip_batch",
    "tile_slots",
    "slot_index_of",
]

METERS_PER_DEGREE = 111320.0

_COLUMN_NAMES = {"vehicle_id", "timestamp", "lon", "lat", "x", "y", "status", "_"}


class IngestError(Exception):
    """Raised when an input stream cannot be read at all."""


@dataclass(frozen=True)
class GpsPoint:
    vehicle_id: object
    timestamp: float
    x: float
    y: float
    raw_lon: float | None = None
    raw_lat: float | None = None
    status: int | None = None


@dataclass(frozen=True)
class TravelVector:
    """Directed space-time segment between two consecutive fixes."""

    start_x: float
    start_y: float
    end_x: float
    end_y: float
    start_t: float
    end_t: float
    vehicle_id: object = None

    def __post_init__(self):
        if not self.end_t > self.start_t:
            raise ValueError(
                f"travel vector needs end_t > start_t, got {self.start_t} -> {self.end_t}"
            )

    @property
    def duration(self):
        return self.end_t - self.start_t

    @property
    def length(self):
        return math.hypot(self.end_x - self.start_x, self.end_y - self.start_y)


@dataclass(frozen=True)
class TimeSlot:
    """Half-open time interval ``[start_t, end_t)``."""

    index: int
    start_t: float
    end_t: float

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("slot index must be nonnegative")
        if not self.end_t > self.start_t:
            raise ValueError(f"slot needs end_t > start_t, got [{self.start_t}, {self.end_t})")

    @property
    def duration(self):
        return self.end_t - self.start_t


def tile_slots(start_t, end_t, slot_duration):
    """Consecutive slots of equal width covering ``[start_t, end_t)``.

    The last slot may extend past ``end_t`` so that every slot has the same
    width.
    """
    if not slot_duration > 0:
        raise ValueError(f"slot_duration must be positive, got {slot_duration}")
    if not end_t > start_t:
        raise ValueError("horizon must have end_t > start_t")
    count = int(math.ceil((end_t - start_t) / slot_duration))
    return [
        TimeSlot(k, start_t + k * slot_duration, start_t + (k + 1) * slot_duration)
        for k in range(count)
    ]


def slot_index_of(t, origin, slot_duration):
    """Index of the half-open slot containing time ``t``."""
    return int(math.floor((t - origin) / slot_duration))


# --------------------------------------------------------------------------
# coordinates


def project_coords(lon, lat, ref_lon, ref_lat):
    """Local equirectangular projection to meters around a reference point.

    ``x = (lon - ref_lon) * cos(ref_lat) * M`` and ``y = (lat - ref_lat) * M``
    with ``M = 111320`` meters per degree. Works elementwise on arrays.
    """
    k = math.cos(math.radians(ref_lat)) * METERS_PER_DEGREE
    return (lon - ref_lon) * k, (lat - ref_lat) * METERS_PER_DEGREE


def unproject_coords(x, y, ref_lon, ref_lat):
    """Inverse of :func:`project_coords`."""
    k = math.cos(math.radians(ref_lat)) * METERS_PER_DEGREE
    return ref_lon + x / k, ref_lat + y / METERS_PER_DEGREE


# --------------------------------------------------------------------------
# columnar containers


def _float_col(values, n):
    if values is None:
        return np.full(n, np.nan)
    return np.asarray(values, dtype=np.float64)


class PointTable:
    """Column-wise collection of GPS fixes, indexable as ``GpsPoint`` records.

    ``status`` uses -1 for "not recorded"; ``lon``/``lat`` use NaN.
    """

    def __init__(self, vehicle_id, timestamp, x, y, lon=None, lat=None, status=None):
        self.timestamp = np.asarray(timestamp, dtype=np.float64)
        n = self.timestamp.shape[0]
        self.vehicle_id = np.asarray(vehicle_id)
        if self.vehicle_id.shape[0] != n and n == 0:
            self.vehicle_id = np.asarray([], dtype=object)
        self.x = np.asarray(x, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.float64)
        self.lon = _float_col(lon, n)
        self.lat = _float_col(lat, n)
        self.status = (
            np.full(n, -1, dtype=np.int64) if status is None else np.asarray(status, dtype=np.int64)
        )
        for name in ("vehicle_id", "x", "y", "lon", "lat", "status"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"column {name!r} has length {len(getattr(self, name))}, expected {n}")

    @classmethod
    def empty(cls):
        return cls(np.asarray([], dtype=object), [], [], [])

    @classmethod
    def from_points(cls, points):
        points = list(points)
        return cls(
            np.asarray([p.vehicle_id for p in points], dtype=object),
            [p.timestamp for p in points],
            [p.x for p in points],
            [p.y for p in points],
            [np.nan if p.raw_lon is None else p.raw_lon for p in points],
            [np.nan if p.raw_lat is None else p.raw_lat for p in points],
            [-1 if p.status is None else p.status for p in points],
        )

    @classmethod
    def concat(cls, tables):
        tables = [t for t in tables if len(t)]
        if not tables:
            return cls.empty()
        return cls(
            np.concatenate([t.vehicle_id.astype(object) for t in tables]),
            np.concatenate([t.timestamp for t in tables]),
            np.concatenate([t.x for t in tables]),
            np.concatenate([t.y for t in tables]),
            np.concatenate([t.lon for t in tables]),
            np.concatenate([t.lat for t in tables]),
            np.concatenate([t.status for t in tables]),
        )

    def __len__(self):
        return self.timestamp.shape[0]

    def _take(self, idx):
        return PointTable(
            self.vehicle_id[idx], self.timestamp[idx], self.x[idx], self.y[idx],
            self.lon[idx], self.lat[idx], self.status[idx],
        )

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            lon, lat, status = self.lon[idx], self.lat[idx], self.status[idx]
            vid = self.vehicle_id[idx]
            return GpsPoint(
                vid.item() if isinstance(vid, np.generic) else vid,
                float(self.timestamp[idx]),
                float(self.x[idx]),
                float(self.y[idx]),
                None if np.isnan(lon) else float(lon),
                None if np.isnan(lat) else float(lat),
                None if status < 0 else int(status),
            )
        return self._take(idx)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def by_vehicle(self):
        """Mapping of vehicle id to that vehicle's points in time order."""
        order = np.lexsort((self.timestamp, self.vehicle_id.astype(str)))
        grouped = {}
        for i in order:
            vid = self.vehicle_id[i]
            grouped.setdefault(vid.item() if isinstance(vid, np.generic) else vid, []).append(self[int(i)])
        return grouped


_VECTOR_COLUMNS = ("start_x", "start_y", "end_x", "end_y", "start_t", "end_t")


class VectorBatch:
    """Column-wise collection of travel vectors, indexable as ``TravelVector``."""

    def __init__(self, start_x, start_y, end_x, end_y, start_t, end_t, vehicle_id=None):
        self.start_x = np.asarray(start_x, dtype=np.float64)
        n = self.start_x.shape[0]
        self.start_y = np.asarray(start_y, dtype=np.float64)
        self.end_x = np.asarray(end_x, dtype=np.float64)
        self.end_y = np.asarray(end_y, dtype=np.float64)
        self.start_t = np.asarray(start_t, dtype=np.float64)
        self.end_t = np.asarray(end_t, dtype=np.float64)
        self.vehicle_id = (
            np.full(n, None, dtype=object) if vehicle_id is None else np.asarray(vehicle_id)
        )
        if n == 0 and self.vehicle_id.shape != (0,):
            self.vehicle_id = np.asarray([], dtype=object)
        for name in _VECTOR_COLUMNS[1:] + ("vehicle_id",):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"column {name!r} does not have length {n}")
        if n and not np.all(self.end_t > self.start_t):
            raise ValueError("every travel vector needs end_t > start_t")

    @classmethod
    def empty(cls):
        return cls(*([[]] * 6))

    @classmethod
    def from_vectors(cls, vectors):
        if isinstance(vectors, VectorBatch):
            return vectors
        vectors = list(vectors)
        cols = [[getattr(v, c) for v in vectors] for c in _VECTOR_COLUMNS]
        return cls(*cols, vehicle_id=np.asarray([v.vehicle_id for v in vectors], dtype=object))

    @classmethod
    def concat(cls, batches):
        batches = [cls.from_vectors(b) for b in batches]
        batches = [b for b in batches if len(b)]
        if not batches:
            return cls.empty()
        cols = [np.concatenate([getattr(b, c) for b in batches]) for c in _VECTOR_COLUMNS]
        vids = np.concatenate([b.vehicle_id.astype(object) for b in batches])
        return cls(*cols, vehicle_id=vids)

    def __len__(self):
        return self.start_x.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            vid = self.vehicle_id[idx]
            return TravelVector(
                *(float(getattr(self, c)[idx]) for c in _VECTOR_COLUMNS),
                vehicle_id=vid.item() if isinstance(vid, np.generic) else vid,
            )
        return VectorBatch(
            *(getattr(self, c)[idx] for c in _VECTOR_COLUMNS), vehicle_id=self.vehicle_id[idx]
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def translated(self, dx, dy):
        return VectorBatch(
            self.start_x + dx, self.start_y + dy, self.end_x + dx, self.end_y + dy,
            self.start_t, self.end_t, self.vehicle_id,
        )

    def time_range(self):
        if not len(self):
            raise ValueError("empty vector batch has no time range")
        return float(self.start_t.min()), float(self.end_t.max())


# --------------------------------------------------------------------------
# clipping


def _position_at(sx, sy, ex, ey, st, et, t):
    # One formula for every boundary so adjacent pieces share endpoints exactly.
    frac = (t - st) / (et - st)
    return sx + frac * (ex - sx), sy + frac * (ey - sy)


def clip_to_slot(v, slot):
    """Sub-vector of ``v`` falling inside ``slot``, or None.

    Endpoints are interpolated linearly in space and time. An intersection
    that is empty or a single instant yields None.
    """
    t0 = max(v.start_t, slot.start_t)
    t1 = min(v.end_t, slot.end_t)
    if not t1 > t0:
        return None
    if t0 == v.start_t and t1 == v.end_t:
        return v
    args = (v.start_x, v.start_y, v.end_x, v.end_y, v.start_t, v.end_t)
    if t0 == v.start_t:
        x0, y0 = v.start_x, v.start_y
    else:
        x0, y0 = _position_at(*args, t0)
    if t1 == v.end_t:
        x1, y1 = v.end_x, v.end_y
    else:
        x1, y1 = _position_at(*args, t1)
    return TravelVector(x0, y0, x1, y1, t0, t1, v.vehicle_id)


def clip_batch(vectors, slot):
    """Vectorized :func:`clip_to_slot`; drops vectors that miss the slot."""
    vb = VectorBatch.from_vectors(vectors)
    t0 = np.maximum(vb.start_t, slot.start_t)
    t1 = np.minimum(vb.end_t, slot.end_t)
    keep = t1 > t0
    if not keep.any():
        return VectorBatch.empty()
    vb = vb[keep] if not keep.all() else vb
    t0, t1 = t0[keep], t1[keep]
    args = (vb.start_x, vb.start_y, vb.end_x, vb.end_y, vb.start_t, vb.end_t)
    with np.errstate(invalid="ignore"):
        ix0, iy0 = _position_at(*args, t0)
        ix1, iy1 = _position_at(*args, t1)
    head = t0 == vb.start_t
    tail = t1 == vb.end_t
    return VectorBatch(
        np.where(head, vb.start_x, ix0),
        np.where(head, vb.start_y, iy0),
        np.where(tail, vb.end_x, ix1),
        np.where(tail, vb.end_y, iy1),
        t0,
        t1,
        vb.vehicle_id,
    )


# --------------------------------------------------------------------------
# parsing


@dataclass(frozen=True)
class SchemaConfig:
    """Column layout of a delimited GPS text stream.

    ``columns`` names each field in order; use ``"_"`` to ignore a column.
    Coordinates are either ``lon``/``lat`` (projected around the reference
    point) or ``x``/``y`` already in meters.
    """

    columns: tuple = ("vehicle_id", "timestamp", "lon", "lat", "status")
    delimiter: str = ","
    timestamp_format: str = "epoch"
    ref_lon: float = 116.40
    ref_lat: float = 39.90

    def __post_init__(self):
        cols = tuple(self.columns)
        object.__setattr__(self, "columns", cols)
        unknown = set(cols) - _COLUMN_NAMES
        if unknown:
            raise ValueError(f"unknown schema columns: {sorted(unknown)}")
        for required in ("vehicle_id", "timestamp"):
            if required not in cols:
                raise ValueError(f"schema must include a {required!r} column")
        has_lonlat = "lon" in cols and "lat" in cols
        has_xy = "x" in cols and "y" in cols
        if has_lonlat == has_xy:
            raise ValueError("schema needs exactly one of lon/lat or x/y coordinate columns")
        if self.timestamp_format not in ("epoch", "iso8601"):
            raise ValueError(f"timestamp_format must be 'epoch' or 'iso8601', got {self.timestamp_format!r}")
        if len(self.delimiter) != 1:
            raise ValueError("delimiter must be a single character")
        if not abs(self.ref_lat) < 90:
            raise ValueError("ref_lat must satisfy |ref_lat| < 90")

    @property
    def uses_lonlat(self):
        return "lon" in self.columns


@dataclass
class ParseReport:
    rows: int = 0
    parsed: int = 0
    skipped: int = 0
    bad_lines: list = field(default_factory=list)
    max_bad_lines: int = 10

    def note_bad(self, line_no):
        self.skipped += 1
        if len(self.bad_lines) < self.max_bad_lines:
            self.bad_lines.append(line_no)


def _parse_timestamp(text, fmt):
    if fmt == "epoch":
        return float(text)
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _text_stream(source):
    if isinstance(source, (bytes, bytearray, memoryview)):
        return io.StringIO(bytes(source).decode("utf-8"))
    if isinstance(source, str):
        raise TypeError("pass bytes or an open stream, not a str path")
    if isinstance(source, io.TextIOBase):
        return source
    if hasattr(source, "read"):
        return io.TextIOWrapper(source, encoding="utf-8", newline="")
    raise IngestError(f"cannot read GPS points from {type(source).__name__}")


def parse_points(source, schema=None):
    """Parse delimited GPS fixes into a :class:`PointTable`.

    Malformed rows are skipped and counted in the returned :class:`ParseReport`;
    only an unreadable stream raises :class:`IngestError`. A first line whose
    fields equal the schema column names is treated as a header.
    """
    schema = schema or SchemaConfig()
    report = ParseReport()
    pos = {name: i for i, name in enumerate(schema.columns) if name != "_"}
    width = len(schema.columns)
    vids, ts, xs, ys, lons, lats, statuses = [], [], [], [], [], [], []
    try:
        reader = csv.reader(_text_stream(source), delimiter=schema.delimiter)
        for line_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if line_no == 1 and [c.strip() for c in row[:width]] == list(schema.columns):
                continue
            report.rows += 1
            try:
                if len(row) < width:
                    raise ValueError("short row")
                vid = row[pos["vehicle_id"]].strip()
                if not vid:
                    raise ValueError("empty vehicle id")
                t = _parse_timestamp(row[pos["timestamp"]], schema.timestamp_format)
                if schema.uses_lonlat:
                    lon = float(row[pos["lon"]])
                    lat = float(row[pos["lat"]])
                    if not (math.isfinite(lon) and math.isfinite(lat) and abs(lat) < 90):
                        raise ValueError("bad lon/lat")
                    x, y = project_coords(lon, lat, schema.ref_lon, schema.ref_lat)
                else:
                    lon = lat = math.nan
                    x = float(row[pos["x"]])
                    y = float(row[pos["y"]])
                status = int(row[pos["status"]]) if "status" in pos else -1
                if not (math.isfinite(t) and math.isfinite(x) and math.isfinite(y)):
                    raise ValueError("non-finite value")
            except (ValueError, IndexError, OverflowError):
                report.note_bad(line_no)
                continue
            vids.append(vid)
            ts.append(t)
            xs.append(x)
            ys.append(y)
            lons.append(lon)
            lats.append(lat)
            statuses.append(status)
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise IngestError(f"unreadable GPS stream: {exc}") from exc
    report.parsed = len(ts)
    if not ts:
        return PointTable.empty(), report
    return PointTable(np.asarray(vids, dtype=object), ts, xs, ys, lons, lats, statuses), report


# --------------------------------------------------------------------------
# travel vectors


@dataclass(frozen=True)
class FilterConfig:
    """Pair filters; ``None`` disables a threshold."""

    max_gap_seconds: float | None = 600.0
    max_speed_mps: float | None = 50.0
    occupied_only: bool = False

    def __post_init__(self):
        for name in ("max_gap_seconds", "max_speed_mps"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive or None")


@dataclass
class FilterReport:
    pairs: int = 0
    accepted: int = 0
    duplicates_removed: int = 0
    gap_rejected: int = 0
    speed_rejected: int = 0
    status_rejected: int = 0


def _as_point_table(points):
    if isinstance(points, PointTable):
        return points
    if isinstance(points, dict):
        return PointTable.concat([PointTable.from_points(v) for v in points.values()])
    return PointTable.from_points(points)


def build_travel_vectors(points, config=None):
    """Pair each vehicle's consecutive fixes into travel vectors.

    ``points`` may be a :class:`PointTable`, a sequence of :class:`GpsPoint`,
    or a mapping of vehicle id to points. Fixes are sorted by time per
    vehicle and repeated timestamps dropped (first one kept) before pairing.
    Rejected pairs are tallied in the returned :class:`FilterReport`.
    """
    config = config or FilterConfig()
    table = _as_point_table(points)
    report = FilterReport()
    if len(table) < 2:
        return VectorBatch.empty(), report

    codes = np.unique(table.vehicle_id.astype(str), return_inverse=True)[1].ravel()
    order = np.lexsort((table.timestamp, codes))
    codes = codes[order]
    t = table.timestamp[order]
    dup = np.zeros(len(t), dtype=bool)
    dup[1:] = (codes[1:] == codes[:-1]) & (t[1:] == t[:-1])
    report.duplicates_removed = int(dup.sum())
    order = order[~dup]
    codes = codes[~dup]

    x = table.x[order]
    y = table.y[order]
    t = table.timestamp[order]
    status = table.status[order]
    vid = table.vehicle_id[order]

    same = codes[1:] == codes[:-1]
    head = np.flatnonzero(same)
    report.pairs = int(head.size)
    keep = np.ones(head.size, dtype=bool)

    dt = t[head + 1] - t[head]
    if config.max_gap_seconds is not None:
        gap_bad = dt > config.max_gap_seconds
        report.gap_rejected = int(gap_bad.sum())
        keep &= ~gap_bad
    if config.max_speed_mps is not None:
        dist = np.hypot(x[head + 1] - x[head], y[head + 1] - y[head])
        speed_bad = keep & (dist > config.max_speed_mps * dt)
        report.speed_rejected = int(speed_bad.sum())
        keep &= ~speed_bad
    if config.occupied_only:
        status_bad = keep & ~((status[head] == 1) & (status[head + 1] == 1))
        report.status_rejected = int(status_bad.sum())
        keep &= ~status_bad

    head = head[keep]
    report.accepted = int(head.size)
    return (
        VectorBatch(x[head], y[head], x[head + 1], y[head + 1], t[head], t[head + 1], vid[head]),
        report,
    )
