"""Trajectory-filter baseline and the projection-vs-scan benchmark.

The baseline answers "how many vehicles entered / left the disk around a POI
during a time window" by scanning every raw travel vector. It deliberately
uses no spatial or temporal index: it stands in for the file-scan query the
precomputed field is meant to replace, so the benchmark speedup is relative
to a full scan, not to an indexed store.
"""

import math
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .field import build_field
from .ingest import VectorBatch, tile_slots
from .projection import ProjectionParams, build_profile

__all__ = [
    "CrossingCounts",
    "filter_trajectories",
    "BenchmarkReport",
    "benchmark",
]


@dataclass(frozen=True)
class CrossingCounts:
    inbound_ids: np.ndarray
    outbound_ids: np.ndarray

    @property
    def inbound_crossings(self):
        return int(self.inbound_ids.size)

    @property
    def outbound_crossings(self):
        return int(self.outbound_ids.size)

    @property
    def matched_vector_ids(self):
        return np.concatenate([self.inbound_ids, self.outbound_ids])

    def __add__(self, other):
        return CrossingCounts(
            np.concatenate([self.inbound_ids, other.inbound_ids]),
            np.concatenate([self.outbound_ids, other.outbound_ids]),
        )


def _boundary_events(vb, poi, radius):
    """Times at which each vector enters and leaves the closed disk.

    Returns ``(entry_t, exit_t)``, NaN where there is no such event. A vector
    enters when it starts strictly outside and reaches the circle; it leaves
    when it is inside and ends strictly outside. Tangent touches are ignored.
    """
    dx = vb.end_x - vb.start_x
    dy = vb.end_y - vb.start_y
    fx = vb.start_x - poi.x
    fy = vb.start_y - poi.y
    a = dx * dx + dy * dy
    b = 2.0 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - 4.0 * a * c
    ok = (a > 0.0) & (disc > 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.sqrt(np.where(ok, disc, 0.0))
        u_in = (-b - root) / (2.0 * a)
        u_out = (-b + root) / (2.0 * a)
    enters = ok & (u_in > 0.0) & (u_in <= 1.0)
    leaves = ok & (u_out >= 0.0) & (u_out < 1.0)
    dur = vb.end_t - vb.start_t
    entry_t = np.where(enters, vb.start_t + u_in * dur, np.nan)
    exit_t = np.where(leaves, vb.start_t + u_out * dur, np.nan)
    return entry_t, exit_t


def filter_trajectories(vectors, poi, radius, window):
    """Count disk-boundary crossings of raw travel vectors inside ``window``.

    A vector contributes an inbound crossing if it enters the closed disk of
    ``radius`` around ``poi`` at a time inside the half-open window, and an
    outbound crossing if it leaves it then. A vector lying entirely inside or
    entirely outside the disk never counts; one cutting straight across the
    disk counts once each way. Ids in the result index into ``vectors``.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    vb = VectorBatch.from_vectors(vectors)
    if not len(vb):
        empty = np.array([], dtype=np.int64)
        return CrossingCounts(empty, empty)
    entry_t, exit_t = _boundary_events(vb, poi, radius)
    lo, hi = window.start_t, window.end_t
    inbound = np.flatnonzero((entry_t >= lo) & (entry_t < hi))
    outbound = np.flatnonzero((exit_t >= lo) & (exit_t < hi))
    return CrossingCounts(inbound, outbound)


@dataclass
class BenchmarkReport:
    n_vectors: int
    n_slots: int
    n_pois: int
    repetitions: int
    build_time: float
    projection_samples: list = field(default_factory=list)
    filter_samples: list = field(default_factory=list)

    @property
    def projection_latency(self):
        return statistics.median(self.projection_samples)

    @property
    def filter_latency(self):
        return statistics.median(self.filter_samples)

    @property
    def speedup(self):
        return self.filter_latency / self.projection_latency

    def metrics(self):
        return {
            "n_vectors": self.n_vectors,
            "n_slots": self.n_slots,
            "n_pois": self.n_pois,
            "repetitions": self.repetitions,
            "build_time": self.build_time,
            "projection_latency": self.projection_latency,
            "filter_latency": self.filter_latency,
            "speedup": self.speedup,
        }

    def to_keyvalue(self):
        """One ``key = value`` line per metric, then the raw samples."""
        lines = [f"{k} = {v!r}" for k, v in self.metrics().items()]
        lines.append("projection_samples = " + ",".join(repr(s) for s in self.projection_samples))
        lines.append("filter_samples = " + ",".join(repr(s) for s in self.filter_samples))
        return "\n".join(lines) + "\n"

    def to_table(self):
        """Raw timings as a delimited table."""
        rows = ["measurement,repetition,seconds", f"build,0,{self.build_time!r}"]
        rows += [f"projection,{i},{s!r}" for i, s in enumerate(self.projection_samples)]
        rows += [f"filter,{i},{s!r}" for i, s in enumerate(self.filter_samples)]
        return "\n".join(rows) + "\n"


def benchmark(vectors, pois, grid, kernel, params=None, repetitions=5, horizon=None,
              slot_duration=3600.0, mode=0, radius=None, clock=time.perf_counter):
    """Time field build, per-POI projection profiles and per-POI baseline scans.

    A per-POI projection query is a full profile (one projection per slot);
    the matching baseline query scans every raw vector once per slot window.
    Each repetition records the median over POIs, and the report's
    latencies are medians over repetitions.
    """
    vb = VectorBatch.from_vectors(vectors)
    if not len(vb):
        raise ValueError("benchmark needs a non-empty dataset")
    if repetitions < 3:
        raise ValueError("benchmark needs at least 3 repetitions")
    pois = list(pois)
    if not pois:
        raise ValueError("benchmark needs at least one POI")
    params = params or ProjectionParams()
    if horizon is None:
        t0, t1 = vb.time_range()
        t0 = math.floor(t0 / slot_duration) * slot_duration
        horizon = (t0, max(t1, t0 + slot_duration))
    radius = radius or params.search_radius or kernel.bandwidth

    start = clock()
    field_ = build_field(vb, horizon, slot_duration, grid, kernel, mode)
    build_time = clock() - start
    windows = tile_slots(horizon[0], horizon[1], slot_duration)

    report = BenchmarkReport(len(vb), len(field_), len(pois), repetitions, build_time)
    for _ in range(repetitions):
        proj, scan = [], []
        for poi in pois:
            start = clock()
            build_profile(field_, poi, params)
            proj.append(clock() - start)
            start = clock()
            for w in windows:
                filter_trajectories(vb, poi, radius, w)
            scan.append(clock() - start)
        report.projection_samples.append(statistics.median(proj))
        report.filter_samples.append(statistics.median(scan))
    return report
