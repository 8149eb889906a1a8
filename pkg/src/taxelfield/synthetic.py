"""Deterministic synthetic taxi fleets for tests, demos and benchmarks.

Two scenario kinds:

``random``
    random-waypoint trips inside a square city, optionally drawn towards a
    POI attractor.
``circulate``
    a closed fleet looping through the POI: in along one ray, out along the
    opposite ray, and back around the perimeter circle. An optional queue
    ring slows vehicles to ``queue_factor`` times their speed inside the
    annulus ``[queue_inner, queue_outer]``, on the inbound ray only, and
    only while the queue window is open.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ingest import PointTable, unproject_coords

__all__ = ["ScenarioConfig", "generate_synthetic", "write_points"]


@dataclass(frozen=True)
class ScenarioConfig:
    fleet_size: int = 100
    duration: float = 3600.0
    interval: float = 60.0
    start_time: float = 1351814400.0
    kind: str = "random"
    extent: float = 10000.0
    speeds: tuple = ((8.0, 0.5), (14.0, 0.5))
    poi_x: float = 0.0
    poi_y: float = 0.0
    attractor_share: float = 0.0
    queue_inner: float = 0.0
    queue_outer: float = 0.0
    queue_factor: float = 1.0
    queue_start: float | None = None
    queue_end: float | None = None
    ref_lon: float = 116.40
    ref_lat: float = 39.90

    def __post_init__(self):
        if int(self.fleet_size) != self.fleet_size or self.fleet_size <= 0:
            raise ValueError(f"fleet_size must be a positive integer, got {self.fleet_size}")
        if not self.interval > 0:
            raise ValueError(f"interval must be positive, got {self.interval}")
        if not self.duration >= 0:
            raise ValueError(f"duration must be nonnegative, got {self.duration}")
        if self.kind not in ("random", "circulate"):
            raise ValueError(f"kind must be 'random' or 'circulate', got {self.kind!r}")
        if not self.extent > 0:
            raise ValueError("extent must be positive")
        speeds = tuple((float(v), float(p)) for v, p in self.speeds)
        if not speeds or any(v <= 0 or p < 0 for v, p in speeds) or sum(p for _, p in speeds) <= 0:
            raise ValueError("speeds must be (positive speed, nonnegative weight) pairs")
        object.__setattr__(self, "speeds", speeds)
        if not 0.0 <= self.attractor_share <= 1.0:
            raise ValueError("attractor_share must lie in [0, 1]")
        if self.has_queue:
            if self.kind != "circulate":
                raise ValueError("queue rings are only modelled for the 'circulate' scenario")
            if not 0 <= self.queue_inner < self.queue_outer <= self.extent:
                raise ValueError("queue ring needs 0 <= queue_inner < queue_outer <= extent")
            if not self.queue_factor > 0:
                raise ValueError("queue_factor must be positive")

    @property
    def has_queue(self):
        return self.queue_outer > 0 and self.queue_factor != 1.0

    @property
    def sample_count(self):
        return int(math.floor(self.duration / self.interval + 1e-9)) + 1

    def queue_active(self, t):
        rel = t - self.start_time
        return (self.queue_start is None or rel >= self.queue_start) and (
            self.queue_end is None or rel < self.queue_end
        )


def _draw_speeds(rng, cfg, size):
    values = np.array([v for v, _ in cfg.speeds])
    weights = np.array([p for _, p in cfg.speeds])
    return rng.choice(values, size=size, p=weights / weights.sum())


def _random_vehicle(rng, cfg, times):
    """Positions and occupancy of one random-waypoint vehicle at ``times``."""
    half = cfg.extent
    horizon = times[-1] - times[0]
    wx = [rng.uniform(-half, half)]
    wy = [rng.uniform(-half, half)]
    arrive = [times[0] - rng.uniform(0, cfg.interval)]
    occupied = []
    while arrive[-1] <= times[-1]:
        if rng.random() < cfg.attractor_share:
            nx = cfg.poi_x + rng.normal(0, 0.01 * half)
            ny = cfg.poi_y + rng.normal(0, 0.01 * half)
        else:
            nx, ny = rng.uniform(-half, half, 2)
        speed = _draw_speeds(rng, cfg, 1)[0]
        dist = math.hypot(nx - wx[-1], ny - wy[-1])
        arrive.append(arrive[-1] + max(dist / speed, 1.0))
        wx.append(nx)
        wy.append(ny)
        occupied.append(int(rng.random() < 0.6))
        if len(arrive) > 10 * (horizon / cfg.interval + 10):
            break
    arrive = np.asarray(arrive)
    x = np.interp(times, arrive, wx)
    y = np.interp(times, arrive, wy)
    leg = np.clip(np.searchsorted(arrive, times, side="right") - 1, 0, len(occupied) - 1)
    return x, y, np.asarray(occupied)[leg]


class _Loop:
    """Exact piecewise-constant-speed motion around one circulation loop.

    The loop runs from ``A`` (distance ``extent`` from the POI at bearing
    ``theta``) straight through the POI to the opposite point ``B``, then
    back to ``A`` along the circle of radius ``extent``. Arc length ``s``
    parametrizes the loop.
    """

    def __init__(self, cfg, speed, theta):
        self.cfg = cfg
        self.speed = speed
        self.theta = theta
        rho = cfg.extent
        self.rho = rho
        self.perimeter = (2.0 + math.pi) * rho
        marks = {0.0, rho, 2 * rho, self.perimeter}
        if cfg.has_queue:
            marks |= {rho - cfg.queue_outer, rho - cfg.queue_inner}
        self.marks = sorted(marks)

    def _speed_at(self, s, t):
        cfg = self.cfg
        if cfg.has_queue and self.rho - cfg.queue_outer <= s < self.rho - cfg.queue_inner:
            if cfg.queue_active(t):
                return self.speed * cfg.queue_factor
        return self.speed

    def advance(self, s, t, dt):
        """Loop position after moving from ``s`` at time ``t`` for ``dt`` seconds."""
        cfg = self.cfg
        t_end = t + dt
        switches = [
            cfg.start_time + w
            for w in (cfg.queue_start, cfg.queue_end)
            if cfg.has_queue and w is not None
        ]
        while t < t_end:
            v = self._speed_at(s, t)
            nxt = next(m for m in self.marks if m > s)
            t_stop = min([t_end] + [w for w in switches if t < w < t_end])
            if t + (nxt - s) / v <= t_stop:
                t += (nxt - s) / v
                s = 0.0 if nxt >= self.perimeter else nxt
            else:
                s += v * (t_stop - t)
                t = t_stop
        return s

    def position(self, s):
        cfg, rho = self.cfg, self.rho
        ux, uy = math.cos(self.theta), math.sin(self.theta)
        if s < 2 * rho:
            along = rho - s
            return cfg.poi_x + along * ux, cfg.poi_y + along * uy
        phi = self.theta + math.pi + (s - 2 * rho) / rho
        return cfg.poi_x + rho * math.cos(phi), cfg.poi_y + rho * math.sin(phi)


def _circulate_vehicle(rng, cfg, times):
    # entry bearings cover a half-plane so inbound and outbound rays never share cells
    theta = rng.uniform(0, math.pi)
    speed = _draw_speeds(rng, cfg, 1)[0]
    loop = _Loop(cfg, speed, theta)
    s = rng.uniform(0, loop.perimeter)
    xs = np.empty(times.size)
    ys = np.empty(times.size)
    for k, t in enumerate(times):
        if k:
            s = loop.advance(s, times[k - 1], t - times[k - 1])
        xs[k], ys[k] = loop.position(s)
    return xs, ys, np.ones(times.size, dtype=np.int64)


def generate_synthetic(config, seed=0):
    """Generate a fleet's GPS fixes as a :class:`PointTable`.

    The output is a pure function of ``(config, seed)``. Every vehicle is
    sampled at ``start_time + k * interval`` for ``k = 0 .. duration/interval``.
    """
    if not isinstance(config, ScenarioConfig):
        config = ScenarioConfig(**config)
    rng = np.random.default_rng(seed)
    times = config.start_time + config.interval * np.arange(config.sample_count)
    width = len(str(config.fleet_size - 1))
    vids, ts, xs, ys, st = [], [], [], [], []
    make = _random_vehicle if config.kind == "random" else _circulate_vehicle
    for k in range(config.fleet_size):
        x, y, status = make(rng, config, times)
        vids.append(np.full(times.size, f"V{k:0{width}d}", dtype=object))
        ts.append(times)
        xs.append(x)
        ys.append(y)
        st.append(status)
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    lon, lat = unproject_coords(x, y, config.ref_lon, config.ref_lat)
    return PointTable(np.concatenate(vids), np.concatenate(ts), x, y, lon, lat, np.concatenate(st))


def _fmt(value):
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def write_points(points, stream, columns=("vehicle_id", "timestamp", "lon", "lat", "status"),
                 delimiter=","):
    """Write points as delimited text, header first, in a fixed float format."""
    cols = {
        "vehicle_id": points.vehicle_id,
        "timestamp": points.timestamp,
        "lon": points.lon,
        "lat": points.lat,
        "x": points.x,
        "y": points.y,
        "status": points.status,
    }
    stream.write(delimiter.join(columns) + "\n")
    for i in range(len(points)):
        row = []
        for c in columns:
            v = cols[c][i]
            row.append(str(v) if c in ("vehicle_id", "status") else _fmt(v))
        stream.write(delimiter.join(row) + "\n")
