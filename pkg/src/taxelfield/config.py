"""Flat ``key = value`` run configuration shared by every CLI subcommand."""

import math
from dataclasses import dataclass, fields

from .field import GridSpec, KernelParams, WeightingMode
from .ingest import FilterConfig, SchemaConfig
from .projection import Poi, ProjectionParams
from .synthetic import ScenarioConfig

__all__ = ["ConfigError", "RunConfig", "parse_config_text", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending setting."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def _opt_float(text):
    text = text.strip().lower()
    if text in ("", "off", "none", "unbounded", "auto"):
        return None
    return float(text)


def _bool(text):
    text = text.strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _str(text):
    return text.strip()


def _opt_str(text):
    text = text.strip()
    return text or None


def _columns(text):
    return tuple(c.strip() for c in text.split(",") if c.strip())


def _delimiter(text):
    text = text.strip()
    return {"comma": ",", "tab": "\t", "\\t": "\t", "semicolon": ";", "": ","}.get(text, text)


def _speeds(text):
    pairs = []
    for part in text.split(","):
        speed, _, weight = part.partition(":")
        pairs.append((float(speed), float(weight or 1.0)))
    return tuple(pairs)


def _pois(text):
    return tuple(Poi.parse(p) for p in text.split(";") if p.strip())


def _int(text):
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


@dataclass
class RunConfig:
    # grid; bounds left unset are derived from the data
    grid_min_x: float | None = None
    grid_min_y: float | None = None
    grid_max_x: float | None = None
    grid_max_y: float | None = None
    cell_size: float = 200.0
    # time slots; horizon left unset is derived from the data, aligned to slot_duration
    slot_duration: float = 3600.0
    horizon_start: float | None = None
    horizon_end: float | None = None
    # kernel
    bandwidth: float = 1000.0
    kernel_constant: float = 21.75
    weighting: str = "kernel-weighted"
    # projection
    search_radius: float | None = None
    decay: str = "none"
    normalization: str = "unit"
    tolerance: float | None = None
    pois: tuple = ()
    # ingest
    columns: tuple = ("vehicle_id", "timestamp", "lon", "lat", "status")
    delimiter: str = ","
    timestamp_format: str = "epoch"
    max_gap: float | None = 600.0
    max_speed: float | None = 50.0
    occupied_only: bool = False
    ref_lon: float = 116.40
    ref_lat: float = 39.90
    # paths
    input: str | None = None
    field: str | None = None
    out: str = "."
    # baseline / benchmark
    baseline_radius: float | None = None
    repetitions: int = 5
    # synthetic generator
    seed: int = 0
    scenario: str = "random"
    fleet_size: int = 100
    duration: float = 86400.0
    interval: float = 60.0
    start_time: float = 1351814400.0
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

    _PARSERS = {
        "grid_min_x": _opt_float, "grid_min_y": _opt_float,
        "grid_max_x": _opt_float, "grid_max_y": _opt_float,
        "cell_size": float, "slot_duration": float,
        "horizon_start": _opt_float, "horizon_end": _opt_float,
        "bandwidth": float, "kernel_constant": float, "weighting": _str,
        "search_radius": _opt_float, "decay": _str, "normalization": _str,
        "tolerance": _opt_float, "pois": _pois,
        "columns": _columns, "delimiter": _delimiter, "timestamp_format": _str,
        "max_gap": _opt_float, "max_speed": _opt_float, "occupied_only": _bool,
        "ref_lon": float, "ref_lat": float,
        "input": _opt_str, "field": _opt_str, "out": _str,
        "baseline_radius": _opt_float, "repetitions": _int,
        "seed": _int, "scenario": _str, "fleet_size": _int, "duration": float,
        "interval": float, "start_time": float, "extent": float, "speeds": _speeds,
        "poi_x": float, "poi_y": float, "attractor_share": float,
        "queue_inner": float, "queue_outer": float, "queue_factor": float,
        "queue_start": _opt_float, "queue_end": _opt_float,
    }

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, values):
        """Build from string values, rejecting unknown keys and bad values."""
        cfg = cls()
        for key, raw in values.items():
            if key not in cls._PARSERS:
                raise ConfigError(key, "unknown configuration key")
            try:
                setattr(cfg, key, cls._PARSERS[key](raw))
            except ValueError as exc:
                raise ConfigError(key, f"cannot parse {raw!r} ({exc})") from None
        cfg.validate()
        return cfg

    def validate(self):
        def positive(key):
            value = getattr(self, key)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(key, f"must be positive, got {value}")

        for key in ("cell_size", "slot_duration", "bandwidth", "kernel_constant", "interval", "extent"):
            positive(key)
        for key in ("search_radius", "baseline_radius", "max_gap", "max_speed", "tolerance"):
            if getattr(self, key) is not None and key != "tolerance":
                positive(key)
        if self.tolerance is not None and self.tolerance < 0:
            raise ConfigError("tolerance", "must be nonnegative")
        bounds = [self.grid_min_x, self.grid_min_y, self.grid_max_x, self.grid_max_y]
        if any(b is not None for b in bounds):
            names = ["grid_min_x", "grid_min_y", "grid_max_x", "grid_max_y"]
            for name, b in zip(names, bounds):
                if b is None:
                    raise ConfigError(name, "grid bounds must be given all together")
            if not self.grid_max_x > self.grid_min_x:
                raise ConfigError("grid_max_x", "must exceed grid_min_x")
            if not self.grid_max_y > self.grid_min_y:
                raise ConfigError("grid_max_y", "must exceed grid_min_y")
        if (self.horizon_start is None) != (self.horizon_end is None):
            raise ConfigError("horizon_end", "horizon_start and horizon_end go together")
        if self.horizon_start is not None and not self.horizon_end > self.horizon_start:
            raise ConfigError("horizon_end", "must exceed horizon_start")
        if self.repetitions < 3:
            raise ConfigError("repetitions", "must be at least 3")
        for key, build in (
            ("weighting", lambda: WeightingMode.parse(self.weighting)),
            ("decay", self.projection_params),
            ("normalization", self.projection_params),
            ("columns", self.schema),
            ("ref_lat", self.schema),
            ("scenario", self.scenario_config),
            ("fleet_size", self.scenario_config),
        ):
            try:
                build()
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None

    # --- module objects -------------------------------------------------

    @property
    def has_grid_bounds(self):
        return self.grid_min_x is not None

    def grid(self):
        return GridSpec.from_bounds(
            self.grid_min_x, self.grid_min_y, self.grid_max_x, self.grid_max_y, self.cell_size
        )

    def kernel(self):
        return KernelParams(self.bandwidth, self.kernel_constant)

    def mode(self):
        return WeightingMode.parse(self.weighting)

    def projection_params(self):
        return ProjectionParams(self.search_radius, self.decay, self.normalization)

    def schema(self):
        return SchemaConfig(self.columns, self.delimiter, self.timestamp_format, self.ref_lon, self.ref_lat)

    def filters(self):
        return FilterConfig(self.max_gap, self.max_speed, self.occupied_only)

    def scenario_config(self):
        return ScenarioConfig(
            fleet_size=self.fleet_size, duration=self.duration, interval=self.interval,
            start_time=self.start_time, kind=self.scenario, extent=self.extent,
            speeds=self.speeds, poi_x=self.poi_x, poi_y=self.poi_y,
            attractor_share=self.attractor_share, queue_inner=self.queue_inner,
            queue_outer=self.queue_outer, queue_factor=self.queue_factor,
            queue_start=self.queue_start, queue_end=self.queue_end,
            ref_lon=self.ref_lon, ref_lat=self.ref_lat,
        )

    # --- echo -----------------------------------------------------------

    def render_value(self, key):
        value = getattr(self, key)
        if value is None:
            return "unbounded" if key == "search_radius" else "off" if key in ("max_gap", "max_speed") else ""
        if key == "columns":
            return ",".join(value)
        if key == "delimiter":
            return {",": "comma", "\t": "tab", ";": "semicolon"}.get(value, value)
        if key == "pois":
            return ";".join(f"{p.id},{p.x!r},{p.y!r}" for p in value)
        if key == "speeds":
            return ",".join(f"{v!r}:{w!r}" for v, w in value)
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    def lines(self):
        return [f"{key} = {self.render_value(key)}" for key in self.keys()]


def parse_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {line_no}", f"expected 'key = value', got {line!r}")
        values[key.strip()] = value.strip()
    return values


def load_config(path=None, overrides=None):
    values = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    values.update(overrides or {})
    return RunConfig.from_mapping(values)
