"""Command line pipeline: gen, build, update, project, baseline, bench.

Exit codes: 0 success, 1 usage or configuration error, 2 data or decode error.
"""

import argparse
import dataclasses
import math
import os
import re
import sys
import time

import numpy as np

from . import __version__
from .baseline import benchmark, filter_trajectories
from .config import ConfigError, RunConfig, load_config
from .field import GridSpec, build_field, empty_slice, update_slice
from .fieldio import DecodeError, read_field, write_field
from .ingest import (
    IngestError,
    PointTable,
    SchemaConfig,
    TimeSlot,
    build_travel_vectors,
    parse_points,
    tile_slots,
)
from .projection import Poi, build_profile, delay_report, format_delay_report, format_profile
from .synthetic import generate_synthetic, write_points

__all__ = ["main", "run_gen", "run_build", "run_update", "run_project", "run_baseline", "run_bench"]

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2

_TAIL_SCHEMA = SchemaConfig(columns=("vehicle_id", "timestamp", "x", "y", "status"))


class DataError(Exception):
    """Input data or stored files that cannot be used."""


def _out_path(cfg, name):
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def _field_path(cfg):
    return cfg.field or _out_path(cfg, "field.vkdf")


def _tails_path(field_path):
    return field_path + ".tails.csv"


def _safe_name(text):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", str(text)) or "poi"


def _read_points(cfg, path, key="input"):
    if path is None:
        raise ConfigError(key, "no input path given")
    try:
        with open(path, "rb") as fh:
            points, report = parse_points(fh, cfg.schema())
    except FileNotFoundError:
        raise DataError(f"{key}: no such file {path!r}") from None
    except (OSError, IngestError) as exc:
        raise DataError(f"{key}: cannot read {path!r} ({exc})") from None
    return points, report


def _vectors(cfg, points):
    return build_travel_vectors(points, cfg.filters())


def _data_grid(cfg, vectors):
    if cfg.has_grid_bounds:
        return cfg.grid()
    if not len(vectors):
        raise DataError("input: no travel vectors to derive grid bounds from; set grid_* keys")
    cs = cfg.cell_size
    xs = np.concatenate([vectors.start_x, vectors.end_x])
    ys = np.concatenate([vectors.start_y, vectors.end_y])
    min_x, min_y = math.floor(xs.min() / cs) * cs, math.floor(ys.min() / cs) * cs
    max_x = max(math.ceil(xs.max() / cs) * cs, min_x + cs)
    max_y = max(math.ceil(ys.max() / cs) * cs, min_y + cs)
    return GridSpec.from_bounds(min_x, min_y, max_x, max_y, cs)


def _data_horizon(cfg, vectors):
    if cfg.horizon_start is not None:
        return cfg.horizon_start, cfg.horizon_end
    if not len(vectors):
        raise DataError("input: no travel vectors to derive a time horizon from; set horizon_*")
    w = cfg.slot_duration
    t0, t1 = vectors.time_range()
    start = math.floor(t0 / w) * w
    end = max(math.ceil(t1 / w) * w, start + w)
    return start, end


def _last_points(points):
    """Each vehicle's latest fix."""
    if not len(points):
        return points
    vid = points.vehicle_id.astype(str)
    order = np.lexsort((points.timestamp, vid))
    last = np.ones(order.size, dtype=bool)
    last[:-1] = vid[order][1:] != vid[order][:-1]
    return points[order[last]]


def _write_tails(path, points):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_points(_last_points(points), fh, columns=_TAIL_SCHEMA.columns)


def _read_tails(path):
    if not os.path.exists(path):
        return PointTable.empty()
    with open(path, "rb") as fh:
        return parse_points(fh, _TAIL_SCHEMA)[0]


def _summary_text(cfg, summary):
    lines = [f"{k} = {v}" for k, v in summary.items()]
    lines.append("# effective config")
    lines += cfg.lines()
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# subcommands


def run_gen(cfg):
    points = generate_synthetic(cfg.scenario_config(), cfg.seed)
    path = cfg.input or _out_path(cfg, "points.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_points(points, fh, columns=cfg.columns, delimiter=cfg.delimiter)
    return {"points": len(points), "vehicles": cfg.fleet_size, "output": path}


def run_build(cfg):
    """Ingest ``input`` and write the field file plus a build summary."""
    start = time.perf_counter()
    points, parse_report = _read_points(cfg, cfg.input)
    vectors, filter_report = _vectors(cfg, points)
    grid = _data_grid(cfg, vectors)
    horizon = _data_horizon(cfg, vectors)
    field = build_field(vectors, horizon, cfg.slot_duration, grid, cfg.kernel(), cfg.mode())
    path = _field_path(cfg)
    write_field(path, field)
    _write_tails(_tails_path(path), points)
    summary = {
        "field": path,
        "points_parsed": parse_report.parsed,
        "rows_skipped": parse_report.skipped,
        "bad_lines": ",".join(map(str, parse_report.bad_lines)),
        "vectors_built": filter_report.accepted,
        "duplicates_removed": filter_report.duplicates_removed,
        "gap_rejected": filter_report.gap_rejected,
        "speed_rejected": filter_report.speed_rejected,
        "status_rejected": filter_report.status_rejected,
        "slices": len(field),
        "grid": f"{grid.m}x{grid.n}",
        "wall_time": time.perf_counter() - start,
    }
    with open(_out_path(cfg, "build_summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(_summary_text(cfg, summary))
    return summary


def _load_field(path):
    try:
        return read_field(path)
    except FileNotFoundError:
        raise DataError(f"field: no such file {path!r}") from None
    except DecodeError as exc:
        raise DataError(f"field: cannot decode {path!r}: {exc}") from None


def _check_stored(cfg, field):
    if not field:
        raise DataError("field: file holds no slices")
    first = field[0]
    diffs = []
    for key, stored, configured in (
        ("bandwidth", first.params.bandwidth, cfg.bandwidth),
        ("kernel_constant", first.params.constant, cfg.kernel_constant),
        ("weighting", first.mode.label, cfg.mode().label),
        ("cell_size", first.grid.cell_size, cfg.cell_size),
        ("slot_duration", first.slot.duration, cfg.slot_duration),
    ):
        if stored != configured:
            diffs.append(f"{key}: stored={stored!r} configured={configured!r}")
    if cfg.has_grid_bounds and cfg.grid() != first.grid:
        diffs.append(f"grid: stored={first.grid} configured={cfg.grid()}")
    if diffs:
        raise ConfigError(diffs[0].split(":")[0], "parameter mismatch with stored field\n  " + "\n  ".join(diffs))


def _reslot(field, start, end, width):
    """Pad the field with zero slices so it tiles ``[start, end)``."""
    by_start = {sl.slot.start_t: sl for sl in field}
    first = field[0]
    out = []
    for slot in tile_slots(start, end, width):
        sl = by_start.get(slot.start_t)
        if sl is None:
            sl = empty_slice(slot, first.grid, first.params, first.mode)
        elif sl.slot != slot:
            sl = dataclasses.replace(sl, slot=slot)
        out.append(sl)
    return out


def run_update(cfg, new_input=None):
    """Fold new points into a stored field, slice by slice."""
    start = time.perf_counter()
    path = _field_path(cfg)
    field = _load_field(path)
    _check_stored(cfg, field)
    points, parse_report = _read_points(cfg, new_input or cfg.input)
    tails = _read_tails(_tails_path(path))
    seen = set(points.vehicle_id.astype(str).tolist())
    keep = np.array([v in seen for v in tails.vehicle_id.astype(str)], dtype=bool)
    joined = PointTable.concat([tails[keep] if len(tails) else tails, points])
    vectors, filter_report = _vectors(cfg, joined)

    width = field[0].slot.duration
    lo, hi = field[0].slot.start_t, field[-1].slot.end_t
    if len(vectors):
        t0, t1 = vectors.time_range()
        if t0 < lo:
            lo -= math.ceil((lo - t0) / width) * width
        if t1 > hi:
            hi = lo + math.ceil((t1 - lo) / width) * width
    field = _reslot(field, lo, hi, width)
    touched = 0
    for k, sl in enumerate(field):
        updated = update_slice(sl, vectors)
        if updated is not sl:
            touched += 1
        field[k] = updated
    write_field(path, field)
    _write_tails(_tails_path(path), PointTable.concat([tails, points]))
    summary = {
        "field": path,
        "points_parsed": parse_report.parsed,
        "rows_skipped": parse_report.skipped,
        "vectors_added": len(vectors),
        "slices": len(field),
        "slices_touched": touched,
        "wall_time": time.perf_counter() - start,
    }
    with open(_out_path(cfg, "update_summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(_summary_text(cfg, summary))
    return summary


def _require_pois(cfg):
    if not cfg.pois:
        raise ConfigError("pois", "at least one POI is required (--poi id,x,y)")
    return cfg.pois


def run_project(cfg, log=None):
    """Write one profile and one delay report per POI."""
    pois = _require_pois(cfg)
    field = _load_field(_field_path(cfg))
    if len(field) < 2:
        raise DataError("field: a delay report needs at least two slots")
    params = cfg.projection_params()
    echo = ["effective config"] + cfg.lines()
    written = []
    latencies = {}
    for poi in pois:
        t = time.perf_counter()
        profile = build_profile(field, poi, params)
        report = delay_report(profile, cfg.tolerance)
        latencies[poi.id] = time.perf_counter() - t
        name = _safe_name(poi.id)
        for fname, text in (
            (f"profile_{name}.csv", format_profile(profile, echo)),
            (f"delay_{name}.csv", format_delay_report(report, echo)),
        ):
            with open(_out_path(cfg, fname), "w", encoding="utf-8") as fh:
                fh.write(text)
            written.append(fname)
        if log:
            log(f"poi {poi.id}: query latency {latencies[poi.id]:.6f} s")
    return {"pois": len(pois), "files": written, "latency": latencies}


def run_baseline(cfg):
    """Per-slot disk-crossing counts from a raw scan, one file per POI."""
    pois = _require_pois(cfg)
    points, _ = _read_points(cfg, cfg.input)
    vectors, _ = _vectors(cfg, points)
    horizon = _data_horizon(cfg, vectors)
    radius = cfg.baseline_radius or cfg.search_radius or cfg.bandwidth
    echo = [f"# {line}" for line in ["effective config"] + cfg.lines()]
    written = []
    for poi in pois:
        rows = echo + ["slot_index,slot_start,inbound_crossings,outbound_crossings"]
        for slot in tile_slots(horizon[0], horizon[1], cfg.slot_duration):
            c = filter_trajectories(vectors, poi, radius, slot)
            rows.append(f"{slot.index},{slot.start_t!r},{c.inbound_crossings},{c.outbound_crossings}")
        fname = f"baseline_{_safe_name(poi.id)}.csv"
        with open(_out_path(cfg, fname), "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")
        written.append(fname)
    return {"pois": len(pois), "files": written, "radius": radius}


def run_bench(cfg):
    """Benchmark on ``input``, or on a generated fleet when no input is set."""
    if cfg.input:
        points, _ = _read_points(cfg, cfg.input)
    else:
        points = generate_synthetic(cfg.scenario_config(), cfg.seed)
    vectors, _ = _vectors(cfg, points)
    if not len(vectors):
        raise DataError("input: benchmark needs a non-empty dataset")
    pois = cfg.pois or (Poi("center", cfg.poi_x, cfg.poi_y),)
    report = benchmark(
        vectors, pois, _data_grid(cfg, vectors), cfg.kernel(), cfg.projection_params(),
        repetitions=cfg.repetitions, horizon=_data_horizon(cfg, vectors),
        slot_duration=cfg.slot_duration, mode=cfg.mode(), radius=cfg.baseline_radius,
    )
    with open(_out_path(cfg, "bench_report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_keyvalue())
        fh.write("# effective config\n" + "\n".join(f"# {line}" for line in cfg.lines()) + "\n")
    with open(_out_path(cfg, "bench_report.csv"), "w", encoding="utf-8") as fh:
        fh.write(report.to_table())
    return report.metrics()


# --------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, help="random seed for generated data")
    common.add_argument("--poi", action="append", default=[], metavar="ID,X,Y",
                        help="point of interest in grid meters (repeatable)")
    common.add_argument("--input", metavar="PATH", help="GPS point file")
    common.add_argument("--field", metavar="PATH", help="field file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key (repeatable)")

    parser = _Parser(prog="taxelfield", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "gen": "write a synthetic GPS fleet",
        "build": "build a field file from GPS points",
        "update": "fold new GPS points into a field file",
        "project": "projection profiles and delay reports per POI",
        "baseline": "crossing counts by scanning raw travel vectors",
        "bench": "time projection queries against the baseline scan",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def _overrides(args):
    values = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "--set expects KEY=VALUE")
        values[key.strip()] = value.strip()
    for key in ("out", "input", "field", "seed"):
        value = getattr(args, key)
        if value is not None:
            values[key] = str(value)
    if args.poi:
        try:
            pois = [Poi.parse(p) for p in args.poi]
        except ValueError as exc:
            raise ConfigError("poi", str(exc)) from None
        values["pois"] = ";".join(f"{p.id},{p.x!r},{p.y!r}" for p in pois)
    return values


_COMMANDS = {
    "gen": run_gen,
    "build": run_build,
    "update": run_update,
    "project": run_project,
    "baseline": run_baseline,
    "bench": run_bench,
}


def main(argv=None):
    args = _parser().parse_args(argv)

    def log(msg):
        print(msg, file=sys.stderr)

    try:
        cfg = load_config(args.config, _overrides(args))
        print("# effective config")
        for line in cfg.lines():
            print(f"#   {line}")
        if args.command == "project":
            summary = run_project(cfg, log=log)
        else:
            summary = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        log(f"taxelfield {args.command}: configuration error: {exc}")
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        log(f"taxelfield {args.command}: {exc}")
        return EXIT_CONFIG if args.config and exc.filename == args.config else EXIT_DATA
    except (DataError, DecodeError, IngestError) as exc:
        log(f"taxelfield {args.command}: data error: {exc}")
        return EXIT_DATA
    for key, value in summary.items():
        print(f"{key} = {value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
