"""POI projections of a vector kernel density field.

Every cell vector is dotted with the direction from its cell center to the
POI. Positive parts add up to inbound momentum (moving towards the POI) and
negative parts to outbound momentum. Profiles stack these per slot, and delay
reports compare the areas under the inbound and outbound curves.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .field import FieldMismatchError

__all__ = [
    "Poi",
    "Decay",
    "Normalization",
    "ProjectionParams",
    "ProjectionSample",
    "ProjectionProfile",
    "DelayReport",
    "SlotDelay",
    "project_slice",
    "project_slice_signed",
    "build_profile",
    "demand_area",
    "change_rate",
    "delay_report",
    "format_profile",
    "format_delay_report",
]


@dataclass(frozen=True)
class Poi:
    id: str
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"POI {self.id!r} needs finite coordinates")

    @classmethod
    def parse(cls, text):
        """Parse ``"id,x,y"``."""
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 3 or not parts[0]:
            raise ValueError(f"POI must be 'id,x,y', got {text!r}")
        return cls(parts[0], float(parts[1]), float(parts[2]))


class Decay(str, Enum):
    NONE = "none"
    LINEAR = "linear"
    INVERSE = "inverse"


class Normalization(str, Enum):
    UNIT = "unit"
    LITERAL = "literal"


@dataclass(frozen=True)
class ProjectionParams:
    """Search radius (None means the whole grid), distance decay, and
    whether the cell-to-POI vector is unit-normalized."""

    search_radius: float | None = None
    decay: Decay = Decay.NONE
    normalization: Normalization = Normalization.UNIT

    def __post_init__(self):
        object.__setattr__(self, "decay", Decay(self.decay))
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        if self.search_radius is not None and not self.search_radius > 0:
            raise ValueError(f"search_radius must be positive, got {self.search_radius}")
        if self.decay is Decay.LINEAR and self.search_radius is None:
            raise ValueError("linear decay needs a bounded search_radius")

    def weight(self, d):
        if self.decay is Decay.NONE:
            return np.ones_like(d)
        if self.decay is Decay.LINEAR:
            return 1.0 - d / self.search_radius
        return 1.0 / (1.0 + d)


@dataclass(frozen=True)
class ProjectionSample:
    slot_index: int
    slot_start: float
    inbound: float
    outbound: float

    @property
    def net(self):
        return self.inbound - self.outbound


@dataclass(frozen=True)
class ProjectionProfile:
    poi: Poi
    params: ProjectionParams
    samples: tuple
    slot_width: float

    @property
    def inbound(self):
        return np.array([s.inbound for s in self.samples])

    @property
    def outbound(self):
        return np.array([s.outbound for s in self.samples])

    @property
    def net(self):
        return np.array([s.net for s in self.samples])


def _cell_terms(slice_, poi, params):
    """Signed per-cell projection terms for the cells that take part."""
    cx, cy = slice_.grid.centers()
    vx, vy = slice_.vx, slice_.vy
    ax = poi.x - cx
    ay = poi.y - cy
    d = np.hypot(ax, ay)
    use = ((vx != 0.0) | (vy != 0.0)) & (d > 0.0)
    if params.search_radius is not None:
        use &= d <= params.search_radius
    ax, ay, d, vx, vy = ax[use], ay[use], d[use], vx[use], vy[use]
    if params.normalization is Normalization.UNIT:
        ax = ax / d
        ay = ay / d
    return (ax * vx + ay * vy) * params.weight(d)


def project_slice(slice_, poi, params=None):
    """``(inbound, outbound)`` momentum of one slice with respect to ``poi``.

    Both values are nonnegative. A cell whose center coincides with the POI
    is skipped.
    """
    s = _cell_terms(slice_, poi, params or ProjectionParams())
    return float(s[s > 0].sum()), 0.0 - float(s[s < 0].sum())


def project_slice_signed(slice_, poi, params=None):
    """Unsplit signed sum of all cell terms (inbound minus outbound)."""
    return float(_cell_terms(slice_, poi, params or ProjectionParams()).sum())


def build_profile(field, poi, params=None):
    """One projection sample per slice, in slot order."""
    params = params or ProjectionParams()
    slices = sorted(field, key=lambda s: s.slot.index)
    if not slices:
        raise ValueError("cannot build a profile from an empty field")
    grid = slices[0].grid
    width = slices[0].slot.duration
    samples = []
    for expect, sl in enumerate(slices, start=slices[0].slot.index):
        if sl.grid != grid:
            raise FieldMismatchError(f"slot {sl.slot.index} uses a different grid")
        if sl.slot.duration != width:
            raise FieldMismatchError(
                f"slot {sl.slot.index} is {sl.slot.duration} s wide, expected {width} s"
            )
        if sl.slot.index != expect:
            raise FieldMismatchError(f"slot indices must be contiguous, missing {expect}")
        inbound, outbound = project_slice(sl, poi, params)
        samples.append(ProjectionSample(sl.slot.index, sl.slot.start_t, inbound, outbound))
    return ProjectionProfile(poi, params, tuple(samples), width)


def demand_area(values, widths):
    """Trapezoidal area under a curve sampled at consecutive slots.

    ``widths[t]`` is the spacing between ``values[t]`` and ``values[t + 1]``.
    """
    values = [float(v) for v in values]
    widths = [float(w) for w in widths]
    if len(widths) != len(values) - 1:
        raise ValueError(
            f"need len(widths) == len(values) - 1, got {len(widths)} and {len(values)}"
        )
    if any(not w > 0 for w in widths):
        raise ValueError("interval widths must be positive")
    return math.fsum(w * (a + b) / 2.0 for w, a, b in zip(widths, values[:-1], values[1:]))


def change_rate(inbound_area, outbound_area):
    """``(D_tt - D_ta) / D_ta``, or None when the outbound area is zero."""
    if inbound_area < 0 or outbound_area < 0:
        raise ValueError("areas must be nonnegative")
    if outbound_area == 0:
        return None
    return (inbound_area - outbound_area) / outbound_area


@dataclass(frozen=True)
class SlotDelay:
    slot_index: int
    classification: str
    gap: float


@dataclass(frozen=True)
class DelayReport:
    D_tt: float
    D_ta: float
    rate: float | None
    intervals: tuple

    @property
    def rate_defined(self):
        return self.rate is not None

    def classifications(self):
        return [iv.classification for iv in self.intervals]


INBOUND_QUEUE = "inbound_queue"
OUTBOUND_CONGESTION = "outbound_congestion"
BALANCED = "balanced"


def delay_report(profile, tolerance=None):
    """Compare the inbound and outbound curves of a profile.

    A slot whose outbound momentum exceeds inbound by more than ``tolerance``
    is an inbound queue; the reverse is outbound congestion. With no
    tolerance given, ``1e-9 * max(|inbound|, |outbound|, 1)`` is used per slot.
    """
    samples = profile.samples
    if len(samples) < 2:
        raise ValueError("a delay report needs at least two slots")
    widths = [profile.slot_width] * (len(samples) - 1)
    d_tt = demand_area([s.inbound for s in samples], widths)
    d_ta = demand_area([s.outbound for s in samples], widths)
    intervals = []
    for s in samples:
        tol = tolerance
        if tol is None:
            tol = 1e-9 * max(abs(s.inbound), abs(s.outbound), 1.0)
        if s.outbound - s.inbound > tol:
            label = INBOUND_QUEUE
        elif s.inbound - s.outbound > tol:
            label = OUTBOUND_CONGESTION
        else:
            label = BALANCED
        intervals.append(SlotDelay(s.slot_index, label, abs(s.inbound - s.outbound)))
    return DelayReport(d_tt, d_ta, change_rate(d_tt, d_ta), tuple(intervals))


def _num(v):
    return repr(float(v))


def format_profile(profile, preamble=()):
    lines = [f"# {line}" for line in preamble]
    lines.append("slot_index,slot_start,inbound,outbound,net")
    for s in profile.samples:
        lines.append(
            f"{s.slot_index},{_num(s.slot_start)},{_num(s.inbound)},{_num(s.outbound)},{_num(s.net)}"
        )
    return "\n".join(lines) + "\n"


def format_delay_report(report, preamble=()):
    lines = [f"# {line}" for line in preamble]
    lines.append("D_tt,D_ta,rate")
    rate = "undefined" if report.rate is None else _num(report.rate)
    lines.append(f"{_num(report.D_tt)},{_num(report.D_ta)},{rate}")
    lines.append("slot_index,classification,gap")
    for iv in report.intervals:
        lines.append(f"{iv.slot_index},{iv.classification},{_num(iv.gap)}")
    return "\n".join(lines) + "\n"
