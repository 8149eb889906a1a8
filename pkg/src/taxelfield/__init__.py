"""Vector kernel density fields from GPS trajectories, and POI projections.

GPS fixes become travel vectors (:mod:`taxelfield.ingest`), travel vectors
become per-time-slot grids of density and momentum (:mod:`taxelfield.field`),
and those grids are projected onto points of interest to get inbound and
outbound momentum profiles and queue-delay reports
(:mod:`taxelfield.projection`). :mod:`taxelfield.baseline` holds the raw
trajectory-scan query used as an oracle and benchmark opponent.
"""

__version__ = "0.1.0"

from .baseline import BenchmarkReport, CrossingCounts, benchmark, filter_trajectories
from .field import (
    FieldMismatchError,
    FieldSlice,
    FieldStore,
    GridSpec,
    KernelParams,
    WeightingMode,
    build_field,
    build_slice,
    empty_slice,
    kernel_value,
    update_slice,
)
from .fieldio import (
    DecodeError,
    deserialize_field,
    deserialize_slice,
    read_field,
    serialize_field,
    serialize_slice,
    write_field,
)
from .geometry import point_segment_distance
from .ingest import (
    FilterConfig,
    GpsPoint,
    PointTable,
    SchemaConfig,
    TimeSlot,
    TravelVector,
    VectorBatch,
    build_travel_vectors,
    clip_batch,
    clip_to_slot,
    parse_points,
    project_coords,
    tile_slots,
)
from .projection import (
    DelayReport,
    Poi,
    ProjectionParams,
    ProjectionProfile,
    build_profile,
    change_rate,
    delay_report,
    demand_area,
    project_slice,
)
from .synthetic import ScenarioConfig, generate_synthetic, write_points
