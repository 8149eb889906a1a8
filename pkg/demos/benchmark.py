"""
Precomputed field vs. trajectory scan
=====================================

Time per-POI projection queries over a prebuilt field against a full scan
of the raw travel vectors (no spatial index, by design). The acceptance
suite runs the same comparison at 1000 vehicles x 24 h; the scan cost grows
with the corpus while a projection only touches the grid, so the ratio widens
with fleet size. Pass a fleet size as the first argument.
"""

import sys

from taxelfield import (
    GridSpec, KernelParams, Poi, ScenarioConfig, benchmark, build_travel_vectors, generate_synthetic,
)

fleet = int(sys.argv[1]) if len(sys.argv) > 1 else 200
cfg = ScenarioConfig(fleet_size=fleet, duration=6 * 3600, interval=60, extent=10000)
vectors, _ = build_travel_vectors(generate_synthetic(cfg, seed=1))

grid = GridSpec.from_bounds(-10000, -10000, 10000, 10000, 200)
pois = [Poi(f"p{k}", 2000 * k - 4000, 1000 * k - 2000) for k in range(5)]
t0 = cfg.start_time
report = benchmark(vectors, pois, grid, KernelParams(1000), repetitions=5,
                   horizon=(t0, t0 + 6 * 3600), slot_duration=3600)

print(report.to_keyvalue())
