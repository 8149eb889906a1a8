import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import vector_batches
from taxelfield.baseline import benchmark, filter_trajectories
from taxelfield.field import GridSpec, KernelParams, build_slice
from taxelfield.ingest import TimeSlot, TravelVector, VectorBatch
from taxelfield.projection import Poi, project_slice

POI = Poi("p", 100, -50)
WINDOW = TimeSlot(0, 0, 3600)


def _counts(c):
    return c.inbound_crossings, c.outbound_crossings


def test_entering_vector():
    v = TravelVector(100 + 400, -50, 100, -50, 10, 70)
    assert _counts(filter_trajectories([v], POI, 200, WINDOW)) == (1, 0)


def test_leaving_vector():
    v = TravelVector(100, -50, 100 + 400, -50, 10, 70)
    assert _counts(filter_trajectories([v], POI, 200, WINDOW)) == (0, 1)


def test_outside_and_inside_vectors():
    out = TravelVector(1000, 1000, 1200, 900, 10, 70)
    inside = TravelVector(90, -40, 110, -60, 10, 70)
    assert _counts(filter_trajectories([out, inside], POI, 200, WINDOW)) == (0, 0)


def test_cutting_across_counts_both_ways():
    v = TravelVector(-500, -50, 700, -50, 10, 70)
    c = filter_trajectories([v], POI, 200, WINDOW)
    assert _counts(c) == (1, 1) and c.matched_vector_ids.tolist() == [0, 0]


def test_event_outside_window_not_counted():
    # enters at t=50 (half-way), window ends at t=40
    v = TravelVector(500, -50, 100, -50, 0, 100)
    assert _counts(filter_trajectories([v], POI, 200, TimeSlot(0, 0, 40))) == (0, 0)
    assert _counts(filter_trajectories([v], POI, 200, TimeSlot(1, 40, 80))) == (1, 0)


def test_radius_must_be_positive():
    with pytest.raises(ValueError):
        filter_trajectories([], POI, 0, WINDOW)


@given(vector_batches(200, t0=0, t1=7200), st.floats(1, 7199), st.floats(50, 2000))
def test_window_additivity(vb, split, radius):
    poi = Poi("q", 0, 0)
    whole = filter_trajectories(vb, poi, radius, TimeSlot(0, 0, 7201))
    a = filter_trajectories(vb, poi, radius, TimeSlot(0, 0, split))
    b = filter_trajectories(vb, poi, radius, TimeSlot(1, split, 7201))
    assert sorted(whole.inbound_ids) == sorted((a + b).inbound_ids)
    assert sorted(whole.outbound_ids) == sorted((a + b).outbound_ids)


@given(vector_batches(100))
def test_determinism(vb):
    a = filter_trajectories(vb, POI, 500, WINDOW)
    b = filter_trajectories(vb, POI, 500, WINDOW)
    assert np.array_equal(a.inbound_ids, b.inbound_ids)
    assert np.array_equal(a.outbound_ids, b.outbound_ids)


@given(st.integers(0, 2**32 - 1), st.booleans(), st.integers(1, 30), st.sampled_from([0, 1]))
def test_sign_agreement_with_projection(seed, towards, count, mode):
    rng = np.random.default_rng(seed)
    radius = 1000.0
    ang = rng.uniform(0, 2 * np.pi, count)
    far = rng.uniform(1.5, 3.0, count) * radius
    near = rng.uniform(0.3, 0.8, count) * radius
    ux, uy = np.cos(ang), np.sin(ang)
    start_r, end_r = (far, near) if towards else (near, far)
    t0 = rng.uniform(0, 1800, count)
    # uniform speed: duration proportional to length
    dur = np.abs(far - near) / 10.0
    vb = VectorBatch(POI.x + start_r * ux, POI.y + start_r * uy, POI.x + end_r * ux,
                     POI.y + end_r * uy, t0, t0 + dur)
    grid = GridSpec(POI.x - 4000, POI.y - 4000, 100, 80, 80)
    inbound, outbound = project_slice(build_slice(vb, grid, KernelParams(200), mode), POI)
    c = filter_trajectories(vb, POI, radius, TimeSlot(0, 0, 4000))
    net = inbound - outbound
    assert net != 0
    assert math.copysign(1, net) == math.copysign(1, c.inbound_crossings - c.outbound_crossings)


def test_benchmark_report_shape():
    rng = np.random.default_rng(3)
    n = 500
    a = rng.uniform(0, 7200, n)
    vb = VectorBatch(*rng.uniform(-2000, 2000, (4, n)), a, a + 60)
    ticks = iter(range(10**6))
    report = benchmark(vb, [Poi("a", 0, 0), Poi("b", 500, 500)], GridSpec(-2000, -2000, 200, 20, 20),
                       KernelParams(500), repetitions=5, clock=lambda: float(next(ticks)))
    assert report.build_time > 0
    assert len(report.projection_samples) == 5 and len(report.filter_samples) == 5
    assert report.projection_latency > 0 and report.filter_latency > 0
    assert report.speedup == report.filter_latency / report.projection_latency
    kv = dict(line.split(" = ") for line in report.to_keyvalue().splitlines())
    assert {"build_time", "projection_latency", "filter_latency", "speedup"} <= kv.keys()
    assert report.to_table().splitlines()[0] == "measurement,repetition,seconds"
    assert len(report.to_table().splitlines()) == 1 + 1 + 5 + 5


def test_benchmark_errors():
    g, k = GridSpec(0, 0, 10, 2, 2), KernelParams(20)
    with pytest.raises(ValueError):
        benchmark([], [POI], g, k)
    v = [TravelVector(0, 0, 1, 1, 0, 1)]
    with pytest.raises(ValueError):
        benchmark(v, [POI], g, k, repetitions=2)
    with pytest.raises(ValueError):
        benchmark(v, [], g, k)
