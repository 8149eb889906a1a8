import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from taxelfield.geometry import point_segment_distance, point_segment_distance_array


@pytest.mark.parametrize(
    "args, expected",
    [
        ((0, 0, 1, -1, 1, 1), 1.0),
        ((0, 0, 1, 1, 2, 2), math.sqrt(2)),
        ((3, 4, 0, 0, 0, 0), 5.0),
    ],
)
def test_examples(args, expected):
    assert point_segment_distance(*args) == pytest.approx(expected, abs=1e-15)
    assert point_segment_distance_array(*args) == pytest.approx(expected, abs=1e-15)


finite = st.floats(-1e4, 1e4, allow_nan=False)


def _sampled_distance(px, py, ax, ay, bx, by, k=20001):
    t = np.linspace(0.0, 1.0, k)
    return np.hypot(ax + t * (bx - ax) - px, ay + t * (by - ay) - py).min()


@given(finite, finite, finite, finite, finite, finite)
def test_matches_dense_sampling_of_segment(px, py, ax, ay, bx, by):
    r = point_segment_distance(px, py, ax, ay, bx, by)
    sampled = _sampled_distance(px, py, ax, ay, bx, by)
    # the sampled minimum can only overshoot, by at most half a sample step
    step = math.hypot(bx - ax, by - ay) / 20000
    assert r <= sampled + 1e-9
    assert sampled - r <= step / 2 + 1e-9 * (1 + r)


@given(finite, finite, finite, finite, finite, finite)
def test_array_version_is_bit_identical(px, py, ax, ay, bx, by):
    assert point_segment_distance_array(px, py, ax, ay, bx, by) == point_segment_distance(
        px, py, ax, ay, bx, by
    )


@given(finite, finite, finite, finite, finite, finite)
def test_symmetric_in_endpoints(px, py, ax, ay, bx, by):
    r1 = point_segment_distance(px, py, ax, ay, bx, by)
    r2 = point_segment_distance(px, py, bx, by, ax, ay)
    assert r1 == pytest.approx(r2, rel=1e-9, abs=1e-9)
