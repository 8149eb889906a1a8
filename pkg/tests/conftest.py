import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from taxelfield.field import GridSpec, KernelParams
from taxelfield.ingest import VectorBatch

settings.register_profile(
    "default", max_examples=100, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

RTOL = 1e-9


def assert_slices_close(a, b, rtol=RTOL):
    """Per-component relative agreement of two slices' cell arrays.

    The absolute floor (1e-12 of the slice's largest magnitude) only matters
    where a vector sum cancels almost to zero.
    """
    assert a.grid == b.grid
    for name in ("density", "vx", "vy"):
        x, y = getattr(a, name), getattr(b, name)
        scale = max(np.abs(x).max(initial=0.0), np.abs(y).max(initial=0.0))
        bound = rtol * np.maximum(np.abs(x), np.abs(y)) + 1e-12 * scale
        bad = np.abs(x - y) > bound
        assert not bad.any(), f"{name} differs at {np.argwhere(bad)[:5].tolist()}"


coord = st.floats(-2000, 2000, allow_nan=False, allow_infinity=False)


@st.composite
def grids(draw, max_cells=20):
    cs = draw(st.floats(10, 300))
    return GridSpec(draw(coord), draw(coord), cs,
                    draw(st.integers(1, max_cells)), draw(st.integers(1, max_cells)))


@st.composite
def kernels(draw):
    return KernelParams(draw(st.floats(5, 1500)), draw(st.sampled_from([21.75, 3.0, 1.0])))


@st.composite
def vector_batches(draw, max_size=100, t0=0.0, t1=3600.0, near=None):
    """Random travel vectors; ``near`` is a grid to scatter them around."""
    n = draw(st.integers(0, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    if near is not None:
        lo = (near.min_x - 500, near.min_y - 500)
        hi = (near.max_x + 500, near.max_y + 500)
    else:
        lo, hi = (-3000, -3000), (3000, 3000)
    sx = rng.uniform(lo[0], hi[0], n)
    sy = rng.uniform(lo[1], hi[1], n)
    length = rng.exponential(400, n) * (rng.random(n) > 0.05)
    ang = rng.uniform(0, 2 * np.pi, n)
    a = rng.uniform(t0, t1, n)
    b = rng.uniform(t0, t1, n)
    st_, et = np.minimum(a, b), np.maximum(a, b) + 1e-3
    return VectorBatch(sx, sy, sx + length * np.cos(ang), sy + length * np.sin(ang), st_, et,
                       np.array([f"V{k % 7}" for k in range(n)], dtype=object))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
