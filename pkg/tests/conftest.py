import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from bvsym.bvcalc import BVFunction1D, RadialBVFunction
from bvsym.rearrange import MeasuredSample

settings.register_profile(
    "bvsym",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", parent=settings.get_profile("bvsym"), max_examples=400)
settings.load_profile(os.environ.get("BVSYM_HYPOTHESIS_PROFILE", "bvsym"))


def hat(N: int = 1000) -> BVFunction1D:
    """(1 - |x|)_+ on (-1, 1)."""
    d = np.where(np.arange(N) < N // 2, 1.0, -1.0)
    return BVFunction1D((-1.0, 1.0), d)


def indicator_01() -> BVFunction1D:
    """Indicator of (0, 1) inside (-1, 1)."""
    return BVFunction1D((-1.0, 1.0), np.zeros(8), ((0.0, 1.0),))


def hat_plus_box(N: int = 1000) -> BVFunction1D:
    """Hat plus the indicator of (-1/2, 1/2)."""
    d = np.where(np.arange(N) < N // 2, 1.0, -1.0)
    return BVFunction1D((-1.0, 1.0), d, ((-0.5, 1.0), (0.5, -1.0)))


def two_bumps() -> BVFunction1D:
    """Unit indicators of (-0.8, -0.4) and (0.4, 0.8) in (-1, 1)."""
    return BVFunction1D((-1.0, 1.0), np.zeros(10), ((-0.8, 1.0), (-0.4, -1.0), (0.4, 1.0), (0.8, -1.0)))


def cone(n: int = 2, M: int = 512) -> RadialBVFunction:
    """1 - rho on the unit ball; drops to zero continuously at the sphere."""
    rho = np.linspace(0.0, 1.0, M + 1)
    return RadialBVFunction(n, 1.0, 1.0 - rho)


@st.composite
def bv1d_functions(draw, max_cells: int = 40):
    """Non-negative piecewise-linear functions with positive bumps."""
    N = draw(st.integers(2, max_cells))
    a = draw(st.floats(-3.0, 3.0))
    L = draw(st.floats(0.25, 4.0))
    nodes = draw(st.lists(st.floats(0.0, 3.0), min_size=N, max_size=N))
    vals = np.concatenate([[0.0], nodes])
    density = np.diff(vals) / (L / N)
    k = draw(st.integers(0, 3))
    atoms = {}
    for _ in range(k):
        x1 = draw(st.floats(0.02, 0.9))
        x2 = draw(st.floats(x1 + 0.05, 1.1))
        g = draw(st.floats(0.1, 2.0))
        atoms[a + x1 * L] = atoms.get(a + x1 * L, 0.0) + g
        if x2 < 1.0:
            atoms[a + x2 * L] = atoms.get(a + x2 * L, 0.0) - g
    merged = tuple((x, h) for x, h in sorted(atoms.items()) if h != 0.0)
    return BVFunction1D((a, a + L), density, merged)


@st.composite
def radial_functions(draw, max_nodes: int = 30):
    n = draw(st.integers(2, 3))
    R = draw(st.floats(0.3, 2.0))
    M = draw(st.integers(2, max_nodes))
    prof = np.array(draw(st.lists(st.floats(0.0, 3.0), min_size=M + 1, max_size=M + 1)))
    atoms = []
    if draw(st.booleans()):
        r = draw(st.floats(0.1, 0.9)) * R
        atoms.append((r, draw(st.floats(0.1, 2.0))))
    return RadialBVFunction(n, R, prof, tuple(atoms))


@st.composite
def sample_sets(draw, min_size: int = 1, max_size: int = 30):
    k = draw(st.integers(min_size, max_size))
    vals = draw(st.lists(st.sampled_from([0.0, 0.5, 1.0, 2.5]) | st.floats(0.0, 5.0), min_size=k, max_size=k))
    meas = draw(st.lists(st.floats(0.01, 2.0), min_size=k, max_size=k))
    return [MeasuredSample(v, m) for v, m in zip(vals, meas)]


@pytest.fixture
def hat_fn():
    return hat()
