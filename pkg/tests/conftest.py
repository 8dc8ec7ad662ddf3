import numpy as np
import pytest

from sbpfdtd.backend import available_backends, select_backend
from sbpfdtd.grids import COMPONENTS, GridSpec
from sbpfdtd.materials import MaterialGrid


needs_numba = pytest.mark.skipif(
    "numba" not in available_backends(),
    reason="numba backend not importable in this environment",
)


@pytest.fixture(autouse=True)
def _default_backend():
    # every test starts from the preferred backend; individual tests
    # that switch put it back through this same hook
    select_backend(None)
    yield
    select_backend(None)


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


@pytest.fixture
def small_grid():
    # deliberately anisotropic so axis mixups cannot cancel
    return GridSpec(4, 5, 6, 0.3, 0.25, 0.2)


@pytest.fixture
def vacuum(small_grid):
    return MaterialGrid.uniform(small_grid)


def fill_random(sim, rng, components=COMPONENTS, scale=1.0):
    """Load iid normal values into the chosen field components."""
    for c in components:
        arr = sim.fields[c]
        vals = rng.standard_normal(arr.shape) * scale
        if np.iscomplexobj(arr):
            vals = vals + 1j * rng.standard_normal(arr.shape) * scale
        arr[...] = vals
