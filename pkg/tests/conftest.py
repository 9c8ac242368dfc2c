"""
Pytest configuration and shared fixtures.

Fixtures are reusable test components that can be injected into test functions.
"""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from src.config import TinkConfig
from src.core.primitives import icosphere, sphere_sdf
from src.core.sdf import grid_from_function, mesh_to_sdf
from src.hand.template import default_rig


@pytest.fixture
def client():
    """
    Create a test client for the FastAPI app.

    The 'yield' allows cleanup after the test if needed.
    """
    from main import app

    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture(scope="session")
def rig():
    """Default procedural hand rig (built once per session)."""
    return default_rig()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def fast_config():
    """Coarse grids and short runs so pipeline tests finish in seconds."""
    return TinkConfig().with_overrides(
        {
            "sdf": {"resolution": 32},
            "shape_path": {"n_itpl": 2, "max_resolution": 64, "mesh_workers": 2},
            "refine": {"iterations": 30, "early_exit_window": 30},
            "mokap": {"iterations": 50},
            "metrics": {"voxel": 0.004},
            "simulation": {"steps": 20, "repeats": 2, "hand_sdf_resolution": 16, "max_samples": 64},
        }
    )


@pytest.fixture(scope="session")
def analytic_sphere_grid():
    """Sphere of radius 0.1 m sampled from its analytic SDF at 5 mm spacing."""
    return grid_from_function(lambda p: sphere_sdf(p, 0.1), (-0.15,) * 3, (0.15,) * 3, 0.005)


@pytest.fixture(scope="session")
def small_sphere():
    return icosphere(0.05, subdivisions=3)


@pytest.fixture(scope="session")
def small_sphere_grid(small_sphere):
    return mesh_to_sdf(small_sphere, 0.01, 32)
