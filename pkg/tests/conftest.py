import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import geoexp as gx
from geoexp import implicit as imp

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def sphere_sdf():
    return gx.build_csg_field(imp.sphere(radius=1.0))


@pytest.fixture()
def plane_field():
    return gx.build_csg_field(imp.plane())


@pytest.fixture(scope="session")
def torus_sdf():
    return gx.build_csg_field(imp.torus(major_radius=0.7, minor_radius=0.3))


@pytest.fixture(scope="session")
def dented_sphere():
    """Unit sphere with a pothole: a small ball subtracted at colatitude 0.12."""
    c = 0.12
    center = (np.sin(c), 0.0, np.cos(c))
    dent = imp.sphere(radius=0.05, center=center)
    return gx.build_csg_field(imp.intersection(imp.sphere(radius=1.0), imp.complement(dent)))


@pytest.fixture(scope="session")
def fast_smoothing():
    """Raw-gradient fast path for exact-SDF fixtures."""
    return gx.SmoothingConfig(enabled=False)


def uniform_sphere_points(count: int, seed: int = 7) -> np.ndarray:
    from geoexp import rng

    u = rng.uniforms(rng.derive_key(seed), 2 * count).reshape(count, 2)
    z = 2.0 * u[:, 0] - 1.0
    ang = 2.0 * np.pi * u[:, 1]
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.column_stack([r * np.cos(ang), r * np.sin(ang), z])
