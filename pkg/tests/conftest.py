import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cascade_stokes import EllipseProfile, build_geometry, generate_mesh, structured_mesh

settings.register_profile(
    "suite",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def strip():
    return build_geometry(1.0, 2.0)


@pytest.fixture(scope="session")
def curved_strip():
    return build_geometry(1.0, 2.0, lower_curve=[[0.0, 0.0], [1.0, 0.2], [2.0, 0.0]])


@pytest.fixture(scope="session")
def bladed():
    return build_geometry(1.0, 2.0, profile=EllipseProfile((1.0, 0.5), (0.3, 0.1)))


@pytest.fixture(scope="session")
def strip_mesh(strip):
    return structured_mesh(strip, 8, 4)


@pytest.fixture(scope="session")
def small_mesh(strip):
    return structured_mesh(strip, 4, 2)


@pytest.fixture(scope="session")
def curved_mesh(curved_strip):
    return generate_mesh(curved_strip, 0.125, kind="unstructured")


@pytest.fixture(scope="session")
def bladed_mesh(bladed):
    return generate_mesh(bladed, 0.1)


def sine_g(tau=1.0):
    return lambda x: np.stack([np.sin(2 * np.pi * x[..., 1] / tau), np.zeros(x.shape[:-1])], axis=-1)


def const(v):
    v = np.asarray(v, dtype=float)
    return lambda x: np.broadcast_to(v, np.asarray(x).shape[:-1] + v.shape).copy()
