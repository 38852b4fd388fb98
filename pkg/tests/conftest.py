import math

import numpy as np
import pytest

from geoloops.loopspace import Curve
from geoloops.meshes import icosphere, load_fixture
from geoloops.surface import Surface


@pytest.fixture(scope="session")
def sphere():
    return load_fixture("sphere_coarse")


@pytest.fixture(scope="session")
def sphere_fine():
    return load_fixture("sphere_fine")


@pytest.fixture(scope="session")
def small_sphere():
    return Surface(*icosphere(3), name="ico3")


@pytest.fixture(scope="session")
def torus():
    return load_fixture("torus")


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def on_equator(angle):
    return np.array([math.cos(angle), math.sin(angle), 0.0])


def circle_of_latitude(s, lat, n=48, phase=0.0):
    pts = [
        s.locate([math.cos(lat) * math.cos(phase + a), math.cos(lat) * math.sin(phase + a), math.sin(lat)])
        for a in np.linspace(0, 2 * math.pi, n, endpoint=False)
    ]
    return Curve.from_breakpoints(s, pts, closed=True)


def random_loop(s, rng, rho_max=0.3):
    c = unit(rng.normal(size=3))
    u = unit(np.cross(c, [0.3, 0.5, 0.8]))
    v = np.cross(c, u)
    rho = rng.uniform(0.02, rho_max)
    k = int(rng.integers(3, 7))
    ang = np.sort(rng.uniform(0, 2 * math.pi, k))
    pts = [s.locate(c + rho * rng.uniform(0.5, 1.2) * (math.cos(a) * u + math.sin(a) * v)) for a in ang]
    return Curve.from_breakpoints(s, pts, closed=True)


@pytest.fixture(scope="session")
def calib(sphere):
    from geoloops.homotopy import calibrate

    return calibrate(sphere)


def north_cap_circle(s, colat, n=48, phase=0.0):
    return circle_of_latitude(s, math.pi / 2 - colat, n, phase)


def pole(s, sign=1.0):
    return s.locate([0.0, 0.0, sign])
