import numpy as np
import pytest

from knkz.basis import KNBasis
from knkz.curves import MarkedCurve

TAU = 0.3 + 1.1j


def random_g0_points(rng, count, spread=2.0, min_gap=0.5):
    """Distinct, well-separated points on the sphere's affine chart."""
    while True:
        pts = rng.uniform(-spread, spread, count) \
            + 1j * rng.uniform(-spread, spread, count)
        if all(abs(pts[i] - pts[j]) > min_gap
               for i in range(count) for j in range(i + 1, count)):
            return [complex(z) for z in pts]


def random_g1_curve(rng, count, tau=None, min_gap=0.3):
    """A genus-1 curve with `count` in-points plus an out-point, all kept
    apart mod the lattice."""
    if tau is None:
        tau = complex(rng.uniform(-0.45, 0.45) + 1j * rng.uniform(0.9, 1.4))
    for _ in range(200):
        x = rng.uniform(-0.5, 0.5, count + 1)
        y = rng.uniform(-0.5, 0.5, count + 1)
        pts = [complex(a + b * tau) for a, b in zip(x, y)]
        curve = None
        try:
            curve = MarkedCurve(1, pts[:count], out_point=pts[count], tau=tau)
        except ValueError:
            continue
        if curve.min_gap() > min_gap * min(1.0, abs(tau) / 2):
            return curve
    raise RuntimeError("could not sample a generic configuration")


@pytest.fixture(scope="session")
def curve_g0_n2():
    return MarkedCurve(0, [0.0, 1.0])


@pytest.fixture(scope="session")
def basis_g0_n2(curve_g0_n2):
    return KNBasis(curve_g0_n2)


@pytest.fixture(scope="session")
def curve_classical():
    return MarkedCurve(0, [0.0])


@pytest.fixture(scope="session")
def basis_classical(curve_classical):
    return KNBasis(curve_classical)


@pytest.fixture(scope="session")
def curve_g1_n2():
    return MarkedCurve(1, [0.1 + 0.2j, -0.23 + 0.31j],
                       out_point=0.05 - 0.35j, tau=TAU)


@pytest.fixture(scope="session")
def basis_g1_n2(curve_g1_n2):
    return KNBasis(curve_g1_n2)


@pytest.fixture(scope="session")
def curve_g1_n1():
    return MarkedCurve(1, [0.13 + 0.21j], out_point=-0.2 - 0.33j, tau=TAU)


@pytest.fixture(scope="session")
def basis_g1_n1(curve_g1_n1):
    return KNBasis(curve_g1_n1)
