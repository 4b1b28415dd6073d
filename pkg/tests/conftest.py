import numpy as np
import pytest

from nkmoment.frame import ConfigPoint
from nkmoment.torus import TorusSpec


"""
Fixtures
"""


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def spec():
    return TorusSpec.lagrangian()


@pytest.fixture
def cfg(rng):
    return ConfigPoint.random(rng)
