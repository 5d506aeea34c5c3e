import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from smnorm import FullTorus, make_grid

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def torus64():
    return make_grid(1, 64, True)


@pytest.fixture
def torus256():
    return make_grid(1, 256, True)


@pytest.fixture
def torus1d():
    return FullTorus(1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
