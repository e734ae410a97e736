import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def kyoto():
    from rlreadout.device import preset
    return preset("kyoto")


@pytest.fixture(scope="session")
def brisbane():
    from rlreadout.device import preset
    return preset("brisbane")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
