import os

import pytest
from hypothesis import HealthCheck, settings

from spatial_pareto.io import load_preset
from spatial_pareto.model import make_grids

settings.register_profile("ci", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture(scope="session")
def baseline():
    return load_preset("paper-baseline")


@pytest.fixture(scope="session")
def linear():
    return load_preset("paper-linear")


@pytest.fixture(scope="session")
def coarse(baseline):
    return make_grids(baseline, 21, 40)
