import warnings

import pytest
from hypothesis import HealthCheck, settings

from symkit.errors import CapTooSmallWarning

settings.register_profile(
    "symkit",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("symkit")


@pytest.fixture(autouse=True)
def _quiet_cap_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CapTooSmallWarning)
        yield
