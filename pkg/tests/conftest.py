import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "corrlink",
    deadline=None,
    max_examples=200,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("corrlink")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
