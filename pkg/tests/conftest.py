import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "kam",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("kam")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
