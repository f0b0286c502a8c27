import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Deterministic property tests: the suite doubles as an acceptance record,
# so example selection must not vary between runs.
settings.register_profile(
    "suite",
    deadline=None,
    derandomize=True,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

SEED = 20260818


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)
