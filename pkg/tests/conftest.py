import numpy as np
import pytest
from hypothesis import settings

from noisy_portfolio import RandomStream, make_sphere

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


class PinnedNormal:
    """Stand-in generator whose Gaussian draws are all equal to ``value``."""

    def __init__(self, value):
        self.value = float(value)

    def standard_normal(self, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)


@pytest.fixture
def stream():
    return RandomStream(seed=12345)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def noiseless_sphere():
    return make_sphere(2, 0, noise_scale=0.0)


@pytest.fixture
def sphere_z0():
    return make_sphere(2, 0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'}  {detail}")
