import numpy as np
import pytest

from funnelstates import build_tower, sample_generic_state


@pytest.fixture(scope="session")
def tower():
    return build_tower((2, 2, 4))


@pytest.fixture(scope="session")
def state(tower):
    return sample_generic_state(tower, seed=42)


@pytest.fixture(scope="session")
def small_state():
    return sample_generic_state(build_tower((2, 2)), seed=7)


@pytest.fixture(scope="session")
def pure_state(tower):
    return sample_generic_state(tower, seed=11, profile="pure")


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
