import numpy as np
import pytest

from alloclab.core import BernoulliArms, RandomStream


@pytest.fixture
def arms75() -> BernoulliArms:
    return BernoulliArms((0.7, 0.5))


@pytest.fixture
def rng():
    return RandomStream(424242, 0).generator()


def interior_p(rng, K: int, low: float = 0.05, high: float = 0.95) -> np.ndarray:
    """Random success probabilities kept away from the boundary."""
    return rng.uniform(low, high, size=K)
