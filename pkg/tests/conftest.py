import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from randassign import ProblemInstance


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(rng, n, d, k=6, l=3):
    return ProblemInstance(rng.random((n, d)), k, l)


@pytest.fixture
def small_instance(rng):
    return random_instance(rng, 10, 8, k=6, l=3)
