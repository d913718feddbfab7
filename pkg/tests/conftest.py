import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def make_rng():
    def factory(seed):
        return np.random.default_rng(seed)

    return factory
