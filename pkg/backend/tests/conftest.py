import os
import sys

# Add backend/ to path so imports work
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from services.lce_service import new_problem, path_graph
from services.statevector_service import rx, rz


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale runs (deselect with -m 'not slow')")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def path3():
    return path_graph(3)


@pytest.fixture
def path5():
    return path_graph(5)


@pytest.fixture
def problem3(path3):
    return new_problem(path3, seed=7)


@pytest.fixture
def random_unitary():
    """Random 2x2 unitary from ZXZ Euler angles."""
    def draw(rng: np.random.Generator) -> np.ndarray:
        a, b, c = rng.uniform(-np.pi, np.pi, size=3)
        return rz(a) @ rx(b) @ rz(c)
    return draw
