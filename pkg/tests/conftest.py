import numpy as np
import pytest

from mamlflow import counterexample_pool, two_task_pool
from mamlflow.datagen import random_quadratic_pool


@pytest.fixture
def two_task():
    return two_task_pool()


@pytest.fixture
def counterexample():
    return counterexample_pool()


@pytest.fixture
def quad_pool():
    return random_quadratic_pool(4, 3, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
