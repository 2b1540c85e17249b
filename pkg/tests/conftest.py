import numpy as np
import pytest

from dynkin.examples import register_examples

CORPUS = register_examples()


@pytest.fixture(scope="session")
def corpus():
    return CORPUS


def _build(example_id, grid_n):
    return CORPUS[example_id].build(grid_n=grid_n)


@pytest.fixture(scope="session")
def ex_4_2():
    return _build("ex_4_2", 1201)


@pytest.fixture(scope="session")
def ex_4_3():
    return _build("ex_4_3", 3001)


@pytest.fixture(scope="session")
def ex_4_4():
    # unit-test resolution; the acceptance suite re-runs at dx = 1e-3
    return _build("ex_4_4", 2501)


@pytest.fixture(scope="session")
def ex_5_1():
    return _build("ex_5_1", 8001)


@pytest.fixture(scope="session")
def ex_5_2():
    return _build("ex_5_2", 4001)


@pytest.fixture(scope="session")
def ex_5_4():
    return _build("ex_5_4", 2001)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
