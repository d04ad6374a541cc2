# tests/conftest.py
import numpy as np
import pytest

from src.fem import FeFunction, FeSpace
from src.mesh import build_structured, refine_uniform
from src.problems import Problem


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow convergence regressions")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pair_2d():
    """Coarse n=4 square refined by 2"""
    coarse = build_structured(2, 4)
    fine, refinement = refine_uniform(coarse, 2)
    return coarse, fine, refinement


@pytest.fixture
def pair_3d():
    coarse = build_structured(3, 2)
    fine, refinement = refine_uniform(coarse, 2)
    return coarse, fine, refinement


def zero_problem(dim: int) -> Problem:
    return Problem(name='zero', dim=dim, f=lambda p: np.zeros(p.shape[0]))


@pytest.fixture
def zero_2d():
    return zero_problem(2)


def random_function(space: FeSpace, rng):
    return FeFunction(space, rng.standard_normal(space.n_free))
