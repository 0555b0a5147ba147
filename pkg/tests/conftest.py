from __future__ import annotations
import pytest
from pyuzawa.metadata import ElasticityParams, RandomQPParams, StokesParams
from pyuzawa.problems import gen_elasticity, gen_random_qp, gen_stokes_q1p0


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the table reproductions marked slow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def qp_problem():
    """Random quadratic program with a positive penalty and a known solution."""
    return gen_random_qp(RandomQPParams(12, 4, epsilon=0.5, seed=3))


@pytest.fixture
def qp_problem_d0():
    return gen_random_qp(RandomQPParams(10, 3, epsilon=0.0, seed=7))


@pytest.fixture
def elasticity_small():
    return gen_elasticity(ElasticityParams(4))


@pytest.fixture
def stokes_small():
    return gen_stokes_q1p0(StokesParams(4))
