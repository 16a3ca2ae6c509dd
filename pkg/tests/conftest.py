"""Session-scoped builds shared across test modules (building is the slow part)."""

import pytest

from mpqp.benchmarks import (clamp_problem, hello_world_problem,
                             monotone_problem, mpc_problem, portfolio_problem,
                             power_problem)
from mpqp.builder import build_explore
from mpqp.tree import build_tree


def _built(factory, **kw):
    qp, maps = factory(**kw)
    solution = build_explore(qp, maps)
    return solution, build_tree(solution)


@pytest.fixture(scope="session")
def clamp_built():
    return _built(clamp_problem)


@pytest.fixture(scope="session")
def hello_built():
    return _built(hello_world_problem, seed=0)


@pytest.fixture(scope="session")
def power_built():
    return _built(power_problem)


@pytest.fixture(scope="session")
def monotone_built():
    return _built(monotone_problem, seed=0)


@pytest.fixture(scope="session")
def mpc_built():
    return _built(mpc_problem, seed=0)


@pytest.fixture(scope="session")
def portfolio_built():
    return _built(portfolio_problem, seed=0)
