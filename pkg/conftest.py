"""Shared fixtures: small graphs and the built-in example runs, computed once per session."""

import pytest

from graph_core import build_graph, build_matrices, cycle_graph
from scenarios import builtin_example, run_scenario


@pytest.fixture(scope='session')
def c6():
    return cycle_graph(6)


@pytest.fixture(scope='session')
def c6_matrices(c6):
    return build_matrices(c6)


@pytest.fixture(scope='session')
def p2():
    return build_graph(2, [(0, 1)])


@pytest.fixture(scope='session')
def p2_matrices(p2):
    return build_matrices(p2)


@pytest.fixture(scope='session')
def example1_reject():
    return run_scenario(builtin_example(1))


@pytest.fixture(scope='session')
def example1_baseline():
    return run_scenario(builtin_example(1, 'baseline'))


@pytest.fixture(scope='session')
def example1_constant_point():
    return run_scenario(builtin_example(1, 'constant-point'))


@pytest.fixture(scope='session')
def example2_damped():
    return run_scenario(builtin_example(2))


@pytest.fixture(scope='session')
def example2_baseline():
    return run_scenario(builtin_example(2, 'baseline'))


@pytest.fixture(scope='session')
def example3_formation():
    return run_scenario(builtin_example(3))


@pytest.fixture(scope='session')
def example3_baseline():
    return run_scenario(builtin_example(3, 'baseline'))
