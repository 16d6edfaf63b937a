"""Shared fixtures: bundled scenario pipelines are expensive, build them once."""

import numpy as np
import pytest

from pdopt.diagnostics import build_certificate_context
from pdopt.graphs import GraphSpec, build_graph
from pdopt.objectives import QuadraticExp, StackedObjective
from pdopt.oracle import oracle_solution
from pdopt.scenarios import build_problem, bundled_scenario, run_algorithm
from pdopt.sets import Ball, HalfSpace, ProductSet
from pdopt.solver import Problem


def example51_parts():
    return (
        QuadraticExp([[1, 1], [1, 2]], [3, 2], [(0.5, [1, 1])]),
        QuadraticExp([[2, 1], [1, 4]], [2, 2], [(1.0, [0, 1])]),
        QuadraticExp([[4, 0], [0, 2]], [4, 2], [(1.0, [1, 0])]),
    )


def example51_sets():
    return (
        Ball([0.0, 0.0], np.sqrt(2.0)),
        HalfSpace([-1.0, 0.0], 1.0),
        HalfSpace([0.0, 1.0], -0.5),
    )


@pytest.fixture(scope="session")
def three_agent_problem():
    graph = build_graph(GraphSpec(3, ((1, 3), (2, 3), (1, 1), (2, 2), (3, 3)), "metropolis"))
    return Problem(graph=graph, objective=StackedObjective(example51_parts()), sets=ProductSet(example51_sets()))


class Pipeline:
    """A scenario together with everything a diagnostic test needs."""

    def __init__(self, name, algorithms=("pd",)):
        self.scenario = bundled_scenario(name)
        self.problem = build_problem(self.scenario)
        self.oracle = oracle_solution(
            self.problem, alpha=self.scenario.alpha, x0=self.scenario.x0, lam0=self.scenario.lam0
        )
        self.ctx = build_certificate_context(
            self.problem,
            self.scenario.alpha,
            self.oracle.x_star,
            self.oracle.lam_star,
            x0=self.scenario.x0,
            lam0=self.scenario.lam0,
        )
        self.traces = {algo: run_algorithm(self.problem, self.scenario, algo) for algo in algorithms}

    @property
    def trace(self):
        return self.traces["pd"]


@pytest.fixture(scope="session")
def ex51_stable(request):
    return Pipeline("example51_stable")


@pytest.fixture(scope="session")
def ex52(request):
    return Pipeline("example52", algorithms=("pd", "dgd_const", "dgd_075", "dgd_04"))
