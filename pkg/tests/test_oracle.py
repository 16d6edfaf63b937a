"""Centralized reference solutions and the dual reference run."""

import numpy as np
import pytest

from pdopt.objectives import Huber, Quadratic, StackedObjective
from pdopt.oracle import InfeasibleError, dual_reference, oracle_solution, solve_centralized
from pdopt.sets import Ball, Box, HalfSpace, ProductSet, WholeSpace

from conftest import example51_parts, example51_sets
from test_solver import huber_ring_problem


def test_unconstrained_huber_mean_is_analytic():
    rng = np.random.default_rng(0)
    offsets = rng.uniform(1.5, 2.5, size=10)
    parts = [Huber([a]) for a in offsets]
    sol = solve_centralized(parts, [WholeSpace(1)] * 10)
    mean = offsets.mean()
    assert abs(np.max(np.abs(offsets - mean))) <= 1.0  # inside the quadratic branch
    assert sol.provenance == "analytic"
    assert sol.x_star[0] == pytest.approx(mean, abs=0)
    assert sol.f_star == pytest.approx(float(np.sum((mean - offsets) ** 2) / 2), rel=1e-15)
    assert sol.X_star.shape == (10, 1)


def test_quadratic_over_containing_ball_returns_center():
    c = np.array([0.3, -0.2])
    part = Quadratic(np.eye(2), -c)  # ||x - c||^2 / 2 up to a constant
    sol = solve_centralized([part], [Ball([0.0, 0.0], 1.0)])
    assert np.linalg.norm(sol.x_star - c) <= 1e-7
    assert sol.provenance == "grid"


def test_three_agent_routes_agree():
    parts = example51_parts()
    sets = example51_sets()
    pg = solve_centralized(parts, sets, method="projected_gradient")
    grid = solve_centralized(parts, sets, method="auto")
    assert grid.provenance == "grid"
    assert np.linalg.norm(pg.x_star - grid.x_star) <= 1e-6
    assert abs(pg.f_star - grid.f_star) <= 1e-6


def test_three_agent_solution_golden_and_on_boundary():
    # frozen from the two agreeing independent routes
    sol = solve_centralized(example51_parts(), example51_sets())
    assert np.allclose(sol.x_star, [-1.0, -0.58264211], atol=1e-6)
    assert sol.f_star == pytest.approx(-5.4436648734, abs=1e-6)
    # at the boundary of the intersection: the x_1 >= -1 face is active
    margins = [
        np.sqrt(2.0) - np.linalg.norm(sol.x_star),
        sol.x_star[0] + 1.0,
        -0.5 - sol.x_star[1],
    ]
    assert min(margins) <= 1e-6
    assert all(m >= -1e-9 for m in margins)


def test_grid_refinement_reaches_fine_pitch():
    # minimizer at an irrational interior point of a box
    target = np.array([1 / 3])
    part = Quadratic([[2.0]], -2.0 * target)
    sol = solve_centralized([part], [Box([-1.0], [1.0])], method="grid")
    assert abs(sol.x_star[0] - target[0]) <= 1e-7


def test_infeasible_intersection_detected():
    parts = [Quadratic(np.eye(2), np.zeros(2))] * 2
    sets = [Ball([0.0, 0.0], 0.5), Ball([5.0, 5.0], 0.5)]
    with pytest.raises(InfeasibleError):
        solve_centralized(parts, sets, method="grid")


def test_projected_gradient_route_in_higher_dimension():
    # m = 3 leaves the grid out entirely
    c = np.array([0.5, -1.0, 2.0])
    part = Quadratic(np.eye(3), -c)
    sol = solve_centralized([part], [WholeSpace(3)])
    assert sol.provenance == "projected_gradient"
    assert np.linalg.norm(sol.x_star - c) <= 1e-9


def test_dual_reference_satisfies_stationarity():
    problem = huber_ring_problem(n=5, offset=2.0, spread=0.6)
    lam = dual_reference(problem, 0.4)
    x_star = np.mean([p.a[0] for p in problem.objective.parts])
    grad = problem.objective.gradient(np.full((5, 1), x_star))
    residual = grad + problem.graph.laplacian @ lam
    assert np.linalg.norm(residual) <= 1e-10


def test_dual_reference_retries_smaller_steps(three_agent_problem):
    # the requested step diverges; the reference must still come back
    lam = dual_reference(three_agent_problem, 0.4, max_iters=50_000)
    assert np.all(np.isfinite(lam))
    sol = solve_centralized(example51_parts(), example51_sets())
    grad = three_agent_problem.objective.gradient(np.tile(sol.x_star, (3, 1)))
    stationarity = grad + three_agent_problem.graph.laplacian @ lam
    # constrained stationarity: the combined gradient field equals minus a
    # normal-cone element blockwise.  Agents 1 and 3 hold x* strictly inside
    # their sets (zero cone); agent 2 sits on its x_1 >= -1 face, whose
    # normal cone is spanned by (-1, 0).
    assert np.linalg.norm(stationarity[0]) <= 1e-6
    assert np.linalg.norm(stationarity[2]) <= 1e-6
    assert stationarity[1, 0] >= 0.0
    assert abs(stationarity[1, 1]) <= 1e-6


def test_oracle_solution_dual_flag(three_agent_problem):
    without = oracle_solution(three_agent_problem)
    assert without.lam_star is None
    with_dual = oracle_solution(three_agent_problem, alpha=0.35)
    assert with_dual.lam_star is not None and with_dual.lam_star.shape == (3, 2)


def test_mismatched_inputs_rejected():
    with pytest.raises(ValueError):
        solve_centralized([Huber([2.0])], [])
    with pytest.raises(ValueError):
        solve_centralized([Huber([2.0])], [WholeSpace(1)], method="banana")
