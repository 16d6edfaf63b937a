"""Distributed constrained consensus optimization via a projected primal-dual method.

Agents on an undirected graph jointly minimize a sum of private smooth convex
objectives over the intersection of private convex sets.  The package
provides the constant-step projected primal-dual iteration, distributed
gradient descent baselines, graph and projection utilities, Lyapunov-based
convergence certificates with averaged-value rate bounds, a centralized
oracle, and a reproducible scenario harness.
"""

from .diagnostics import (
    CertificateContext,
    RateCertificates,
    StepSizeReport,
    TRACE_COLUMNS,
    build_certificate_context,
    consensus_spread_series,
    lyapunov,
    lyapunov_series,
    normalized_error,
    normalized_error_series,
    rate_certificates,
    residual,
    saddle_distance_series,
    step_size_report,
    telescoping_error_series,
    terminal_normal_cone_ok,
    time_average,
    time_averages,
    trace_table,
    validate_step_size,
    write_trace_csv,
)
from .graphs import GraphError, GraphSpec, NetworkGraph, build_graph, metropolis_weights, random_graph_spec, unit_weights
from .objectives import Huber, Objective, Quadratic, QuadraticExp, StackedObjective, local_gradient_lipschitz
from .oracle import InfeasibleError, OracleError, OracleSolution, dual_reference, oracle_solution, solve_centralized
from .scenarios import (
    ALGORITHMS,
    AlgorithmResult,
    RunReport,
    Scenario,
    ScenarioError,
    build_problem,
    bundled_scenario,
    bundled_scenario_path,
    load_scenario,
    run_scenario,
    save_scenario,
    scenario_context,
    scenario_from_dict,
    scenario_oracle,
)
from .sets import Ball, Box, ConvexSet, HalfSpace, ProductSet, WholeSpace, in_normal_cone
from .solver import (
    NonFiniteIterateError,
    PdState,
    Problem,
    RunTrace,
    dgd_run,
    dgd_step,
    initial_pd_state,
    pd_run,
    pd_step,
    residual_vector,
)

__version__ = "0.1.0"
