"""Scenario files, bundled experiments, and run orchestration.

A scenario is a fully materialized experiment definition: graph, per-agent
objectives and constraint sets, step size, initial iterates, and budgets.
Scenario files are JSON; randomly drawn quantities (Huber offsets) are
materialized at load time from the scenario seed, so an emitted scenario
reloads to the identical experiment.
"""

import json
import os
import re
from dataclasses import dataclass

import numpy as np

from . import diagnostics
from .graphs import GraphSpec, build_graph, random_graph_spec
from .objectives import Huber, Quadratic, QuadraticExp, StackedObjective
from .oracle import oracle_solution
from .sets import Ball, Box, HalfSpace, ProductSet, WholeSpace
from .solver import Problem, dgd_run, pd_run

ALGORITHMS = ("pd", "dgd_const", "dgd_075", "dgd_04")
_DGD_SCHEDULE = {"dgd_const": "constant", "dgd_075": "p075", "dgd_04": "p04"}
_NAME_RE = re.compile(r"^[A-Za-z0-9_.-]+$")

_REFERENCE_MAX_ITERS = 200_000
_REFERENCE_STOP_TOL = 1e-13


class ScenarioError(ValueError):
    """A scenario file failed validation; the message names the field."""


@dataclass
class Scenario:
    """A fully materialized experiment definition."""

    name: str
    graph: GraphSpec
    objectives: tuple
    sets: tuple
    m: int
    alpha: float
    x0: np.ndarray
    lam0: np.ndarray
    max_iters: int = 10_000
    stop_tol: float = 1e-10
    seed: int = 0

    @property
    def n(self):
        return self.graph.n

    def to_dict(self):
        return {
            "name": self.name,
            "m": self.m,
            "alpha": self.alpha,
            "max_iters": self.max_iters,
            "stop_tol": self.stop_tol,
            "seed": self.seed,
            "graph": _graph_to_dict(self.graph),
            "objectives": [_objective_to_dict(o) for o in self.objectives],
            "sets": [_set_to_dict(s) for s in self.sets],
            "x0": self.x0.tolist(),
            "lam0": self.lam0.tolist(),
        }


def build_problem(scenario):
    """Construct the solver-facing problem from a scenario."""
    return Problem(
        graph=build_graph(scenario.graph),
        objective=StackedObjective(scenario.objectives),
        sets=ProductSet(scenario.sets),
    )


# -- serialization -----------------------------------------------------------


def _fail(field, msg):
    raise ScenarioError(f"{field}: {msg}")


def _require(d, key, field, kind=None):
    if key not in d:
        _fail(f"{field}.{key}", "missing")
    value = d[key]
    if kind is not None and not isinstance(value, kind):
        _fail(f"{field}.{key}", f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value


def _vector(raw, length, field):
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (length,):
        _fail(field, f"expected a vector of length {length}, got shape {arr.shape}")
    return arr


def _graph_to_dict(spec):
    weighting = spec.weighting
    if not isinstance(weighting, str):
        weighting = {"matrix": np.asarray(weighting, dtype=float).tolist()}
    return {"n": spec.n, "edges": [list(e) for e in spec.edges], "weighting": weighting}


def _graph_from_dict(d, field="graph"):
    n = _require(d, "n", field, int)
    if n < 1:
        _fail(f"{field}.n", f"agent count must be positive, got {n}")
    edges = _require(d, "edges", field, list)
    parsed = []
    for idx, e in enumerate(edges):
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            _fail(f"{field}.edges[{idx}]", "expected a pair of agent indices")
        i, j = int(e[0]), int(e[1])
        if not (1 <= i <= n and 1 <= j <= n):
            _fail(f"{field}.edges[{idx}]", f"agent indices must lie in 1..{n}, got ({i}, {j})")
        parsed.append((i, j))
    weighting = d.get("weighting", "metropolis")
    if isinstance(weighting, dict):
        weighting = np.asarray(_require(weighting, "matrix", f"{field}.weighting"), dtype=float)
    elif weighting not in ("metropolis", "unit"):
        _fail(f"{field}.weighting", f"unknown rule {weighting!r}")
    return GraphSpec(n=n, edges=tuple(parsed), weighting=weighting)


def _objective_to_dict(obj):
    if isinstance(obj, Huber):
        return {"type": "huber", "a": obj.a.tolist()}
    if isinstance(obj, QuadraticExp):
        return {
            "type": "quadratic_exp",
            "Q": obj.Q.tolist(),
            "b": obj.b.tolist(),
            "c": obj.c,
            "exp_terms": [
                {"coef": float(coef), "w": w.tolist()} for coef, w in zip(obj.exp_coefs, obj.exp_weights)
            ],
        }
    if isinstance(obj, Quadratic):
        return {"type": "quadratic", "Q": obj.Q.tolist(), "b": obj.b.tolist(), "c": obj.c}
    raise ScenarioError(f"objectives: cannot serialize {type(obj).__name__}")


def _objective_from_dict(d, m, rng, field):
    kind = _require(d, "type", field, str)
    try:
        if kind == "huber":
            return Huber(_vector(_require(d, "a", field), m, f"{field}.a"))
        if kind == "huber_uniform":
            low = float(d.get("low", 1.5))
            high = float(d.get("high", 2.5))
            return Huber(rng.uniform(low, high, size=m))
        if kind == "quadratic":
            Q = np.asarray(_require(d, "Q", field), dtype=float)
            return Quadratic(Q, _vector(_require(d, "b", field), m, f"{field}.b"), float(d.get("c", 0.0)))
        if kind == "quadratic_exp":
            Q = np.asarray(_require(d, "Q", field), dtype=float)
            terms = [
                (float(_require(t, "coef", f"{field}.exp_terms[{i}]")), _vector(_require(t, "w", f"{field}.exp_terms[{i}]"), m, f"{field}.exp_terms[{i}].w"))
                for i, t in enumerate(d.get("exp_terms", []))
            ]
            return QuadraticExp(Q, _vector(_require(d, "b", field), m, f"{field}.b"), terms, float(d.get("c", 0.0)))
    except ScenarioError:
        raise
    except ValueError as exc:
        _fail(field, str(exc))
    _fail(f"{field}.type", f"unknown objective variant {kind!r}")


def _set_to_dict(s):
    if isinstance(s, WholeSpace):
        return {"type": "whole_space", "dim": s.dim}
    if isinstance(s, Ball):
        return {"type": "ball", "center": s.center.tolist(), "radius": s.radius}
    if isinstance(s, HalfSpace):
        return {"type": "half_space", "normal": s.normal.tolist(), "offset": s.offset}
    if isinstance(s, Box):
        return {"type": "box", "lower": s.lower.tolist(), "upper": s.upper.tolist()}
    raise ScenarioError(f"sets: cannot serialize {type(s).__name__}")


def _set_from_dict(d, m, field):
    kind = _require(d, "type", field, str)
    try:
        if kind == "whole_space":
            return WholeSpace(int(d.get("dim", m)))
        if kind == "ball":
            return Ball(_vector(_require(d, "center", field), m, f"{field}.center"), float(_require(d, "radius", field)))
        if kind == "half_space":
            return HalfSpace(_vector(_require(d, "normal", field), m, f"{field}.normal"), float(_require(d, "offset", field)))
        if kind == "box":
            return Box(_vector(_require(d, "lower", field), m, f"{field}.lower"), _vector(_require(d, "upper", field), m, f"{field}.upper"))
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        _fail(field, str(exc))
    _fail(f"{field}.type", f"unknown set variant {kind!r}")


def _stacked_init(raw, n, m, field):
    if raw is None:
        return np.zeros((n, m))
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (n, m):
        _fail(field, f"expected shape {(n, m)}, got {arr.shape}")
    return arr


def scenario_from_dict(d):
    """Validate and materialize a scenario dictionary."""
    if not isinstance(d, dict):
        raise ScenarioError("scenario: expected a JSON object")
    name = _require(d, "name", "scenario", str)
    if not _NAME_RE.match(name):
        _fail("scenario.name", f"must match {_NAME_RE.pattern}")
    m = _require(d, "m", "scenario", int)
    if m < 1:
        _fail("scenario.m", f"block dimension must be positive, got {m}")
    alpha = float(_require(d, "alpha", "scenario"))
    if alpha <= 0:
        _fail("scenario.alpha", f"step size must be positive, got {alpha}")
    max_iters = int(d.get("max_iters", 10_000))
    if max_iters < 0:
        _fail("scenario.max_iters", "must be nonnegative")
    stop_tol = float(d.get("stop_tol", 1e-10))
    seed = int(d.get("seed", 0))

    graph = _graph_from_dict(_require(d, "graph", "scenario", dict))
    n = graph.n
    rng = np.random.default_rng(seed)

    raw_objectives = _require(d, "objectives", "scenario", list)
    if len(raw_objectives) != n:
        _fail("scenario.objectives", f"expected {n} entries (one per agent), got {len(raw_objectives)}")
    objectives = tuple(
        _objective_from_dict(o, m, rng, f"scenario.objectives[{i}]") for i, o in enumerate(raw_objectives)
    )

    raw_sets = _require(d, "sets", "scenario", list)
    if len(raw_sets) != n:
        _fail("scenario.sets", f"expected {n} entries (one per agent), got {len(raw_sets)}")
    sets = tuple(_set_from_dict(s, m, f"scenario.sets[{i}]") for i, s in enumerate(raw_sets))

    scenario = Scenario(
        name=name,
        graph=graph,
        objectives=objectives,
        sets=sets,
        m=m,
        alpha=alpha,
        x0=_stacked_init(d.get("x0"), n, m, "scenario.x0"),
        lam0=_stacked_init(d.get("lam0"), n, m, "scenario.lam0"),
        max_iters=max_iters,
        stop_tol=stop_tol,
        seed=seed,
    )
    try:
        build_problem(scenario)
    except ValueError as exc:
        raise ScenarioError(f"scenario: {exc}") from exc
    return scenario


def load_scenario(path, overrides=None):
    """Load, override, validate, and materialize a scenario file.

    ``overrides`` is an optional mapping of top-level fields (alpha,
    max_iters, seed, ...) applied before materialization, so overriding the
    seed redraws any randomized quantities.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario: {path} is not valid JSON ({exc})") from exc
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    return scenario_from_dict(raw)


def save_scenario(scenario, path):
    """Emit a scenario as JSON; reloading reproduces it field for field."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_dict(), fh, indent=2)
        fh.write("\n")
    return path


# -- bundled scenarios -------------------------------------------------------


def bundled_scenario_path(name):
    from importlib.resources import files

    resource = files("pdopt.data") / f"{name}.json"
    if not resource.is_file():
        raise ScenarioError(f"scenario: no bundled scenario named {name!r}")
    return resource


def bundled_scenario(name, overrides=None):
    """Load one of the scenarios shipped with the package."""
    resource = bundled_scenario_path(name)
    raw = json.loads(resource.read_text(encoding="utf-8"))
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    return scenario_from_dict(raw)


# -- run orchestration -------------------------------------------------------


@dataclass
class AlgorithmResult:
    """Terminal summary of one algorithm's run within a report."""

    algorithm: str
    iterations: int
    terminal_x: np.ndarray
    terminal_consensus_spread: float
    terminal_normalized_error: float
    terminal_residual: float
    distance_to_oracle: float
    value_gap: float
    trace_path: str = None

    def to_dict(self):
        return {
            "algorithm": self.algorithm,
            "iterations": self.iterations,
            "terminal_x": self.terminal_x.tolist(),
            "terminal_consensus_spread": self.terminal_consensus_spread,
            "terminal_normalized_error": self.terminal_normalized_error,
            "terminal_residual": self.terminal_residual,
            "distance_to_oracle": self.distance_to_oracle,
            "value_gap": self.value_gap,
            "trace_path": self.trace_path,
        }


@dataclass
class RunReport:
    """Everything one experiment produced: oracle, step-size report, results."""

    scenario: dict
    algorithm_selector: str
    oracle_x: np.ndarray
    oracle_f: float
    oracle_provenance: str
    step_size: diagnostics.StepSizeReport
    results: list

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "algorithm_selector": self.algorithm_selector,
            "oracle": {
                "x_star": self.oracle_x.tolist(),
                "f_star": self.oracle_f,
                "provenance": self.oracle_provenance,
            },
            "step_size": self.step_size.to_dict(),
            "results": [r.to_dict() for r in self.results],
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")
        return path


def scenario_oracle(scenario, with_dual=True):
    """Oracle solution for a scenario (dual reference included by default)."""
    problem = build_problem(scenario)
    return oracle_solution(
        problem,
        alpha=scenario.alpha if with_dual else None,
        x0=scenario.x0,
        lam0=scenario.lam0,
    )


def scenario_context(scenario, problem=None, oracle=None):
    """Certificate context for a scenario built around its oracle saddle point."""
    problem = problem or build_problem(scenario)
    oracle = oracle or oracle_solution(problem, alpha=scenario.alpha, x0=scenario.x0, lam0=scenario.lam0)
    return diagnostics.build_certificate_context(
        problem,
        scenario.alpha,
        oracle.x_star,
        oracle.lam_star,
        x0=scenario.x0,
        lam0=scenario.lam0,
    )


def run_algorithm(problem, scenario, algorithm):
    """Run one algorithm selector on a built problem."""
    if algorithm == "pd":
        return pd_run(
            problem,
            scenario.alpha,
            x0=scenario.x0,
            lam0=scenario.lam0,
            max_iters=scenario.max_iters,
            stop_tol=scenario.stop_tol,
        )
    if algorithm in _DGD_SCHEDULE:
        return dgd_run(
            problem,
            scenario.alpha,
            schedule=_DGD_SCHEDULE[algorithm],
            x0=scenario.x0,
            max_iters=scenario.max_iters,
            stop_tol=scenario.stop_tol,
        )
    raise ScenarioError(f"algorithm: unknown selector {algorithm!r}; expected one of {ALGORITHMS + ('all',)}")


def run_scenario(scenario, algorithm="pd", out_dir=None):
    """Execute a scenario and assemble its report.

    Runs the selected algorithm (or all of them for ``"all"``) from the
    scenario's shared initial state, evaluates terminal diagnostics against
    the centralized oracle, and optionally writes one CSV trace per
    algorithm plus a JSON report into ``out_dir``.  Deterministic: repeated
    calls produce byte-identical trace files.
    """
    selected = list(ALGORITHMS) if algorithm == "all" else [algorithm]
    for algo in selected:
        if algo not in ALGORITHMS:
            raise ScenarioError(f"algorithm: unknown selector {algo!r}; expected one of {ALGORITHMS + ('all',)}")

    problem = build_problem(scenario)
    oracle = oracle_solution(problem, alpha=scenario.alpha, x0=scenario.x0, lam0=scenario.lam0)
    ctx = diagnostics.build_certificate_context(
        problem, scenario.alpha, oracle.x_star, oracle.lam_star, x0=scenario.x0, lam0=scenario.lam0
    )
    report = diagnostics.step_size_report(ctx)

    results = []
    for algo in selected:
        trace = run_algorithm(problem, scenario, algo)
        K = trace.iterations
        terminal = trace.X[-1]
        mean_terminal = terminal.mean(axis=0)
        spread = float(diagnostics.consensus_spread_series(trace)[-1])
        try:
            err = float(diagnostics.normalized_error_series(trace, ctx)[-1])
        except ValueError:
            err = float("nan")
        trace_path = None
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            trace_path = os.path.join(out_dir, f"{scenario.name}_{algo}.csv")
            diagnostics.write_trace_csv(trace_path, trace, ctx)
        results.append(
            AlgorithmResult(
                algorithm=algo,
                iterations=K,
                terminal_x=terminal,
                terminal_consensus_spread=spread,
                terminal_normalized_error=err,
                terminal_residual=float(trace.residual_norms[-1]) if K > 0 else float("nan"),
                distance_to_oracle=float(np.linalg.norm(mean_terminal - oracle.x_star)),
                value_gap=float(problem.objective.value_at_common_point(mean_terminal) - oracle.f_star),
                trace_path=trace_path,
            )
        )

    run_report = RunReport(
        scenario=scenario.to_dict(),
        algorithm_selector=algorithm,
        oracle_x=oracle.x_star,
        oracle_f=oracle.f_star,
        oracle_provenance=oracle.provenance,
        step_size=report,
        results=results,
    )
    if out_dir is not None:
        run_report.save(os.path.join(out_dir, f"{scenario.name}_report.json"))
    return run_report


__all__ = [
    "ALGORITHMS",
    "AlgorithmResult",
    "RunReport",
    "Scenario",
    "ScenarioError",
    "build_problem",
    "bundled_scenario",
    "bundled_scenario_path",
    "load_scenario",
    "random_graph_spec",
    "run_algorithm",
    "run_scenario",
    "save_scenario",
    "scenario_context",
    "scenario_from_dict",
    "scenario_oracle",
]
