"""Command-line entry points: run experiments, validate step sizes, query the oracle.

Exit codes: 0 success, 2 usage errors (from argparse), 3 scenario or
validation errors, 4 numerical failures (oracle non-convergence, non-finite
iterates), 1 anything else.
"""

import argparse
import sys

from .oracle import OracleError
from .scenarios import (
    ALGORITHMS,
    ScenarioError,
    load_scenario,
    run_scenario,
    scenario_context,
    scenario_oracle,
)
from .diagnostics import step_size_report
from .solver import NonFiniteIterateError


def _build_parser():
    parser = argparse.ArgumentParser(prog="pdopt", description="Distributed primal-dual experiment harness.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write trace CSVs plus a JSON report")
    run.add_argument("--scenario", required=True, help="path to a scenario JSON file")
    run.add_argument("--algorithm", default="pd", choices=ALGORITHMS + ("all",))
    run.add_argument("--out", required=True, help="output directory for traces and the report")
    run.add_argument("--max-iters", type=int, default=None, help="override the scenario's iteration budget")
    run.add_argument("--alpha", type=float, default=None, help="override the scenario's step size")
    run.add_argument("--seed", type=int, default=None, help="override the scenario's seed")

    validate = sub.add_parser("validate", help="print the step-size admissibility report for a scenario")
    validate.add_argument("--scenario", required=True)

    oracle = sub.add_parser("oracle", help="print the centralized reference solution for a scenario")
    oracle.add_argument("--scenario", required=True)
    return parser


def _load(args):
    overrides = {
        "max_iters": getattr(args, "max_iters", None),
        "alpha": getattr(args, "alpha", None),
        "seed": getattr(args, "seed", None),
    }
    try:
        return load_scenario(args.scenario, overrides=overrides)
    except FileNotFoundError as exc:
        raise ScenarioError(f"scenario: file not found: {exc.filename}") from exc


def _cmd_run(args):
    scenario = _load(args)
    report = run_scenario(scenario, algorithm=args.algorithm, out_dir=args.out)
    print(f"scenario {scenario.name}: oracle x* = {report.oracle_x.tolist()} (f* = {report.oracle_f:.12g})")
    print(f"step size alpha = {report.step_size.alpha:g}, admissible = {report.step_size.admissible}")
    for result in report.results:
        print(
            f"  {result.algorithm}: {result.iterations} iterations, "
            f"spread = {result.terminal_consensus_spread:.3e}, "
            f"|x - x*| = {result.distance_to_oracle:.3e}, "
            f"trace = {result.trace_path}"
        )
    return 0


def _cmd_validate(args):
    scenario = _load(args)
    ctx = scenario_context(scenario)
    report = step_size_report(ctx)
    print(f"scenario {scenario.name}: step-size report")
    for key, value in report.to_dict().items():
        print(f"  {key} = {value}")
    return 0


def _cmd_oracle(args):
    scenario = _load(args)
    solution = scenario_oracle(scenario, with_dual=False)
    print(f"scenario {scenario.name}: x* = {solution.x_star.tolist()}")
    print(f"  f* = {solution.f_star:.17g}")
    print(f"  provenance = {solution.provenance}")
    return 0


_COMMANDS = {"run": _cmd_run, "validate": _cmd_validate, "oracle": _cmd_oracle}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"error[scenario]: {exc}", file=sys.stderr)
        return 3
    except (OracleError, NonFiniteIterateError) as exc:
        print(f"error[numerical]: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error[invalid]: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
