"""Centralized reference solutions: minimizer, optimal value, dual reference.

The distributed solver is validated against two independent centralized
routes: projected gradient descent (with the intersection projection
approximated by one cyclic pass over the agents' sets) and, for ambient
dimension at most two, an exhaustive grid search refined down to a 1e-8
pitch.  The grid is the authority whenever it runs; the two routes agreeing
is itself a correctness check exercised by the test suite.
"""

from dataclasses import dataclass

import numpy as np

from .objectives import Huber
from .sets import Ball, Box, WholeSpace
from .solver import pd_run


class OracleError(RuntimeError):
    """The centralized reference solve failed."""


class InfeasibleError(OracleError):
    """No point satisfied every constraint."""


@dataclass
class OracleSolution:
    """Centralized reference: minimizer, optimal value, replicated stack, dual.

    ``provenance`` records which route produced ``x_star``: "analytic",
    "grid", or "projected_gradient".  ``lam_star`` is None unless a dual
    reference run was requested.
    """

    x_star: np.ndarray
    f_star: float
    X_star: np.ndarray
    lam_star: np.ndarray = None
    provenance: str = ""


def _total_value(parts, x):
    return sum(p.value(x) for p in parts)


def _total_gradient(parts, x):
    return sum(p.gradient(x) for p in parts)


def _cyclic_project(sets, x):
    for s in sets:
        x = s.project(x)
    return x


def _feasible_mask(sets, points, tol=1e-12):
    mask = np.ones(points.shape[0], dtype=bool)
    for s in sets:
        mask &= s.contains(points, tol)
    return mask


def _huber_analytic(parts, sets):
    # Componentwise mean of the offsets minimizes a Huber sum whenever every
    # residual stays inside the quadratic branch.
    if not all(isinstance(p, Huber) for p in parts):
        return None
    if not all(isinstance(s, WholeSpace) for s in sets):
        return None
    offsets = np.stack([p.a for p in parts])
    mean = offsets.mean(axis=0)
    if np.max(np.abs(offsets - mean)) > 1.0:
        return None
    return mean


def _sampled_gradient_bound(parts, sets, x0, num_pairs=2000, seed=0):
    constants = [p.gradient_lipschitz() for p in parts]
    if all(c is not None for c in constants):
        return float(sum(constants))
    rng = np.random.default_rng(seed)
    m = parts[0].dim
    spread = 1.0 + float(np.linalg.norm(x0))
    xs = _cyclic_project(sets, x0 + spread * rng.standard_normal((num_pairs, m)))
    ys = _cyclic_project(sets, x0 + spread * rng.standard_normal((num_pairs, m)))
    gx = _total_gradient(parts, xs)
    gy = _total_gradient(parts, ys)
    dx = np.linalg.norm(xs - ys, axis=-1)
    dg = np.linalg.norm(gx - gy, axis=-1)
    keep = dx > 1e-300
    if not np.any(keep):
        return 1.0
    return 1.25 * float(np.max(dg[keep] / dx[keep]))


def _projected_gradient(parts, sets, x0=None, max_iters=1_000_000, tol=1e-13, seed=0):
    m = parts[0].dim
    x = np.zeros(m) if x0 is None else np.asarray(x0, dtype=float)
    x = _cyclic_project(sets, x)
    bound = max(_sampled_gradient_bound(parts, sets, x, seed=seed), 1e-8)
    step = 1.0 / bound
    fx = _total_value(parts, x)
    for _ in range(max_iters):
        x_new = _cyclic_project(sets, x - step * _total_gradient(parts, x))
        f_new = _total_value(parts, x_new)
        if not np.isfinite(f_new):
            raise OracleError("projected gradient produced a non-finite value")
        if f_new > fx + 1e-12:
            # The sampled bound underestimated the curvature ahead; back off.
            step *= 0.5
            if step < 1e-12 / bound:
                raise OracleError("projected gradient step collapsed without converging")
            continue
        done = np.linalg.norm(x_new - x) <= tol * (1.0 + np.linalg.norm(x))
        x, fx = x_new, f_new
        if done:
            return x
    raise OracleError(f"projected gradient did not converge within {max_iters} iterations")


def _initial_window(sets, center, fallback_halfwidth=10.0):
    m = sets[0].dim
    lower = np.full(m, -np.inf)
    upper = np.full(m, np.inf)
    for s in sets:
        if isinstance(s, Ball):
            lower = np.maximum(lower, s.center - s.radius)
            upper = np.minimum(upper, s.center + s.radius)
        elif isinstance(s, Box):
            lower = np.maximum(lower, s.lower)
            upper = np.minimum(upper, s.upper)
    unbounded = ~np.isfinite(lower) | ~np.isfinite(upper) | (upper - lower > 2 * fallback_halfwidth)
    lower = np.where(unbounded, center - fallback_halfwidth, lower)
    upper = np.where(unbounded, center + fallback_halfwidth, upper)
    if np.any(lower > upper):
        raise InfeasibleError("constraint bounding boxes do not intersect")
    return lower, upper


def _grid_points(lower, upper, counts):
    axes = [np.linspace(lower[d], upper[d], counts[d]) for d in range(len(lower))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _grid_search(parts, sets, center, final_pitch=1e-8, coarse_points=401):
    """Coarse grid over the feasible window, then tenfold local refinement.

    Convexity makes coarse-to-fine refinement sound: the feasible restriction
    has a unique basin, so narrowing around the incumbent best never loses
    the minimizer.
    """
    m = parts[0].dim
    if m > 3:
        raise OracleError("grid search supports dimension <= 3 only")
    lower, upper = _initial_window(sets, center)
    counts = np.full(m, coarse_points if m <= 2 else 41)
    points = _grid_points(lower, upper, counts)
    mask = _feasible_mask(sets, points)
    if not np.any(mask):
        raise InfeasibleError("no grid point satisfies every constraint; intersection may be empty")
    feasible = points[mask]
    values = _total_value(parts, feasible)
    best = feasible[int(np.argmin(values))]
    pitch = float(np.max((upper - lower) / np.maximum(counts - 1, 1)))

    while pitch > final_pitch:
        pitch /= 10.0
        offsets = pitch * np.arange(-30, 31)
        axes_counts = np.full(m, offsets.size)
        points = _grid_points(best + offsets[0], best + offsets[-1], axes_counts)
        mask = _feasible_mask(sets, points)
        feasible = points[mask]
        if feasible.shape[0] == 0:
            # The incumbent itself is feasible, so this only happens through
            # membership-tolerance roundoff; keep the incumbent.
            break
        values = _total_value(parts, feasible)
        best = feasible[int(np.argmin(values))]
    return best


def solve_centralized(objectives, sets, method="auto", pg_max_iters=1_000_000, pg_tol=1e-13, seed=0):
    """Solve ``min sum_i f_i(x)`` over the intersection of the agents' sets.

    Parameters
    ----------
    objectives : sequence of Objective
        One part per agent, evaluated at the common point.
    sets : sequence of ConvexSet
        One constraint set per agent.
    method : {"auto", "projected_gradient", "grid"}
        "auto" tries the analytic Huber shortcut, falls back to projected
        gradient, and refines through the grid when the dimension allows it.

    Returns
    -------
    OracleSolution
        With ``lam_star`` unset; see :func:`dual_reference`.

    Raises
    ------
    InfeasibleError
        When the grid finds no feasible point.
    OracleError
        On non-convergence of the projected gradient route.
    """
    parts = list(objectives)
    sets = list(sets)
    if not parts or len(parts) != len(sets):
        raise ValueError("need matching nonempty objective and set lists")
    m = parts[0].dim
    n = len(parts)

    x_star = None
    provenance = None
    if method == "auto":
        x_star = _huber_analytic(parts, sets)
        if x_star is not None:
            provenance = "analytic"
    if x_star is None and method in ("auto", "projected_gradient"):
        x_star = _projected_gradient(parts, sets, max_iters=pg_max_iters, tol=pg_tol, seed=seed)
        provenance = "projected_gradient"
        if method == "auto" and m <= 2:
            x_star = _grid_search(parts, sets, center=x_star)
            provenance = "grid"
    if x_star is None and method == "grid":
        start = _cyclic_project(sets, np.zeros(m))
        x_star = _grid_search(parts, sets, center=start)
        provenance = "grid"
    if x_star is None:
        raise ValueError(f"unknown method {method!r}")

    return OracleSolution(
        x_star=np.asarray(x_star, dtype=float),
        f_star=float(_total_value(parts, np.asarray(x_star, dtype=float))),
        X_star=np.tile(np.asarray(x_star, dtype=float), (n, 1)),
        provenance=provenance,
    )


def dual_reference(problem, alpha, x0=None, lam0=None, max_iters=200_000, stop_tol=1e-13, max_halvings=20):
    """Terminal dual iterate of a long, tightly converged primal-dual run.

    Dual solutions are not unique; any converged dual works as the reference
    inside the Lyapunov metric provided the certificate context is built
    around the same choice.  The saddle-point set does not depend on the
    step size, so if the run blows up at the requested step the reference
    retries at successively halved steps.
    """
    from .solver import NonFiniteIterateError

    step = alpha
    for _ in range(max_halvings + 1):
        try:
            trace = pd_run(problem, step, x0=x0, lam0=lam0, max_iters=max_iters, stop_tol=stop_tol)
        except NonFiniteIterateError:
            step *= 0.5
            continue
        return trace.lam[trace.iterations]
    raise OracleError(f"dual reference run failed for every step size down to {step}")


def oracle_solution(problem, alpha=None, x0=None, lam0=None, method="auto", seed=0):
    """Full oracle for a problem: centralized minimizer plus dual reference.

    The dual reference is computed only when ``alpha`` is given (it requires
    running the distributed iteration).
    """
    sol = solve_centralized(problem.objective.parts, problem.sets.factors, method=method, seed=seed)
    if alpha is not None:
        sol.lam_star = dual_reference(problem, alpha, x0=x0, lam0=lam0)
    return sol
