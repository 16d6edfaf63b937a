"""Convergence certificates: Lyapunov metric, iterate radius, rate identities.

All certificate quantities are evaluated against a saddle point (a consensus
minimizer paired with a converged dual reference).  The primal metric is the
matrix ``W = (I - alpha L + alpha^2 L^2) (x) I_m``; because ``W`` acts
blockwise through its n-by-n base matrix, stacked (n, m) iterates never need
explicit Kronecker products.
"""

from dataclasses import dataclass

import numpy as np

from .objectives import local_gradient_lipschitz
from .sets import in_normal_cone
from .solver import residual_vector

#: Exact CSV trace schema, in column order.
TRACE_COLUMNS = ("k", "V", "d", "r_norm", "consensus_spread", "e", "f_avg", "eq13_err", "eq14_ub", "eq15_lb")


@dataclass(frozen=True)
class CertificateContext:
    """Frozen data needed to evaluate every certificate on a trace.

    ``w_base`` is the n-by-n matrix whose Kronecker lift is the Lyapunov
    metric W; ``lambda_min_m`` is the smallest eigenvalue of
    ``diag(I, W)``, i.e. ``min(1, lambda_min(W))``.  ``radius`` is the ball
    around the saddle point that admissible runs provably never leave, and
    ``lipschitz`` the gradient modulus on the feasible part of that ball.
    ``c_rate`` is the constant weighting the Lyapunov decrement inside the
    averaged-value upper bound.
    """

    problem: object
    alpha: float
    x_star: np.ndarray
    X_star: np.ndarray
    lam_star: np.ndarray
    f_star: float
    w_base: np.ndarray
    lambda_min_w: float
    lambda_min_m: float
    v_initial: float
    radius: float
    lipschitz: float
    lambda_min_w_shifted: float
    c_rate: float
    X0: np.ndarray
    lam0: np.ndarray


def _w_base(graph, alpha):
    lap = graph.laplacian
    return np.eye(graph.n) - alpha * lap + alpha**2 * (lap @ lap)


def _quadratic_form(base, D):
    return float(np.sum(D * (base @ D)))


def build_certificate_context(problem, alpha, x_star, lam_star, x0=None, lam0=None, lipschitz=None, lipschitz_seed=0):
    """Assemble the certificate context for one problem/step-size/saddle triple.

    Parameters
    ----------
    problem : Problem
    alpha : float
        Constant step size the run uses.
    x_star : ndarray
        Consensus minimizer, shape (m,); replicated across agents internally.
    lam_star : ndarray
        Dual reference, shape (n, m); typically the terminal dual of a long
        converged run.
    x0, lam0 : ndarray, optional
        Initial iterates of the run under study (default zeros); they fix
        the initial Lyapunov value and hence the radius.
    lipschitz : float, optional
        Override for the local gradient modulus; estimated when omitted.
    """
    if alpha <= 0:
        raise ValueError(f"step size must be positive, got {alpha}")
    n, m = problem.n, problem.m
    x_star = np.asarray(x_star, dtype=float).reshape(m)
    X_star = np.tile(x_star, (n, 1))
    lam_star = np.asarray(lam_star, dtype=float).reshape(n, m)
    X0 = problem.zeros() if x0 is None else np.asarray(x0, dtype=float).reshape(n, m)
    lam0 = problem.zeros() if lam0 is None else np.asarray(lam0, dtype=float).reshape(n, m)

    base = _w_base(problem.graph, alpha)
    kappa = problem.graph.eigenvalues
    w_eigs = 1.0 - alpha * kappa + alpha**2 * kappa**2
    lambda_min_w = float(np.min(w_eigs))
    lambda_min_m = min(1.0, lambda_min_w)

    lam1 = lam0 + alpha * (problem.graph.laplacian @ X0)
    v_initial = _quadratic_form(base, X0 - X_star) + float(np.sum((lam1 - lam_star) ** 2))
    radius = float(np.sqrt(max(v_initial, 0.0) / lambda_min_m))
    if lipschitz is None:
        lipschitz = local_gradient_lipschitz(
            problem.objective, X_star, max(radius, 1e-9), problem.sets, seed=lipschitz_seed
        )
    shifted = lambda_min_w - 0.5 * alpha * lipschitz
    c_rate = 1.0 / shifted + 1.0 if shifted != 0.0 else np.inf
    return CertificateContext(
        problem=problem,
        alpha=float(alpha),
        x_star=x_star,
        X_star=X_star,
        lam_star=lam_star,
        f_star=float(problem.objective.value(X_star)),
        w_base=base,
        lambda_min_w=lambda_min_w,
        lambda_min_m=lambda_min_m,
        v_initial=float(v_initial),
        radius=radius,
        lipschitz=float(lipschitz),
        lambda_min_w_shifted=float(shifted),
        c_rate=float(c_rate),
        X0=X0,
        lam0=lam0,
    )


def lyapunov(X, lam, ctx):
    """Lyapunov value: W-weighted primal distance plus dual distance squared."""
    X = np.asarray(X, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return _quadratic_form(ctx.w_base, X - ctx.X_star) + float(np.sum((lam - ctx.lam_star) ** 2))


def residual(x_k, x_next, graph):
    """Stacked optimality residual; see :func:`pdopt.solver.residual_vector`."""
    return residual_vector(x_k, x_next, graph)


def normalized_error(X, X0, x_star):
    """Distance to the replicated optimum, normalized by the initial distance.

    Raises
    ------
    ValueError
        If the initial iterate already sits at the replicated optimum
        (degenerate denominator).
    """
    X = np.asarray(X, dtype=float)
    X0 = np.asarray(X0, dtype=float)
    target = np.tile(np.asarray(x_star, dtype=float), (X.shape[0], 1))
    denom = float(np.linalg.norm(X0 - target))
    if denom == 0.0:
        raise ValueError("initial iterate coincides with the optimum; normalized error is undefined")
    return float(np.linalg.norm(X - target)) / denom


def time_averages(trace):
    """Running means of the primal iterates, one row per recorded step."""
    counts = np.arange(1, trace.X.shape[0] + 1, dtype=float)
    return trace.primal_cumsum / counts[:, None, None]


def time_average(trace, k):
    """Running mean of iterates 0..k."""
    if not 0 <= k <= trace.iterations:
        raise ValueError(f"k={k} outside recorded range 0..{trace.iterations}")
    return trace.primal_cumsum[k] / (k + 1)


def consensus_spread_series(trace):
    """Largest pairwise block disagreement ``max_ij ||x_i - x_j||`` per step."""
    diffs = trace.X[:, :, None, :] - trace.X[:, None, :, :]
    return np.sqrt(np.max(np.sum(diffs**2, axis=-1), axis=(1, 2)))


def normalized_error_series(trace, ctx):
    target = ctx.X_star
    denom = float(np.linalg.norm(trace.X[0] - target))
    if denom == 0.0:
        raise ValueError("initial iterate coincides with the optimum; normalized error is undefined")
    return np.sqrt(np.sum((trace.X - target) ** 2, axis=(1, 2))) / denom


def lyapunov_series(trace, ctx):
    """``V(X_k, lam_{k+1})`` for k = 0..K (pd traces only)."""
    _require_dual(trace)
    D = trace.X - ctx.X_star
    primal = np.sum(D * np.einsum("ij,kjm->kim", ctx.w_base, D), axis=(1, 2))
    dual = np.sum((trace.lam[1:] - ctx.lam_star) ** 2, axis=(1, 2))
    return primal + dual


def saddle_distance_series(trace, ctx):
    """``d_k = sqrt(||X_k - X*||^2 + ||lam_{k+1} - lam*||^2)`` for k = 0..K."""
    _require_dual(trace)
    primal = np.sum((trace.X - ctx.X_star) ** 2, axis=(1, 2))
    dual = np.sum((trace.lam[1:] - ctx.lam_star) ** 2, axis=(1, 2))
    return np.sqrt(primal + dual)


def average_value_series(trace, ctx):
    """Objective value at the running mean, ``F(avg X)`` for k = 0..K."""
    means = time_averages(trace)
    return np.array([ctx.problem.objective.value(means[k]) for k in range(means.shape[0])])


def telescoping_error_series(trace, ctx):
    """Relative error of the dual telescoping identity at each k.

    Compares the graph disagreement of the running mean against the dual
    increment divided by ``(k+1) alpha``; the two agree exactly in exact
    arithmetic as a one-line consequence of the dual recursion, so the
    reported error is pure floating-point noise.  The disagreement side is
    evaluated through the shared running sum (``L S_k / (k+1)`` rather than
    ``L (S_k / (k+1))``) to keep the comparison well conditioned at steps
    where both sides are exactly zero, e.g. a consensus start.
    """
    _require_dual(trace)
    lap = ctx.problem.graph.laplacian
    total = trace.X.shape[0]
    counts = np.arange(1, total + 1, dtype=float)
    lhs = (lap @ trace.primal_cumsum) / counts[:, None, None]
    rhs = trace.lam_increments[1 : total + 1] / (counts[:, None, None] * trace.alpha)
    num = np.sqrt(np.sum((lhs - rhs) ** 2, axis=(1, 2)))
    scale = np.maximum(
        np.sqrt(np.sum(lhs**2, axis=(1, 2))),
        np.sqrt(np.sum(rhs**2, axis=(1, 2))),
    )
    out = np.zeros_like(num)
    nonzero = scale > 0
    out[nonzero] = num[nonzero] / scale[nonzero]
    return out


@dataclass
class RateCertificates:
    """Per-step rate quantities for a primal-dual trace.

    ``telescoping_error[k]`` covers k = 0..K.  ``average_value``, ``gap``,
    ``scaled_gap`` and ``lower`` cover k = 0..K; ``upper`` covers
    k = 0..K-1 because it looks one Lyapunov step ahead.  ``upper`` and
    ``lower`` are None for constrained scenarios, where the averaged-value
    bounds do not apply.
    """

    telescoping_error: np.ndarray
    average_value: np.ndarray
    gap: np.ndarray
    scaled_gap: np.ndarray
    upper: np.ndarray = None
    lower: np.ndarray = None


def rate_certificates(trace, ctx, include_gap_bounds=None):
    """Evaluate the telescoping identity and the averaged-value gap bounds.

    The upper bound combines the plain squared-distance decrements with the
    ``c_rate``-weighted Lyapunov decrement, each divided by
    ``2 alpha (k+1)``; the lower bound subtracts the dual correction
    ``<lam_{k+1} - lam_0, lam*> / ((k+1) alpha)`` from the optimal value.

    Parameters
    ----------
    include_gap_bounds : bool, optional
        Default: bounds are included exactly when the scenario is
        unconstrained.  Requesting them explicitly on a constrained
        scenario raises ValueError.
    """
    _require_dual(trace)
    unconstrained = ctx.problem.sets.is_whole_space()
    if include_gap_bounds is None:
        include_gap_bounds = unconstrained
    if include_gap_bounds and not unconstrained:
        raise ValueError("averaged-value gap bounds only apply to unconstrained (whole-space) scenarios")

    telescoping = telescoping_error_series(trace, ctx)
    f_avg = average_value_series(trace, ctx)
    gap = f_avg - ctx.f_star
    counts = np.arange(1, f_avg.shape[0] + 1, dtype=float)
    scaled = np.arange(f_avg.shape[0], dtype=float) * np.abs(gap)
    upper = lower = None
    if include_gap_bounds:
        K = trace.iterations
        denom = 2.0 * ctx.alpha * counts
        lam_sq = np.sum(trace.lam**2, axis=(1, 2))
        dist_sq = np.sum((trace.X - ctx.X_star) ** 2, axis=(1, 2))
        v = lyapunov_series(trace, ctx)
        head = dist_sq[0] + lam_sq[0]
        upper = (
            ctx.f_star
            + (head - dist_sq[1 : K + 1] - lam_sq[1 : K + 1]) / denom[:K]
            + ctx.c_rate * (v[0] - v[1 : K + 1]) / denom[:K]
        )
        inner = np.sum(trace.lam_increments[1 : K + 2] * ctx.lam_star, axis=(1, 2))
        lower = ctx.f_star - inner / (ctx.alpha * counts)
    return RateCertificates(
        telescoping_error=telescoping,
        average_value=f_avg,
        gap=gap,
        scaled_gap=scaled,
        upper=upper,
        lower=lower,
    )


def terminal_normal_cone_ok(trace, ctx, tol=None):
    """Check blockwise normal-cone optimality at the trace's final iterate.

    Reconstructs the pre-projection argument of the last primal step; the
    difference between that argument and the projected iterate must lie in
    the normal cone of each agent's set at the final block.
    """
    _require_dual(trace)
    if trace.iterations < 1:
        raise ValueError("need at least one completed step")
    problem, alpha = ctx.problem, trace.alpha
    X_prev = trace.X[-2]
    lam_prev = trace.lam[trace.iterations - 1]
    lap = problem.graph.laplacian
    arg = X_prev - alpha * problem.objective.gradient(X_prev) - alpha * (lap @ (lam_prev + X_prev))
    Z = arg - trace.X[-1]
    return all(
        in_normal_cone(factor, trace.X[-1][i], Z[i], tol=tol) for i, factor in enumerate(problem.sets.factors)
    )


@dataclass
class StepSizeReport:
    """Admissibility data for a configured step size.

    ``admissible`` is True when the step passes both the spectral test
    ``alpha <= 1 / (2 kappa_max)`` and the curvature test
    ``alpha < 3 / (2 lipschitz)``.
    """

    alpha: float
    kappa_max: float
    bound_spectral: float
    lipschitz: float
    bound_lipschitz: float
    admissible: bool
    radius: float
    lambda_min_m: float
    lambda_min_w_shifted: float
    c_rate: float
    v_initial: float

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "kappa_max": self.kappa_max,
            "bound_spectral": self.bound_spectral,
            "lipschitz": self.lipschitz,
            "bound_lipschitz": self.bound_lipschitz,
            "admissible": self.admissible,
            "radius": self.radius,
            "lambda_min_m": self.lambda_min_m,
            "lambda_min_w_shifted": self.lambda_min_w_shifted,
            "c_rate": self.c_rate,
            "v_initial": self.v_initial,
        }


def step_size_report(ctx):
    """Summarize the two step-size tests for an assembled context."""
    kappa_max = ctx.problem.graph.max_eigenvalue()
    bound_spectral = np.inf if kappa_max <= 0 else 1.0 / (2.0 * kappa_max)
    bound_lipschitz = np.inf if ctx.lipschitz <= 0 else 3.0 / (2.0 * ctx.lipschitz)
    return StepSizeReport(
        alpha=ctx.alpha,
        kappa_max=kappa_max,
        bound_spectral=float(bound_spectral),
        lipschitz=ctx.lipschitz,
        bound_lipschitz=float(bound_lipschitz),
        admissible=bool(ctx.alpha <= bound_spectral and ctx.alpha < bound_lipschitz),
        radius=ctx.radius,
        lambda_min_m=ctx.lambda_min_m,
        lambda_min_w_shifted=ctx.lambda_min_w_shifted,
        c_rate=ctx.c_rate,
        v_initial=ctx.v_initial,
    )


def validate_step_size(problem, alpha, x_star, lam_star, x0=None, lam0=None, lipschitz_seed=0):
    """Build a fresh context around the given saddle point and report on alpha."""
    ctx = build_certificate_context(
        problem, alpha, x_star, lam_star, x0=x0, lam0=lam0, lipschitz_seed=lipschitz_seed
    )
    return step_size_report(ctx)


def _require_dual(trace):
    if trace.lam is None:
        raise ValueError("this diagnostic needs a primal-dual trace (dual iterates missing)")


def trace_table(trace, ctx=None):
    """Assemble the exportable per-step table for a trace.

    One row per completed step (k = 0..K-1, every column defined from
    recorded data).  Columns that do not apply are NaN: the Lyapunov,
    distance, telescoping and bound columns for dual-free traces, the bound
    columns for constrained scenarios, and the normalized error when no
    context or a degenerate initial iterate is given.
    """
    K = trace.iterations
    nan = np.full(K, np.nan)
    cols = {name: nan.copy() for name in TRACE_COLUMNS}
    cols["k"] = np.arange(K)
    cols["r_norm"] = np.asarray(trace.residual_norms, dtype=float)[:K]
    cols["consensus_spread"] = consensus_spread_series(trace)[:K]
    if ctx is not None:
        try:
            cols["e"] = normalized_error_series(trace, ctx)[:K]
        except ValueError:
            pass
        cols["f_avg"] = average_value_series(trace, ctx)[:K]
        if trace.lam is not None:
            cols["V"] = lyapunov_series(trace, ctx)[:K]
            cols["d"] = saddle_distance_series(trace, ctx)[:K]
            certs = rate_certificates(trace, ctx)
            cols["eq13_err"] = certs.telescoping_error[:K]
            if certs.upper is not None:
                cols["eq14_ub"] = certs.upper[:K]
                cols["eq15_lb"] = certs.lower[:K]
    return cols


def write_trace_csv(path, trace, ctx=None):
    """Write the per-step table as CSV with 17 significant digits."""
    cols = trace_table(trace, ctx)
    K = len(cols["k"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in range(K):
            fields = [str(int(cols["k"][row]))]
            fields += [format(float(cols[name][row]), ".17g") for name in TRACE_COLUMNS[1:]]
            fh.write(",".join(fields) + "\n")
    return path
