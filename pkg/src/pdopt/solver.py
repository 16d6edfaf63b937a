"""Projected primal-dual iteration and distributed gradient descent baselines."""

from dataclasses import dataclass

import numpy as np

from .sets import Box, ProductSet, WholeSpace


class NonFiniteIterateError(RuntimeError):
    """An iterate became non-finite (typically exponential overflow)."""

    def __init__(self, iteration, what="iterate"):
        self.iteration = iteration
        super().__init__(f"non-finite {what} at iteration {iteration}; check the step size and scenario scaling")


@dataclass(frozen=True)
class Problem:
    """A distributed problem instance: graph, stacked objective, constraint product.

    Agent i holds objective part i and constraint factor i; all blocks share
    the ambient dimension m.  Instances are immutable and safe to share.
    """

    graph: object
    objective: object
    sets: ProductSet

    def __post_init__(self):
        if not (self.graph.n == self.objective.n == self.sets.n):
            raise ValueError(
                f"agent counts disagree: graph {self.graph.n}, objectives {self.objective.n}, sets {self.sets.n}"
            )
        if self.objective.m != self.sets.m:
            raise ValueError(f"block dimensions disagree: objectives {self.objective.m}, sets {self.sets.m}")

    @property
    def n(self):
        return self.graph.n

    @property
    def m(self):
        return self.objective.m

    def zeros(self):
        return np.zeros((self.n, self.m))


@dataclass(frozen=True)
class PdState:
    """Stacked primal/dual iterate at step k.

    ``lam`` always equals ``lam0 + lam_increment`` with
    ``lam_increment = alpha * L @ primal_sum`` and ``primal_sum`` the sum of
    all primal iterates before step k.  Keeping the increment in closed form
    (rather than accumulating the dual recursion step by step) makes the
    dual telescoping identity hold to a few ulps at every k.
    """

    X: np.ndarray
    lam: np.ndarray
    k: int
    lam0: np.ndarray
    primal_sum: np.ndarray
    lam_increment: np.ndarray


def initial_pd_state(problem, x0=None, lam0=None):
    """Starting state; defaults to the all-zeros primal/dual pair.

    The initial primal iterate need not be feasible (the customary all-zeros
    start is not, for sets that exclude the origin); the projection inside
    the first step restores feasibility, which then holds at every k >= 1.
    """
    X = problem.zeros() if x0 is None else np.array(x0, dtype=float)
    lam = problem.zeros() if lam0 is None else np.array(lam0, dtype=float)
    if X.shape != (problem.n, problem.m) or lam.shape != (problem.n, problem.m):
        raise ValueError(f"initial iterates must have shape {(problem.n, problem.m)}")
    zero = np.zeros_like(X)
    return PdState(X=X, lam=lam, k=0, lam0=lam, primal_sum=zero, lam_increment=zero.copy())


def pd_step(state, problem, alpha):
    """One synchronous primal-dual step.

    Both updates read the step-k pair (Jacobi order): the primal block
    projects ``X - alpha * grad - alpha * L (lam + X)`` onto the constraint
    product, and the dual block advances by ``alpha * L X``.

    Raises
    ------
    NonFiniteIterateError
        If the new primal or dual iterate contains a non-finite entry.
    """
    lap = problem.graph.laplacian
    grad = problem.objective.gradient(state.X)
    X_new = problem.sets.project(state.X - alpha * grad - alpha * (lap @ (state.lam + state.X)))
    if not np.all(np.isfinite(X_new)):
        raise NonFiniteIterateError(state.k + 1, "primal iterate")
    primal_sum = state.primal_sum + state.X
    lam_increment = alpha * (lap @ primal_sum)
    lam_new = state.lam0 + lam_increment
    if not np.all(np.isfinite(lam_new)):
        raise NonFiniteIterateError(state.k + 1, "dual iterate")
    return PdState(
        X=X_new,
        lam=lam_new,
        k=state.k + 1,
        lam0=state.lam0,
        primal_sum=primal_sum,
        lam_increment=lam_increment,
    )


def residual_vector(x_k, x_next, graph):
    """Optimality residual at step k: stacked step difference and disagreement.

    Concatenates ``X_{k+1} - X_k`` with ``L X_k`` (both flattened); its
    2-norm is the stopping witness.
    """
    x_k = np.asarray(x_k, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    if x_k.shape != x_next.shape:
        raise ValueError("residual needs two iterates of equal shape")
    return np.concatenate([(x_next - x_k).ravel(), (graph.laplacian @ x_k).ravel()])


@dataclass
class RunTrace:
    """Per-iteration record of a run with K completed steps.

    ``X[k]`` is the primal iterate for ``k = 0..K`` and ``primal_cumsum[k]``
    the inclusive running sum used by time averages.  Primal-dual traces
    additionally carry duals ``lam[k]`` for ``k = 0..K+1`` (one step past the
    primal so that every recorded Lyapunov value ``V(X_k, lam_{k+1})`` and
    one-step-ahead rate bound is computable) along with the exact dual
    increments ``lam[k] - lam[0]``.  Gradient-descent traces leave the dual
    fields as None.
    """

    algorithm: str
    alpha: float
    X: np.ndarray
    primal_cumsum: np.ndarray
    residual_norms: np.ndarray
    lam: np.ndarray = None
    lam_increments: np.ndarray = None
    schedule: str = None

    @property
    def iterations(self):
        """Number of completed steps K."""
        return self.X.shape[0] - 1

    @property
    def n(self):
        return self.X.shape[1]

    @property
    def m(self):
        return self.X.shape[2]


def pd_run(problem, alpha, x0=None, lam0=None, max_iters=10_000, stop_tol=1e-10):
    """Run the projected primal-dual iteration until the residual is small.

    Stops after ``max_iters`` steps or once the residual 2-norm drops below
    ``stop_tol``.  The run is deterministic: identical inputs produce
    bitwise-identical traces.

    Parameters
    ----------
    problem : Problem
    alpha : float
        Constant step size; must be positive.
    x0, lam0 : ndarray, optional
        Initial stacked iterates of shape (n, m); default zeros.
    max_iters : int, optional
    stop_tol : float, optional
        Residual threshold; pass 0 to always run the full budget.

    Returns
    -------
    RunTrace
    """
    if alpha <= 0:
        raise ValueError(f"step size must be positive, got {alpha}")
    if max_iters < 0:
        raise ValueError("max_iters must be nonnegative")
    state = initial_pd_state(problem, x0, lam0)
    lap = problem.graph.laplacian
    xs = [state.X]
    sums = []
    lams = [state.lam]
    incs = [state.lam_increment]
    r_norms = []
    while state.k < max_iters:
        new = pd_step(state, problem, alpha)
        r_norms.append(float(np.linalg.norm(residual_vector(state.X, new.X, problem.graph))))
        xs.append(new.X)
        sums.append(new.primal_sum)
        lams.append(new.lam)
        incs.append(new.lam_increment)
        state = new
        if r_norms[-1] < stop_tol:
            break
    # One extra dual step past the final primal iterate.
    final_sum = state.primal_sum + state.X
    sums.append(final_sum)
    final_inc = alpha * (lap @ final_sum)
    lams.append(state.lam0 + final_inc)
    incs.append(final_inc)
    return RunTrace(
        algorithm="pd",
        alpha=alpha,
        X=np.stack(xs),
        primal_cumsum=np.stack(sums),
        residual_norms=np.asarray(r_norms),
        lam=np.stack(lams),
        lam_increments=np.stack(incs),
    )


DGD_SCHEDULES = ("constant", "p075", "p04")


def dgd_step_size(alpha, step_index, schedule):
    """Step size for the distributed gradient baseline at 1-based step t."""
    if schedule == "constant":
        return alpha
    if schedule == "p075":
        return alpha / step_index**0.75
    if schedule == "p04":
        return alpha / step_index**0.4
    raise ValueError(f"unknown schedule {schedule!r}; expected one of {DGD_SCHEDULES}")


def dgd_step(X, problem, step, mixing=None, iteration=None):
    """One distributed-gradient step: mix neighbor values, descend locally.

    ``x_i <- sum_j w_ij x_j - step * grad f_i(x_i)`` with the mixing matrix
    ``W = I - L``.

    Raises
    ------
    ValueError
        If the mixing matrix has negative entries (non-Metropolis-type
        weights make I - L leave the simplex).
    """
    if mixing is None:
        mixing = _dgd_mixing(problem)
    X_new = mixing @ X - step * problem.objective.gradient(X)
    if not np.all(np.isfinite(X_new)):
        raise NonFiniteIterateError(iteration, "gradient-descent iterate")
    return X_new


def _dgd_mixing(problem):
    mixing = np.eye(problem.n) - problem.graph.laplacian
    if np.any(mixing < 0):
        raise ValueError("mixing matrix I - L has negative entries; use metropolis weights for the baseline")
    return mixing


def dgd_run(problem, alpha, schedule="constant", x0=None, max_iters=10_000, stop_tol=1e-10):
    """Run the distributed gradient descent baseline.

    Applies to unconstrained (whole-space) or box scenarios only; the update
    itself never projects.  Step schedules: constant ``alpha``, or
    diminishing ``alpha / t^0.75`` / ``alpha / t^0.4`` with t counted from 1.

    Returns
    -------
    RunTrace
        With dual fields set to None.
    """
    if alpha <= 0:
        raise ValueError(f"step size must be positive, got {alpha}")
    for f in problem.sets.factors:
        if not isinstance(f, (WholeSpace, Box)):
            raise ValueError("the gradient baseline supports whole-space or box constraints only")
    mixing = _dgd_mixing(problem)
    X = problem.zeros() if x0 is None else np.array(x0, dtype=float)
    if X.shape != (problem.n, problem.m):
        raise ValueError(f"initial iterate must have shape {(problem.n, problem.m)}")
    xs = [X]
    sums = [X.copy()]
    r_norms = []
    for k in range(max_iters):
        step = dgd_step_size(alpha, k + 1, schedule)
        X_new = dgd_step(X, problem, step, mixing, iteration=k + 1)
        r_norms.append(float(np.linalg.norm(residual_vector(X, X_new, problem.graph))))
        xs.append(X_new)
        sums.append(sums[-1] + X_new)
        X = X_new
        if r_norms[-1] < stop_tol:
            break
    return RunTrace(
        algorithm="dgd",
        alpha=alpha,
        X=np.stack(xs),
        primal_cumsum=np.stack(sums),
        residual_norms=np.asarray(r_norms),
        schedule=schedule,
    )
