"""Smooth convex agent objectives with analytic values and gradients."""

import numpy as np


def _check_point(dim, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (dim,):
        raise ValueError(f"point with last dimension {x.shape[-1] if x.ndim else 0} does not match objective dimension {dim}")
    return x


class Objective:
    """Base class for a smooth convex function on R^dim.

    ``value`` maps ``(..., dim)`` to ``(...)`` and ``gradient`` maps
    ``(..., dim)`` to ``(..., dim)``.  ``gradient_lipschitz`` returns the
    global Lipschitz constant of the gradient, or None when the gradient is
    only locally Lipschitz.
    """

    dim = None

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def gradient_lipschitz(self):
        return None


class Quadratic(Objective):
    """``f(x) = x'Qx / 2 + b'x + c`` with symmetric positive semidefinite Q."""

    def __init__(self, Q, b, c=0.0):
        self.Q = np.asarray(Q, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = float(c)
        _validate_quadratic_part(self.Q, self.b)
        self.dim = self.b.shape[0]
        self._spectral_norm = float(np.max(np.abs(np.linalg.eigvalsh(self.Q))))

    def value(self, x):
        x = _check_point(self.dim, x)
        return 0.5 * np.sum(x * (x @ self.Q), axis=-1) + x @ self.b + self.c

    def gradient(self, x):
        x = _check_point(self.dim, x)
        return x @ self.Q + self.b

    def gradient_lipschitz(self):
        return self._spectral_norm


class QuadraticExp(Objective):
    """Quadratic plus nonnegative combinations of exponentials of affine terms.

    ``f(x) = x'Qx / 2 + b'x + c + sum_j coef_j * exp(<w_j, x>)``

    Convex for positive semidefinite Q and nonnegative coefficients; the
    gradient is locally but not globally Lipschitz.  Exponential overflow is
    not clamped: it propagates as ``inf`` for callers to detect, since a
    well-configured run keeps iterates bounded.
    """

    def __init__(self, Q, b, exp_terms=(), c=0.0):
        self.Q = np.asarray(Q, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = float(c)
        _validate_quadratic_part(self.Q, self.b)
        self.dim = self.b.shape[0]
        self.exp_coefs = np.array([float(coef) for coef, _ in exp_terms])
        self.exp_weights = (
            np.array([np.asarray(w, dtype=float) for _, w in exp_terms])
            if exp_terms
            else np.zeros((0, self.dim))
        )
        if np.any(self.exp_coefs < 0):
            raise ValueError("exponential coefficients must be nonnegative for convexity")
        if self.exp_weights.shape[1:] != (self.dim,):
            raise ValueError("exponential weight vectors must match the objective dimension")

    def value(self, x):
        x = _check_point(self.dim, x)
        out = 0.5 * np.sum(x * (x @ self.Q), axis=-1) + x @ self.b + self.c
        if self.exp_coefs.size:
            with np.errstate(over="ignore"):
                out = out + np.exp(x @ self.exp_weights.T) @ self.exp_coefs
        return out

    def gradient(self, x):
        x = _check_point(self.dim, x)
        g = x @ self.Q + self.b
        if self.exp_coefs.size:
            # inf * 0 products appear once an iterate has overflowed; the
            # resulting nan still reads as non-finite downstream.
            with np.errstate(over="ignore", invalid="ignore"):
                weights = self.exp_coefs * np.exp(x @ self.exp_weights.T)
                g = g + weights @ self.exp_weights
        return g


class Huber(Objective):
    """Componentwise Huber loss around an offset vector.

    Each component contributes ``(x - a)^2 / 2`` inside the unit branch
    ``|x - a| <= 1`` and ``|x - a| - 1/2`` outside; value and derivative are
    continuous at the branch boundary.  The gradient is globally 1-Lipschitz.
    """

    def __init__(self, a):
        self.a = np.atleast_1d(np.asarray(a, dtype=float))
        self.dim = self.a.shape[0]

    def value(self, x):
        x = _check_point(self.dim, x)
        r = x - self.a
        abs_r = np.abs(r)
        per = np.where(abs_r <= 1.0, 0.5 * r * r, abs_r - 0.5)
        return np.sum(per, axis=-1)

    def gradient(self, x):
        x = _check_point(self.dim, x)
        return np.clip(x - self.a, -1.0, 1.0)

    def gradient_lipschitz(self):
        return 1.0


def _validate_quadratic_part(Q, b):
    if b.ndim != 1:
        raise ValueError("linear coefficient must be a vector")
    if Q.shape != (b.shape[0], b.shape[0]):
        raise ValueError(f"quadratic matrix has shape {Q.shape}, expected {(b.shape[0], b.shape[0])}")
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise ValueError("quadratic matrix must be symmetric")
    if np.min(np.linalg.eigvalsh(0.5 * (Q + Q.T))) < -1e-12:
        raise ValueError("quadratic matrix must be positive semidefinite")


class StackedObjective:
    """Block-separable objective ``F(X) = sum_i f_i(x_i)`` over stacked points.

    ``X`` is an ``(n, m)`` array with one agent block per row; value and
    gradient decompose blockwise.  An all-Huber stack takes a vectorized
    path since it is the common large-n configuration.
    """

    def __init__(self, parts):
        self.parts = tuple(parts)
        if not self.parts:
            raise ValueError("stacked objective needs at least one part")
        dims = {p.dim for p in self.parts}
        if len(dims) != 1:
            raise ValueError(f"stacked parts must share one dimension, got {sorted(dims)}")
        self.n = len(self.parts)
        self.m = self.parts[0].dim
        self._huber_offsets = (
            np.stack([p.a for p in self.parts])
            if all(isinstance(p, Huber) for p in self.parts)
            else None
        )

    def _check_stack(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape != (self.n, self.m):
            raise ValueError(f"stacked point has shape {X.shape}, expected {(self.n, self.m)}")
        return X

    def value(self, X):
        X = self._check_stack(X)
        if self._huber_offsets is not None:
            r = X - self._huber_offsets
            abs_r = np.abs(r)
            return float(np.sum(np.where(abs_r <= 1.0, 0.5 * r * r, abs_r - 0.5)))
        return float(sum(p.value(X[i]) for i, p in enumerate(self.parts)))

    def gradient(self, X):
        X = self._check_stack(X)
        if self._huber_offsets is not None:
            return np.clip(X - self._huber_offsets, -1.0, 1.0)
        return np.stack([p.gradient(X[i]) for i, p in enumerate(self.parts)])

    def value_at_common_point(self, x):
        """``sum_i f_i(x)`` for a single (possibly batched) point ``x``."""
        return sum(p.value(x) for p in self.parts)

    def gradient_at_common_point(self, x):
        """``sum_i grad f_i(x)`` for a single (possibly batched) point ``x``."""
        return sum(p.gradient(x) for p in self.parts)

    def gradient_lipschitz(self):
        """Global Lipschitz constant of the stacked gradient, or None.

        The stacked gradient is block diagonal, so the constant is the
        maximum over parts when every part has a global constant.
        """
        constants = [p.gradient_lipschitz() for p in self.parts]
        if any(c is None for c in constants):
            return None
        return float(max(constants))


def local_gradient_lipschitz(stacked, center, radius, product_set, num_pairs=10_000, seed=0, inflation=1.25):
    """Upper estimate of the gradient's Lipschitz modulus near a point.

    The modulus is taken over the intersection of the product set with the
    ball of the given radius around ``center``.  Exact closed forms are used
    when every part carries a global constant (Huber stacks give exactly 1,
    quadratic stacks the largest block spectral norm); otherwise the modulus
    is estimated from difference quotients over sampled point pairs and
    inflated by a safety factor, since only an upper bound keeps the
    step-size test conservative.

    Parameters
    ----------
    stacked : StackedObjective
    center : ndarray
        Ball center, shape ``(n, m)``; typically a solution estimate.
    radius : float
        Ball radius; must be positive.
    product_set : ProductSet
        Feasible product set intersected with the ball.
    num_pairs : int, optional
        Sampled point pairs (half nearby pairs, half far pairs).
    seed : int, optional
        Sampling seed; the estimate is deterministic per seed.
    inflation : float, optional
        Multiplier applied to the sampled supremum.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    exact = stacked.gradient_lipschitz()
    if exact is not None:
        return exact

    center = np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    n, m = stacked.n, stacked.m
    dim = n * m

    def project_batch(points):
        # Projection onto the product set cannot move a point further from
        # the (feasible) center, so samples stay inside the ball.
        out = np.empty_like(points)
        for i, factor in enumerate(product_set.factors):
            out[:, i, :] = factor.project(points[:, i, :])
        return out

    def gradient_batch(points):
        out = np.empty_like(points)
        for i, part in enumerate(stacked.parts):
            out[:, i, :] = part.gradient(points[:, i, :])
        return out

    def sample_feasible(num):
        direction = rng.standard_normal((num, dim))
        direction /= np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), np.finfo(float).tiny)
        radii = radius * rng.random(num) ** (1.0 / dim)
        return project_batch(center[None] + (radii[:, None] * direction).reshape(num, n, m))

    half = num_pairs // 2
    xs = sample_feasible(num_pairs)
    ys = np.empty_like(xs)
    ys[:half] = sample_feasible(half)
    ys[half:] = project_batch(xs[half:] + 1e-5 * radius * rng.standard_normal((num_pairs - half, n, m)))

    dx = np.sqrt(np.sum((xs - ys) ** 2, axis=(1, 2)))
    dg = np.sqrt(np.sum((gradient_batch(xs) - gradient_batch(ys)) ** 2, axis=(1, 2)))
    keep = dx > 1e-300
    if not np.any(keep):
        return inflation
    return inflation * float(np.max(dg[keep] / dx[keep]))
