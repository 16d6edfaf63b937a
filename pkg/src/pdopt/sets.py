"""Projectable closed convex sets and normal-cone membership tests.

Every set family here admits a closed-form Euclidean projection, so the
projection is exact (single-valued) up to floating point.  All operations
accept a single point of shape ``(dim,)`` or a batch ``(..., dim)``.
"""

import numpy as np

DEFAULT_MEMBERSHIP_TOL = 1e-9


def _check_dim(s, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (s.dim,):
        raise ValueError(f"point with last dimension {x.shape[-1] if x.ndim else 0} does not match set dimension {s.dim}")
    return x


class ConvexSet:
    """Base class; concrete sets implement ``project`` and ``contains``."""

    dim = None

    def project(self, x):
        """Nearest point of the set in the Euclidean norm."""
        raise NotImplementedError

    def contains(self, x, tol=DEFAULT_MEMBERSHIP_TOL):
        """Membership with additive slack ``tol`` on each defining inequality."""
        raise NotImplementedError


class WholeSpace(ConvexSet):
    """All of R^dim; projection is the identity."""

    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, x):
        return _check_dim(self, x).copy()

    def contains(self, x, tol=DEFAULT_MEMBERSHIP_TOL):
        x = _check_dim(self, x)
        return np.ones(x.shape[:-1], dtype=bool) if x.ndim > 1 else True

    def __repr__(self):
        return f"WholeSpace(dim={self.dim})"


class Ball(ConvexSet):
    """Euclidean ball ``{x : ||x - center|| <= radius}``."""

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        if self.radius <= 0:
            raise ValueError(f"ball radius must be positive, got {radius}")
        self.dim = self.center.shape[0]

    def project(self, x):
        x = _check_dim(self, x)
        d = x - self.center
        nrm = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.minimum(1.0, self.radius / np.maximum(nrm, np.finfo(float).tiny))
        return self.center + scale * d

    def contains(self, x, tol=DEFAULT_MEMBERSHIP_TOL):
        x = _check_dim(self, x)
        ok = np.linalg.norm(x - self.center, axis=-1) <= self.radius + tol
        return ok if x.ndim > 1 else bool(ok)

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class HalfSpace(ConvexSet):
    """Half space ``{x : <normal, x> <= offset}``."""

    def __init__(self, normal, offset):
        self.normal = np.asarray(normal, dtype=float)
        self.offset = float(offset)
        self._sqnorm = float(self.normal @ self.normal)
        if self._sqnorm == 0.0:
            raise ValueError("half-space normal must be nonzero")
        self.dim = self.normal.shape[0]

    def project(self, x):
        x = _check_dim(self, x)
        excess = np.maximum(x @ self.normal - self.offset, 0.0)
        return x - (excess / self._sqnorm)[..., None] * self.normal

    def contains(self, x, tol=DEFAULT_MEMBERSHIP_TOL):
        x = _check_dim(self, x)
        ok = x @ self.normal <= self.offset + tol
        return ok if x.ndim > 1 else bool(ok)

    def __repr__(self):
        return f"HalfSpace(normal={self.normal.tolist()}, offset={self.offset})"


class Box(ConvexSet):
    """Axis-aligned box ``{x : lower <= x <= upper}``; infinite bounds allowed."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape:
            raise ValueError("box bounds must have equal shapes")
        if np.any(self.lower > self.upper):
            raise ValueError("box requires lower <= upper componentwise")
        self.dim = self.lower.shape[0]

    def project(self, x):
        x = _check_dim(self, x)
        return np.clip(x, self.lower, self.upper)

    def contains(self, x, tol=DEFAULT_MEMBERSHIP_TOL):
        x = _check_dim(self, x)
        ok = np.all((x >= self.lower - tol) & (x <= self.upper + tol), axis=-1)
        return ok if x.ndim > 1 else bool(ok)

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class ProductSet:
    """Cartesian product of n sets of common dimension m.

    Points are stacked as ``(n, m)`` arrays, one row per factor; projection
    and membership act blockwise.
    """

    def __init__(self, factors):
        self.factors = tuple(factors)
        if not self.factors:
            raise ValueError("product set needs at least one factor")
        dims = {f.dim for f in self.factors}
        if len(dims) != 1:
            raise ValueError(f"product factors must share one dimension, got {sorted(dims)}")
        self.n = len(self.factors)
        self.m = self.factors[0].dim
        self._all_free = all(isinstance(f, WholeSpace) for f in self.factors)

    def _check_stack(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape != (self.n, self.m):
            raise ValueError(f"stacked point has shape {X.shape}, expected {(self.n, self.m)}")
        return X

    def project(self, X):
        """Blockwise projection of a stacked point."""
        X = self._check_stack(X)
        if self._all_free:
            return X.copy()
        return np.stack([f.project(X[i]) for i, f in enumerate(self.factors)])

    def contains(self, X, tol=DEFAULT_MEMBERSHIP_TOL):
        X = self._check_stack(X)
        return all(f.contains(X[i], tol) for i, f in enumerate(self.factors))

    def is_whole_space(self):
        """True when every factor is the whole space (unconstrained case)."""
        return self._all_free


def in_normal_cone(s, x, v, tol=None):
    """Whether ``v`` lies in the normal cone of set ``s`` at ``x``.

    Uses the projection characterization: ``v`` is normal at ``x`` exactly
    when projecting ``x + v`` lands back on ``x``.  The comparison tolerance
    defaults to ``1e-9 * (1 + ||v||)``.

    Raises
    ------
    ValueError
        If ``x`` is not in the set (checked with 1e-9 slack).
    """
    x = _check_dim(s, x)
    v = _check_dim(s, v)
    if not s.contains(x, DEFAULT_MEMBERSHIP_TOL):
        raise ValueError("normal cone is only defined at points of the set")
    if tol is None:
        tol = 1e-9 * (1.0 + float(np.linalg.norm(v)))
    return bool(np.linalg.norm(s.project(x + v) - x) <= tol)
