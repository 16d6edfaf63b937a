"""Undirected communication graphs: weighted adjacency, Laplacian, spectra."""

from dataclasses import dataclass

import numpy as np

# Eigenvalues below this threshold are treated as zero when reading the
# spectrum (connectivity test, smallest-eigenvalue checks).
SPECTRAL_TOL = 1e-10


class GraphError(ValueError):
    """Invalid graph specification."""


@dataclass(frozen=True)
class GraphSpec:
    """Declarative description of an undirected communication graph.

    Agents are numbered 1..n.  Edges are unordered pairs of agent indices;
    self loops may appear in the edge list but never contribute to the
    Laplacian.  ``weighting`` selects how the adjacency matrix is built:
    ``"unit"``, ``"metropolis"``, or an explicit symmetric nonnegative
    (n, n) matrix.
    """

    n: int
    edges: tuple = ()
    weighting: object = "metropolis"

    def canonical_edges(self):
        """Edges as a sorted tuple of sorted pairs, duplicates removed."""
        seen = set()
        for i, j in self.edges:
            seen.add((min(i, j), max(i, j)))
        return tuple(sorted(seen))


class NetworkGraph:
    """A built graph: adjacency weights, Laplacian, and its spectrum.

    Immutable after construction; safe to share across threads read-only.

    Attributes
    ----------
    n : int
        Number of agents.
    edges : tuple
        Canonical unordered edge pairs (1-indexed), self loops included.
    weights : ndarray
        Symmetric nonnegative adjacency matrix ``a_ij``.
    laplacian : ndarray
        ``L = D - A`` with ``D = diag(row sums of A)``; every row sums to 0.
    eigenvalues : ndarray
        Laplacian eigenvalues in non-decreasing order, ``0 = k_1 <= ... <= k_n``.
    """

    def __init__(self, n, edges, weights):
        self.n = int(n)
        self.edges = tuple(edges)
        self.weights = np.asarray(weights, dtype=float)
        self.weights.setflags(write=False)
        degrees = self.weights.sum(axis=1)
        lap = np.diag(degrees) - self.weights
        # Symmetrize before the eigensolve to keep roundoff from breaking
        # the symmetric-matrix assumptions.
        lap = 0.5 * (lap + lap.T)
        lap.setflags(write=False)
        self.laplacian = lap
        eig = np.linalg.eigvalsh(lap)
        eig.setflags(write=False)
        self.eigenvalues = eig

    def max_eigenvalue(self):
        """Largest Laplacian eigenvalue ``k_n``."""
        return float(self.eigenvalues[-1])

    def algebraic_connectivity(self):
        """Second-smallest Laplacian eigenvalue ``k_2`` (0 for n = 1)."""
        if self.n < 2:
            return 0.0
        return float(self.eigenvalues[1])

    def is_connected(self):
        """Whether every agent pair is joined by a path of positive-weight edges.

        Decided combinatorially (breadth-first search); agrees with the
        spectral test ``k_2 > 0`` for connected graphs.
        """
        return _bfs_connected(self.n, self.weights > 0.0)

    def neighbor_lists(self):
        """Per-agent neighbor index lists (0-based, self excluded)."""
        out = []
        for i in range(self.n):
            out.append([j for j in range(self.n) if j != i and self.weights[i, j] > 0.0])
        return out


def _bfs_connected(n, adjacency_mask):
    if n <= 1:
        return True
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.nonzero(adjacency_mask[i])[0]:
            if j != i and not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


def _check_edges(n, edges):
    for e in edges:
        if len(e) != 2:
            raise GraphError(f"edge {e!r} is not a pair")
        i, j = e
        if not (1 <= i <= n and 1 <= j <= n):
            raise GraphError(f"edge ({i}, {j}) references an unknown agent (n = {n})")


def metropolis_weights(n, edges):
    """Metropolis weight matrix for the given edge list.

    ``a_ij = 1 / (1 + max(d_i, d_j))`` for distinct connected agents, where
    ``d_i`` is the degree of agent i excluding self loops; zero elsewhere
    (including the diagonal).
    """
    _check_edges(n, edges)
    pairs = {(min(i, j), max(i, j)) for i, j in edges if i != j}
    degree = np.zeros(n, dtype=int)
    for i, j in pairs:
        degree[i - 1] += 1
        degree[j - 1] += 1
    a = np.zeros((n, n))
    for i, j in pairs:
        w = 1.0 / (1.0 + max(degree[i - 1], degree[j - 1]))
        a[i - 1, j - 1] = a[j - 1, i - 1] = w
    return a


def unit_weights(n, edges):
    """Unit weight matrix: ``a_ij = 1`` on edges (self loops included)."""
    _check_edges(n, edges)
    a = np.zeros((n, n))
    for i, j in edges:
        a[i - 1, j - 1] = a[j - 1, i - 1] = 1.0
    return a


def build_graph(spec):
    """Build a :class:`NetworkGraph` from a :class:`GraphSpec`.

    Self loops are retained in the edge list but cancel inside ``D - A``,
    so they never change the Laplacian or its spectrum.

    Raises
    ------
    GraphError
        On unknown agent indices, a negative or asymmetric explicit
        weight matrix, or a weight matrix of the wrong shape.
    """
    if spec.n < 1:
        raise GraphError(f"agent count must be positive, got {spec.n}")
    edges = spec.canonical_edges()
    _check_edges(spec.n, edges)
    rule = spec.weighting
    if isinstance(rule, str):
        if rule == "metropolis":
            weights = metropolis_weights(spec.n, edges)
        elif rule == "unit":
            weights = unit_weights(spec.n, edges)
        else:
            raise GraphError(f"unknown weighting rule {rule!r}")
    else:
        weights = np.asarray(rule, dtype=float)
        if weights.shape != (spec.n, spec.n):
            raise GraphError(f"explicit weight matrix has shape {weights.shape}, expected {(spec.n, spec.n)}")
        if not np.array_equal(weights, weights.T):
            raise GraphError("explicit weight matrix must be symmetric")
        if np.any(weights < 0):
            raise GraphError("explicit weight matrix must be nonnegative")
    return NetworkGraph(spec.n, edges, weights)


def random_graph_spec(n, avg_degree, seed, max_attempts=1000):
    """Sample a connected Erdos-Renyi style graph spec.

    Each of the ``n (n - 1) / 2`` possible edges is kept with probability
    ``avg_degree / (n - 1)``; sampling repeats until the graph is connected.
    Deterministic for a fixed seed.

    Raises
    ------
    GraphError
        If ``avg_degree`` is not in ``(0, n)`` or no connected graph is
        found within ``max_attempts`` resamples.
    """
    if n < 2:
        raise GraphError("random graphs need at least two agents")
    if not 0 < avg_degree < n:
        raise GraphError(f"average degree must be in (0, {n}), got {avg_degree}")
    p = avg_degree / (n - 1)
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        mask = np.triu(rng.random((n, n)) < p, k=1)
        edges = tuple((int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(mask)))
        if _bfs_connected(n, mask | mask.T):
            return GraphSpec(n=n, edges=edges, weighting="metropolis")
    raise GraphError(f"no connected graph with n={n}, avg_degree={avg_degree} in {max_attempts} attempts")
