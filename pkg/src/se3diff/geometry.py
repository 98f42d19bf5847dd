"""Point sets, pairwise distances, and distance-to-coordinate transport.

The central objects are an (n, 3) coordinate array, its (n, n) distance
matrix, and symmetric per-pair weight matrices (perturbations or scores).
The two scatter operations push per-pair quantities back into coordinate
space: the dense one over all pairs, the sparse one over the edges of a
regular graph.

Pairs closer than ``EPS_DEGENERATE`` have no defined direction; weighted
sums skip them and operations that need a single pair's direction raise
``DegenerateDistanceError``.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DegenerateDistanceError, GraphGenerationError
from .util import derive_seed

EPS_DEGENERATE = 1e-8

_MIN_SCATTER_DEGREE = 4


def as_points(points, min_rows: int = 2) -> np.ndarray:
    """Validate and return an (n, 3) float64 coordinate array."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) coordinate array, got shape {pts.shape}")
    if pts.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} points, got {pts.shape[0]}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("coordinates contain non-finite values")
    return np.ascontiguousarray(pts)


def as_pair_matrix(mat, n: int, name: str = "matrix") -> np.ndarray:
    """Validate an (n, n) symmetric real matrix with zero diagonal."""
    a = np.asarray(mat, dtype=np.float64)
    if a.shape != (n, n):
        raise ValueError(f"{name} must have shape ({n}, {n}), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > 1e-8 * scale:
        raise ValueError(f"{name} is not symmetric")
    if float(np.abs(np.diagonal(a)).max()) > 1e-12 * scale:
        raise ValueError(f"{name} has a nonzero diagonal")
    return np.ascontiguousarray(a)


class Graph:
    """Undirected simple graph on nodes 0..n-1.

    Edges are stored canonically as (u, v) with u < v, sorted
    lexicographically, so two graphs built from the same edge set in any
    order compare equal array-wise.
    """

    def __init__(self, n: int, edges):
        n = int(n)
        if n < 2:
            raise ValueError("graph needs at least two nodes")
        e = np.asarray(edges, dtype=np.int64)
        if e.size == 0:
            e = e.reshape(0, 2)
        if e.ndim != 2 or e.shape[1] != 2:
            raise ValueError("edges must be an (m, 2) integer array")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        u = np.minimum(e[:, 0], e[:, 1])
        v = np.maximum(e[:, 0], e[:, 1])
        if np.any(u == v):
            raise ValueError("self loops are not allowed")
        key = u * n + v
        if np.unique(key).size != key.size:
            raise ValueError("duplicate edges are not allowed")
        order = np.argsort(key)
        self.n = n
        self.edges = np.column_stack([u[order], v[order]])
        self.degrees = np.bincount(self.edges.ravel(), minlength=n).astype(np.float64)
        adj = np.zeros((n, n), dtype=np.bool_)
        adj[self.edges[:, 0], self.edges[:, 1]] = True
        adj[self.edges[:, 1], self.edges[:, 0]] = True
        self.adjacency = adj

    @classmethod
    def complete(cls, n: int) -> "Graph":
        iu = np.triu_indices(n, 1)
        return cls(n, np.column_stack(iu))

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def min_degree(self) -> int:
        return int(self.degrees.min()) if self.n else 0

    @property
    def score_transform_valid(self) -> bool:
        """Whether the sparse scatter approximation is trustworthy here.

        The per-node averaging needs enough incident edges; below degree
        4 the transported field is too noisy to act as a score.
        """
        return self.min_degree >= _MIN_SCATTER_DEGREE

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.num_edges}, min_degree={self.min_degree})"


def pairwise_distances(points) -> np.ndarray:
    """Euclidean distance matrix of a point set."""
    return kernels.pairwise_distances(as_points(points))


def distance_gradient(points, u: int, v: int) -> np.ndarray:
    """Gradient of the single distance d_uv with respect to all coordinates.

    Returns an (n, 3) array that is zero outside rows u and v:
    row u holds (x_u - x_v) / d_uv and row v its negation.
    """
    pts = as_points(points)
    n = pts.shape[0]
    u, v = int(u), int(v)
    if not (0 <= u < n and 0 <= v < n) or u == v:
        raise ValueError(f"invalid pair ({u}, {v}) for {n} points")
    diff = pts[u] - pts[v]
    d = float(np.linalg.norm(diff))
    if d < EPS_DEGENERATE:
        raise DegenerateDistanceError(
            f"distance between nodes {u} and {v} is degenerate (d={d:.3e})")
    grad = np.zeros((n, 3))
    grad[u] = diff / d
    grad[v] = -diff / d
    return grad


def weighted_product(alpha, points, dists: np.ndarray | None = None) -> np.ndarray:
    """Transport symmetric pair weights into coordinate space.

    Row k of the result is sum over j != k of
    alpha[k, j] * (x_k - x_j) / d_kj. Degenerate pairs are skipped.
    """
    pts = as_points(points)
    a = as_pair_matrix(alpha, pts.shape[0], "alpha")
    if dists is None:
        dists = kernels.pairwise_distances(pts)
    return kernels.weighted_product(a, pts, dists, EPS_DEGENERATE)


def scatter_mean_shift(points, alpha, dists: np.ndarray | None = None) -> np.ndarray:
    """One-shot coordinate update realizing a pair-distance perturbation.

    Returns the shifted point set  x + weighted_product(alpha, x) / (2 (n-1)).
    Moving each pair (u, v) along its axis by alpha_uv / (2 (n-1)) from both
    ends changes d_uv by approximately alpha_uv while disturbing the other
    distances only at second order.
    """
    pts = as_points(points)
    n = pts.shape[0]
    wp = weighted_product(alpha, pts, dists=dists)
    return pts + wp / (2.0 * (n - 1))


def scatter_mean_shift_sparse(points, graph: Graph, score,
                              dists: np.ndarray | None = None,
                              strict: bool = True) -> np.ndarray:
    """Graph-restricted scatter of a score matrix into a coordinate field.

    Row i of the result is (1 / (2 deg_i)) * sum over neighbors j of
    score[i, j] * (x_i - x_j) / d_ij. Unlike ``scatter_mean_shift`` this
    returns the field itself, not shifted points: it is the
    coordinate-space score used by the samplers.

    With ``strict`` (the default) graphs with minimum degree below 4 are
    rejected; pass strict=False to compute the field anyway, for
    example for diagnostics on sparse graphs.
    """
    pts = as_points(points)
    n = pts.shape[0]
    if graph.n != n:
        raise ValueError(f"graph has {graph.n} nodes but point set has {n}")
    if strict and not graph.score_transform_valid:
        raise ValueError(
            f"graph minimum degree {graph.min_degree} is below "
            f"{_MIN_SCATTER_DEGREE}; the scatter approximation is unreliable "
            "(pass strict=False to force)")
    s = as_pair_matrix(score, n, "score")
    if dists is None:
        dists = kernels.pairwise_distances(pts)
    return kernels.sparse_scatter(s, pts, dists, graph.adjacency,
                                  graph.degrees, EPS_DEGENERATE)


def random_regular_graph(n: int, k: int, seed: int) -> Graph:
    """Sample a random simple k-regular graph, deterministic in the seed.

    Delegates to networkx's pairing-with-repair generator (plain stub
    pairing rejects almost every draw above degree 4) and retries a few
    times on the rare dead end before giving up.
    """
    n, k = int(n), int(k)
    if k < _MIN_SCATTER_DEGREE:
        raise ValueError(f"degree must be at least {_MIN_SCATTER_DEGREE}, got {k}")
    if k >= n:
        raise ValueError(f"degree {k} must be smaller than node count {n}")
    if (n * k) % 2 != 0:
        raise ValueError(f"n*k must be even, got n={n}, k={k}")
    import networkx as nx
    for attempt in range(100):
        try:
            g = nx.random_regular_graph(k, n, seed=derive_seed(seed, attempt))
        except nx.NetworkXError:
            continue
        return Graph(n, np.array(sorted(g.edges()), dtype=np.int64).reshape(-1, 2))
    raise GraphGenerationError(
        f"no simple {k}-regular graph on {n} nodes found in 100 attempts")
