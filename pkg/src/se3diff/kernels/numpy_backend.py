"""Vectorized reference implementations of the hot kernels.

Every function here has a loop twin in ``numba_backend`` with the same
signature. This module is the fallback selected by the
SE3DIFF_DISABLE_NUMBA environment variable and the ground truth the
compiled kernels are checked against in the tests.

Conventions: coordinates are (n, 3) float64, distance and weight
matrices are (n, n) float64 with zero diagonals. Pairs closer than the
degeneracy floor ``eps`` contribute nothing to weighted sums.
"""

import numpy as np


def pairwise_distances(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(d, 0.0)
    return d


def _safe_weights(values: np.ndarray, dists: np.ndarray, eps: float) -> np.ndarray:
    # values / dists where the pair is non-degenerate, zero elsewhere
    ok = dists >= eps
    w = np.where(ok, values / np.where(ok, dists, 1.0), 0.0)
    np.fill_diagonal(w, 0.0)
    return w


def weighted_product(alpha: np.ndarray, coords: np.ndarray, dists: np.ndarray,
                     eps: float) -> np.ndarray:
    """Row k: sum over j of alpha[k, j] * (x_k - x_j) / d_kj."""
    w = _safe_weights(alpha, dists, eps)
    return w.sum(axis=1)[:, None] * coords - w @ coords


def sparse_scatter(score: np.ndarray, coords: np.ndarray, dists: np.ndarray,
                   adjacency: np.ndarray, degrees: np.ndarray,
                   eps: float) -> np.ndarray:
    """Row i: (1 / (2 deg_i)) * sum over neighbors j of
    score[i, j] * (x_i - x_j) / d_ij."""
    w = _safe_weights(np.where(adjacency, score, 0.0), dists, eps)
    out = w.sum(axis=1)[:, None] * coords - w @ coords
    return out / (2.0 * degrees)[:, None]


def mds_objective(coords: np.ndarray, target: np.ndarray) -> float:
    d = pairwise_distances(coords)
    iu = np.triu_indices(coords.shape[0], 1)
    r = d[iu] - target[iu]
    return float(r @ r)


def smoothed_objective(coords: np.ndarray, target: np.ndarray, eps: float) -> float:
    diff = coords[:, None, :] - coords[None, :, :]
    s = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff) + eps)
    iu = np.triu_indices(coords.shape[0], 1)
    r = s[iu] - target[iu]
    return float(r @ r)


def smoothed_gradient(coords: np.ndarray, target: np.ndarray, eps: float) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    s = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff) + eps)
    w = (s - target) / s
    np.fill_diagonal(w, 0.0)
    return 2.0 * (w.sum(axis=1)[:, None] * coords - w @ coords)


def distance_increments(diff: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Exact change of ||diff + noise_b|| - ||diff|| for each noise row.

    Written as (2 m.diff + ||m||^2) / (||m + diff|| + ||diff||), which
    avoids the cancellation of subtracting two nearly equal norms when
    the noise is small.
    """
    a = float(np.sqrt(diff @ diff))
    num = 2.0 * (noise @ diff) + np.einsum("ij,ij->i", noise, noise)
    shifted = noise + diff
    den = np.sqrt(np.einsum("ij,ij->i", shifted, shifted)) + a
    return num / den


def jacobi_eigh(a: np.ndarray):
    """Eigenvalues (descending) and matching eigenvector columns of a
    symmetric matrix. Backed by LAPACK here; the compiled twin runs a
    cyclic Jacobi sweep instead."""
    w, v = np.linalg.eigh(a)
    return w[::-1].copy(), v[:, ::-1].copy()
