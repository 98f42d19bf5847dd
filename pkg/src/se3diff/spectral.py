"""Recovering coordinates from a distance matrix.

Two routes:

  * ``spectral_coordinates`` anchors node 1 at the origin, builds the
    Gram matrix from squared distances, and factorizes it. It refuses
    matrices that do not embed in three dimensions.
  * ``classic_mds`` double-centers the squared distances and takes the
    top three eigenpairs, clamping negatives. It always returns the
    best-effort rank-3 embedding and never raises for infeasibility.

Both return (n, 3) coordinates determined up to a rigid motion.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InfeasibleDistanceError
from .geometry import as_pair_matrix

# Relative eigenvalue thresholds. A distance matrix embeds in 3D when at
# most three Gram eigenvalues are meaningfully positive and none is
# meaningfully negative; "meaningfully" is measured against the largest
# eigenvalue.
EPS_RANK = 1e-8
EPS_NEGATIVE = 1e-6


@dataclass
class EigenDecomposition:
    """Eigenvalues in descending order with matching eigenvector columns."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def gram_from_distances(dists) -> np.ndarray:
    """Gram matrix of the configuration with node 0 pinned at the origin.

    M[i, j] = (d[0, j]^2 + d[i, 0]^2 - d[i, j]^2) / 2, which equals
    <x_i, x_j> when the distances come from points with x_0 = 0. The
    construction is exactly symmetric in floating point because entry
    (i, j) and entry (j, i) run the identical arithmetic.
    """
    d = as_pair_matrix(dists, np.asarray(dists).shape[0], "distance matrix")
    sq = d * d
    m = 0.5 * (sq[0][None, :] + sq[:, 0][:, None] - sq)
    return m


def symmetric_eigendecomposition(a) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix, ordered descending.

    Rejects matrices whose asymmetry exceeds 1e-10 in absolute value
    rather than silently symmetrizing, so callers are forced to be
    explicit about where symmetry comes from.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite values")
    if a.shape[0] > 1 and float(np.abs(a - a.T).max()) > 1e-10:
        raise ValueError("matrix is not symmetric within 1e-10")
    w, v = kernels.jacobi_eigh(np.ascontiguousarray(a))
    return EigenDecomposition(eigenvalues=w, eigenvectors=v)


def _embed_top3(eig: EigenDecomposition, n: int, keep: np.ndarray) -> np.ndarray:
    """Coordinates from the leading eigenpairs; ``keep`` masks the
    eigenvalues treated as genuinely positive, everything else is zero."""
    lam = np.where(keep, eig.eigenvalues, 0.0)
    coords = np.zeros((n, 3))
    take = min(3, n)
    coords[:, :take] = eig.eigenvectors[:, :take] * np.sqrt(lam[:take])[None, :]
    return coords


def spectral_coordinates(dists) -> np.ndarray:
    """Exact coordinate recovery for a 3D-feasible distance matrix.

    Node 0 lands at the origin. Raises ``InfeasibleDistanceError`` when
    more than three eigenvalues of the anchored Gram matrix are positive
    beyond the rank threshold, or any eigenvalue is negative beyond the
    feasibility threshold. Small negatives from roundoff are clamped.
    """
    m = gram_from_distances(dists)
    n = m.shape[0]
    eig = symmetric_eigendecomposition(m)
    w = eig.eigenvalues
    lam_max = float(w[0]) if n else 0.0
    scale = lam_max if lam_max > 0.0 else 1.0
    if float(w[-1]) < -EPS_NEGATIVE * scale:
        raise InfeasibleDistanceError(
            f"Gram matrix has eigenvalue {w[-1]:.6e} below "
            f"-{EPS_NEGATIVE:g} * lambda_max; distances are not Euclidean")
    positive = w > EPS_RANK * scale
    rank = int(np.count_nonzero(positive))
    if rank > 3:
        raise InfeasibleDistanceError(
            f"Gram matrix has rank {rank} > 3; distances need more than "
            "three dimensions")
    return _embed_top3(eig, n, positive)


def classic_mds(dists) -> np.ndarray:
    """Torgerson scaling: best rank-3 embedding of a (possibly
    non-Euclidean) distance matrix.

    Double-centers the squared distances, symmetrizes the product to
    kill matmul roundoff, and keeps the top three nonnegative
    eigenpairs. Negative eigenvalues are clamped to zero, so the result
    is always defined; feasibility is not checked.
    """
    d = as_pair_matrix(dists, np.asarray(dists).shape[0], "distance matrix")
    n = d.shape[0]
    sq = d * d
    p = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * (p @ sq @ p)
    b = 0.5 * (b + b.T)
    eig = symmetric_eigendecomposition(b)
    positive = eig.eigenvalues > 0.0
    return _embed_top3(eig, n, positive)
