import numpy as np
import pytest

from se3diff import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Touch every kernel once on tiny inputs.

    With the compiled backend active this forces jit compilation up
    front, so wall-clock assertions later in the session measure the
    kernels and not the compiler.
    """
    pts = np.random.default_rng(0).standard_normal((5, 3))
    d = kernels.pairwise_distances(pts)
    w = np.zeros((5, 5))
    w[0, 1] = w[1, 0] = 1.0
    adj = np.ones((5, 5), dtype=np.bool_)
    np.fill_diagonal(adj, False)
    deg = np.full(5, 4.0)
    kernels.weighted_product(w, pts, d, 1e-8)
    kernels.sparse_scatter(w, pts, d, adj, deg, 1e-8)
    kernels.mds_objective(pts, d)
    kernels.smoothed_objective(pts, d, 1e-8)
    kernels.smoothed_gradient(pts, d, 1e-8)
    kernels.distance_increments(np.array([1.0, 0.0, 0.0]), pts)
    kernels.jacobi_eigh(np.eye(4))
