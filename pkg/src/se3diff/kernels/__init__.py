"""Backend selection for the hot kernels.

Two interchangeable implementations exist: compiled numba loops and
pure-numpy vectorized code. The choice is made once at import time.
Set SE3DIFF_DISABLE_NUMBA=1 (or "true"/"yes"/"on") to force the numpy
path, for example on platforms without a working numba, or to compare
the two with benchmarks/bench_kernels.py. ``BACKEND`` records which one
is active so manifests can log it.
"""

import os

__all__ = [
    "BACKEND",
    "pairwise_distances",
    "weighted_product",
    "sparse_scatter",
    "mds_objective",
    "smoothed_objective",
    "smoothed_gradient",
    "distance_increments",
    "jacobi_eigh",
]


def _numba_disabled() -> bool:
    flag = os.environ.get("SE3DIFF_DISABLE_NUMBA", "")
    return flag.strip().lower() in {"1", "true", "yes", "on"}


if _numba_disabled():
    from . import numpy_backend as _impl
    BACKEND = "numpy"
else:
    try:
        from . import numba_backend as _impl
        BACKEND = "numba"
    except ImportError:
        from . import numpy_backend as _impl
        BACKEND = "numpy"

pairwise_distances = _impl.pairwise_distances
weighted_product = _impl.weighted_product
sparse_scatter = _impl.sparse_scatter
mds_objective = _impl.mds_objective
smoothed_objective = _impl.smoothed_objective
smoothed_gradient = _impl.smoothed_gradient
distance_increments = _impl.distance_increments
jacobi_eigh = _impl.jacobi_eigh
