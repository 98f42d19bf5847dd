"""SE(3)-invariant point-set diffusion via pairwise distances.

The package expresses diffusion scores per pair distance and transports
them to coordinates with scatter operations, giving samplers that never
need an explicit equivariance projection. Besides the samplers it ships
the supporting analysis tools: spectral coordinate recovery, the
one-shot MDS update with its stress bound, exact and Monte Carlo
distance increment statistics, and population metrics.

Set SE3DIFF_DISABLE_NUMBA=1 before import to force the pure-numpy
kernel backend; ``se3diff.kernels.BACKEND`` reports the active one.
"""

from .diffusion import (CleanCoordinateScore, GaussianScoreOracle,
                        NoiseSchedule, NoisyToyScore, default_schedule,
                        forward_perturb, gaussian_distance_score,
                        mb_distance_score, noisy_toy_coordinate_score,
                        provider_coordinate_field, score_matching_loss)
from .errors import (DegenerateDistanceError, DivergenceError,
                     GraphGenerationError, InfeasibleDistanceError,
                     NormalizationError, Se3diffError)
from .experiments import (FlowCurve, StatsRow, SweepCell, SweepGrid,
                          ablation_degree, ablation_nodes, corrector_sweep,
                          stats_verification, sweep_schedule)
from .geometry import (EPS_DEGENERATE, Graph, distance_gradient,
                       pairwise_distances, random_regular_graph,
                       scatter_mean_shift, scatter_mean_shift_sparse,
                       weighted_product)
from .increments import (IncrementStats, exact_distance_increment,
                         laguerre_drift, mc_increment_stats)
from .mds import (MdsComparisonRecord, mds_objective, run_bound_check,
                  run_mds_comparison, smoothed_gd_mds, stress_bound)
from .metrics import (MetricsReport, RigidTransform, ad_score, aligned_rmsd,
                      cov_mat, kabsch_align)
from .samplers import (ChainResult, SamplerConfig, init_from_prior,
                       langevin_step, reverse_ode_full_step, reverse_ode_step,
                       reverse_sde_step, run_chain)
from .spectral import (EigenDecomposition, classic_mds, gram_from_distances,
                       spectral_coordinates, symmetric_eigendecomposition)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
