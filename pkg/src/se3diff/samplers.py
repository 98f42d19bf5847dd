"""Reverse-time samplers over point coordinates.

All samplers share a structure: walk the noise ladder from step N down
to 1 and move the coordinates along a score field transported from
distance space. Variants:

  * "ode":      probability-flow update, score term only
  * "ode_full": adds the -3/d correction inside the score bracket,
                which needs a distance-kind provider
  * "sde":      stochastic reverse process, doubled score drift plus
                fresh Gaussian noise each step
  * "ld":       annealed Langevin dynamics with step size
                ld_step_scale * sigma_k^2

None of these project onto a constraint set; the score field keeps the
chain near the data manifold by itself. A corrector factor k >= 1
amplifies the score drift, trading bias for contraction speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import kernels
from .diffusion import NoiseSchedule, provider_coordinate_field
from .errors import DegenerateDistanceError, DivergenceError
from .geometry import (EPS_DEGENERATE, as_points, scatter_mean_shift_sparse,
                       weighted_product)
from .util import derive_seed, rng_from

METHOD_SDE = "sde"
METHOD_ODE_SIMPLE = "ode"
METHOD_ODE_FULL = "ode_full"
METHOD_LD = "ld"
METHODS = (METHOD_SDE, METHOD_ODE_SIMPLE, METHOD_ODE_FULL, METHOD_LD)


@dataclass
class SamplerConfig:
    """Knobs for ``run_chain``.

    ``corrector`` multiplies the score drift (not the noise). The chain
    aborts with ``DivergenceError`` when any coordinate goes non-finite
    or the largest pairwise distance exceeds ``divergence_factor`` times
    its initial value.
    """

    method: str
    steps: int
    corrector: float = 1.0
    ld_step_scale: float = 0.1
    seed: int = 0
    convergence_threshold: float = 0.5
    record_every: int = 10
    noise_scale: float = 1.0
    divergence_factor: float = 1e3

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if int(self.steps) < 1:
            raise ValueError(f"steps must be at least 1, got {self.steps}")
        self.steps = int(self.steps)
        if self.corrector < 1.0:
            raise ValueError(f"corrector must be at least 1, got {self.corrector}")
        if self.ld_step_scale <= 0.0:
            raise ValueError(f"ld_step_scale must be positive, got {self.ld_step_scale}")
        if self.convergence_threshold <= 0.0:
            raise ValueError("convergence_threshold must be positive")
        if int(self.record_every) < 1:
            raise ValueError(f"record_every must be at least 1, got {self.record_every}")
        self.record_every = int(self.record_every)
        if self.divergence_factor <= 0.0:
            raise ValueError("divergence_factor must be positive")


@dataclass
class ChainResult:
    """Output of ``run_chain``.

    ``trajectory`` holds (step index, coordinates) snapshots in
    decreasing step order, always including the initial and final
    states. When reference distances were supplied, ``distance_errors``
    has the max-abs distance error indexed by step (length steps + 1),
    ``max_distance_error`` mirrors it per snapshot, and ``converged_at``
    is the first step index at which the error dropped below the
    threshold (None if it never did).
    """

    final: np.ndarray
    trajectory: list = dataclass_field(default_factory=list)
    converged_at: int | None = None
    distance_errors: np.ndarray | None = None
    max_distance_error: list | None = None


def init_from_prior(n: int, schedule: NoiseSchedule, seed: int) -> np.ndarray:
    """Draw n points from the terminal noise distribution
    N(0, sigma_T^2 I)."""
    n = int(n)
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    rng = rng_from(seed)
    return schedule.sigma_terminal * rng.standard_normal((n, 3))


def reverse_ode_step(points, schedule: NoiseSchedule, k_step: int, provider,
                     corrector: float = 1.0,
                     dists: np.ndarray | None = None) -> np.ndarray:
    """One probability-flow step from level k to k-1:
    x <- x + corrector * (sigma_k^2 - sigma_{k-1}^2) * field."""
    pts = as_points(points)
    if dists is None:
        dists = kernels.pairwise_distances(pts)
    dvar = schedule.g2(k_step)
    field = provider_coordinate_field(provider, pts, dists, k_step)
    return pts + (corrector * dvar) * field


def reverse_ode_full_step(points, schedule: NoiseSchedule, k_step: int, provider,
                          corrector: float = 1.0,
                          dists: np.ndarray | None = None) -> np.ndarray:
    """Probability-flow step keeping the -3/d transport term explicit.

    The drift bracket is (score - 3/d) per pair, scattered to
    coordinates, so a provider whose score equals 3/d produces exactly
    zero update. Needs a distance-kind provider and non-degenerate
    distances.
    """
    pts = as_points(points)
    if getattr(provider, "kind", "distance") != "distance":
        raise ValueError("the full ODE drift needs a distance-kind provider")
    if dists is None:
        dists = kernels.pairwise_distances(pts)
    n = pts.shape[0]
    off = ~np.eye(n, dtype=bool)
    if np.any(dists[off] < EPS_DEGENERATE):
        raise DegenerateDistanceError(
            "full ODE drift undefined: a pairwise distance is degenerate")
    score = np.asarray(provider(pts, dists, k_step), dtype=np.float64)
    bracket = score.copy()
    bracket[off] -= 3.0 / dists[off]
    np.fill_diagonal(bracket, 0.0)
    graph = getattr(provider, "graph", None)
    if graph is not None:
        field = scatter_mean_shift_sparse(pts, graph, bracket, dists=dists)
    else:
        field = weighted_product(bracket, pts, dists=dists) / (2.0 * (n - 1))
    dvar = schedule.g2(k_step)
    return pts + (corrector * dvar) * field


def reverse_sde_step(points, schedule: NoiseSchedule, k_step: int, provider,
                     corrector: float = 1.0, seed: int = 0,
                     noise_scale: float = 1.0,
                     dists: np.ndarray | None = None) -> np.ndarray:
    """One reverse SDE step: doubled score drift plus injected noise.

    x <- x + corrector * 2 * (sigma_k^2 - sigma_{k-1}^2) * field
           - noise_scale * sqrt(sigma_k^2 - sigma_{k-1}^2) * z

    The corrector scales only the drift. With noise_scale = 0 and
    corrector k, the update equals the simple ODE step with corrector
    2k.
    """
    pts = as_points(points)
    if dists is None:
        dists = kernels.pairwise_distances(pts)
    dvar = schedule.g2(k_step)
    field = provider_coordinate_field(provider, pts, dists, k_step)
    z = rng_from(seed).standard_normal(pts.shape)
    return pts + (corrector * 2.0 * dvar) * field \
        - (noise_scale * math.sqrt(dvar)) * z


def langevin_step(points, sigma_t: float, delta: float, coordinate_score,
                  seed: int, noise_scale: float = 1.0) -> np.ndarray:
    """Annealed Langevin update with step size alpha = delta * sigma_t^2:
    x <- x + alpha * field + noise_scale * sqrt(2 alpha) * z."""
    pts = as_points(points)
    score = np.asarray(coordinate_score, dtype=np.float64)
    if score.shape != pts.shape:
        raise ValueError(
            f"coordinate score shape {score.shape} does not match points {pts.shape}")
    if delta <= 0.0:
        raise ValueError(f"step scale must be positive, got {delta}")
    alpha = delta * float(sigma_t) ** 2
    z = rng_from(seed).standard_normal(pts.shape)
    return pts + alpha * score + (noise_scale * math.sqrt(2.0 * alpha)) * z


def run_chain(init, config: SamplerConfig, schedule: NoiseSchedule, provider,
              d0=None) -> ChainResult:
    """Run a full reverse chain from step N down to 0.

    ``init`` is the state at step N (usually ``init_from_prior``).
    When reference distances ``d0`` are given, the max-abs distance
    error is tracked every step and convergence is declared at the
    first step where it falls below the configured threshold. The error
    is measured over the distances the model actually diffuses: the
    provider's graph edges when it has a graph, else all pairs. (A
    sparse score only constrains edge lengths; on an underdetermined
    graph the non-edge distances are free and comparing them would
    measure the wrong object.)

    Stochastic methods derive their per-step noise seed from
    (config.seed, step), so a chain is reproducible from its config
    alone. Raises ``DivergenceError`` (with the offending step index)
    when the state leaves the finite / bounded regime.
    """
    pts = as_points(init).copy()
    n = pts.shape[0]
    steps = config.steps
    if schedule.num_steps != steps:
        raise ValueError(
            f"schedule has {schedule.num_steps} steps but config expects {steps}")
    track = d0 is not None
    if track:
        d0 = np.asarray(d0, dtype=np.float64)
        if d0.shape != (n, n):
            raise ValueError(f"reference distances must be ({n}, {n}), got {d0.shape}")
        graph = getattr(provider, "graph", None)
        if graph is not None:
            mask = graph.adjacency
        else:
            mask = ~np.eye(n, dtype=bool)

    def tracked_error(d):
        return float(np.abs(d[mask] - d0[mask]).max())

    dists = kernels.pairwise_distances(pts)
    # Divergence is judged against the initial extent; the floor keeps
    # the guard meaningful for initial states collapsed near a point.
    guard = config.divergence_factor * max(float(dists.max()), 1.0)

    errors = np.full(steps + 1, np.nan) if track else None
    converged_at = None
    trajectory = [(steps, pts.copy())]
    snapshot_errors: list | None = [0.0] if track else None
    if track:
        err = tracked_error(dists)
        errors[steps] = err
        snapshot_errors[0] = err
        if err < config.convergence_threshold:
            converged_at = steps

    for k in range(steps, 0, -1):
        if config.method == METHOD_ODE_SIMPLE:
            pts = reverse_ode_step(pts, schedule, k, provider,
                                   config.corrector, dists=dists)
        elif config.method == METHOD_ODE_FULL:
            pts = reverse_ode_full_step(pts, schedule, k, provider,
                                        config.corrector, dists=dists)
        elif config.method == METHOD_SDE:
            pts = reverse_sde_step(pts, schedule, k, provider, config.corrector,
                                   seed=derive_seed(config.seed, k),
                                   noise_scale=config.noise_scale, dists=dists)
        else:
            field = provider_coordinate_field(provider, pts, dists, k)
            pts = langevin_step(pts, float(schedule.sigma[k]),
                                config.ld_step_scale, field,
                                derive_seed(config.seed, k),
                                noise_scale=config.noise_scale)
        t = k - 1
        if not np.all(np.isfinite(pts)):
            raise DivergenceError(
                f"non-finite coordinates at step {k}", step_index=k)
        dists = kernels.pairwise_distances(pts)
        dmax = float(dists.max())
        if dmax > guard:
            raise DivergenceError(
                f"distance scale {dmax:.3e} exceeded the divergence guard at step {k}",
                step_index=k)
        if track:
            err = tracked_error(dists)
            errors[t] = err
            if converged_at is None and err < config.convergence_threshold:
                converged_at = t
        if t % config.record_every == 0 or t == 0:
            trajectory.append((t, pts.copy()))
            if track:
                snapshot_errors.append(err)

    return ChainResult(final=pts, trajectory=trajectory,
                       converged_at=converged_at, distance_errors=errors,
                       max_distance_error=snapshot_errors)
