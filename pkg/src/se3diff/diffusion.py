"""Forward noising process and analytic scores.

The forward process adds isotropic Gaussian noise to coordinates with a
variance-exploding ladder sigma_0 = 0 < sigma_1 < ... < sigma_T, built
from a sigmoid beta ramp. Scores are expressed per pair distance
(an (n, n) symmetric matrix) and transported to coordinate space by the
scatter operations in ``geometry``.

A score provider is any callable ``provider(points, dists, k) -> array``
with a ``kind`` attribute: "distance" providers return an (n, n) score
matrix, "coordinate" providers return the (n, 3) field directly. An
optional ``graph`` attribute restricts the scatter to graph edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateDistanceError, NormalizationError
from .geometry import (EPS_DEGENERATE, Graph, as_pair_matrix, as_points,
                       scatter_mean_shift_sparse, weighted_product)
from .util import derive_seed, rng_from

BETA_MIN = 1e-7
BETA_MAX = 2e-3


@dataclass(frozen=True)
class NoiseSchedule:
    """Noise ladder sigma[0..T] with sigma[0] = 0 and sigma strictly
    increasing. ``g2(k)`` is the per-step variance gain sigma_k^2 -
    sigma_{k-1}^2; the gains telescope to sigma_T^2."""

    num_steps: int
    sigma: np.ndarray = field(repr=False)

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=np.float64)
        if sig.shape != (self.num_steps + 1,):
            raise ValueError(
                f"sigma must have length num_steps + 1 = {self.num_steps + 1}, "
                f"got {sig.shape}")
        if sig[0] != 0.0:
            raise ValueError("sigma[0] must be exactly 0")
        if not np.all(np.diff(sig) > 0.0):
            raise ValueError("sigma must be strictly increasing")
        object.__setattr__(self, "sigma", sig)

    @property
    def sigma_terminal(self) -> float:
        return float(self.sigma[-1])

    def g2(self, k: int) -> float:
        """Variance added by forward step k (1-based)."""
        if not 1 <= k <= self.num_steps:
            raise ValueError(f"step {k} outside 1..{self.num_steps}")
        return float(self.sigma[k] ** 2 - self.sigma[k - 1] ** 2)

    def subsample(self, num_steps: int) -> "NoiseSchedule":
        """Coarser ladder over the same noise range.

        Picks num_steps + 1 evenly spaced indices including both ends,
        so sigma_terminal is preserved. Used to run a chain with fewer
        steps than the schedule it was defined with.
        """
        num_steps = int(num_steps)
        if not 1 <= num_steps <= self.num_steps:
            raise ValueError(
                f"subsample size {num_steps} outside 1..{self.num_steps}")
        idx = np.round(np.linspace(0, self.num_steps, num_steps + 1)).astype(int)
        return NoiseSchedule(num_steps=num_steps, sigma=self.sigma[idx].copy())


def default_schedule(num_steps: int) -> NoiseSchedule:
    """Sigmoid beta ramp from 1e-7 to 2e-3 over ``num_steps`` steps.

    beta_k = beta_min + (beta_max - beta_min) * sigmoid(s_k) with s_k
    spanning [-6, 6]; sigma_k^2 = (1 - abar_k) / abar_k where abar is
    the running product of (1 - beta). At 5000 steps the terminal sigma
    is a bit over 12, which comfortably swamps unit-scale data.
    """
    num_steps = int(num_steps)
    if num_steps < 2:
        raise ValueError(
            f"the sigmoid ramp needs at least two steps, got {num_steps}")
    s = np.linspace(-6.0, 6.0, num_steps)
    beta = BETA_MIN + (BETA_MAX - BETA_MIN) / (1.0 + np.exp(-s))
    abar = np.cumprod(1.0 - beta)
    sigma = np.zeros(num_steps + 1)
    sigma[1:] = np.sqrt((1.0 - abar) / abar)
    return NoiseSchedule(num_steps=num_steps, sigma=sigma)


def forward_perturb(points0, schedule: NoiseSchedule, k: int, seed: int) -> np.ndarray:
    """Draw x_k = x_0 + sigma_k * z with z standard normal."""
    pts = as_points(points0)
    if not 0 <= k <= schedule.num_steps:
        raise ValueError(f"step {k} outside 0..{schedule.num_steps}")
    if k == 0:
        return pts.copy()
    rng = rng_from(seed)
    return pts + schedule.sigma[k] * rng.standard_normal(pts.shape)


def gaussian_distance_score(dists, dists0, sigma: float) -> np.ndarray:
    """Per-distance score -(d - d0) / (2 sigma^2) of the Gaussian
    surrogate for the noised-distance law. Diagonal is zero."""
    d = np.asarray(dists, dtype=np.float64)
    d0 = np.asarray(dists0, dtype=np.float64)
    if d.shape != d0.shape:
        raise ValueError(f"shape mismatch {d.shape} vs {d0.shape}")
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    out = -(d - d0) / (2.0 * sigma * sigma)
    np.fill_diagonal(out, 0.0)
    return out


def mb_distance_score(dists, dists0, sigma: float, a_t: float = 0.0) -> np.ndarray:
    """Score with the Maxwell-Boltzmann style a_t / d repulsion term
    added to the Gaussian part. Requires all off-diagonal distances to
    be non-degenerate, since 1/d blows up at zero."""
    d = np.asarray(dists, dtype=np.float64)
    base = gaussian_distance_score(d, dists0, sigma)
    n = d.shape[0]
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] < EPS_DEGENERATE):
        raise DegenerateDistanceError(
            "repulsive score undefined: an off-diagonal distance is below "
            f"{EPS_DEGENERATE:g}")
    out = base.copy()
    out[off] += a_t / d[off]
    return out


def noisy_toy_coordinate_score(points, graph: Graph, dists0, sigma: float,
                               delta: float, seed: int,
                               dists: np.ndarray | None = None) -> np.ndarray:
    """Imperfect score model: clean scattered score plus sigma-scaled
    noise, normalized to unit standard deviation.

    The noise term is 2 * (sigmoid(sigma * delta) - 0.5) * delta * z, so
    delta = 0 gives the normalized clean field and larger delta degrades
    the model more at high noise levels. Raises ``NormalizationError``
    when the pre-normalization field has zero variance (nothing to
    rescale).
    """
    pts = as_points(points)
    if dists is None:
        dists = kernels.pairwise_distances(pts)
    score = gaussian_distance_score(dists, dists0, sigma)
    field_ = scatter_mean_shift_sparse(pts, graph, score, dists=dists)
    rng = rng_from(seed)
    z = rng.standard_normal(pts.shape)
    coeff = 2.0 * (1.0 / (1.0 + np.exp(-sigma * delta)) - 0.5) * delta
    field_ = field_ + coeff * z
    std = float(field_.std())
    if not std > 0.0:
        raise NormalizationError("score field has zero variance")
    return field_ / std


class GaussianScoreOracle:
    """Distance-kind provider built from ground-truth reference distances.

    Returns gaussian_distance_score(d, d0, sigma_k), optionally with the
    repulsive a_t / d term. Attach a graph to make samplers scatter it
    sparsely."""

    kind = "distance"

    def __init__(self, dists0, schedule: NoiseSchedule,
                 graph: Graph | None = None, a_t: float = 0.0):
        d0 = np.asarray(dists0, dtype=np.float64)
        self.dists0 = as_pair_matrix(d0, d0.shape[0], "reference distances")
        self.schedule = schedule
        self.graph = graph
        self.a_t = float(a_t)

    def __call__(self, points, dists, k: int) -> np.ndarray:
        sigma = float(self.schedule.sigma[k])
        if self.a_t != 0.0:
            return mb_distance_score(dists, self.dists0, sigma, self.a_t)
        return gaussian_distance_score(dists, self.dists0, sigma)


class CleanCoordinateScore:
    """Coordinate-kind provider equal to the scattered clean score.

    This is exactly the regression target of ``score_matching_loss``,
    so feeding it back into the loss gives zero."""

    kind = "coordinate"

    def __init__(self, dists0, schedule: NoiseSchedule, graph: Graph):
        d0 = np.asarray(dists0, dtype=np.float64)
        self.dists0 = as_pair_matrix(d0, d0.shape[0], "reference distances")
        self.schedule = schedule
        self.graph = graph

    def __call__(self, points, dists, k: int) -> np.ndarray:
        score = gaussian_distance_score(dists, self.dists0,
                                        float(self.schedule.sigma[k]))
        return scatter_mean_shift_sparse(points, self.graph, score, dists=dists)


class NoisyToyScore:
    """Coordinate-kind provider wrapping ``noisy_toy_coordinate_score``.

    The per-step noise seed is derived from (seed, k), so a chain that
    evaluates the provider at each step sees fresh but reproducible
    noise."""

    kind = "coordinate"

    def __init__(self, graph: Graph, dists0, schedule: NoiseSchedule,
                 delta: float, seed: int):
        d0 = np.asarray(dists0, dtype=np.float64)
        self.dists0 = as_pair_matrix(d0, d0.shape[0], "reference distances")
        self.graph = graph
        self.schedule = schedule
        self.delta = float(delta)
        self.seed = int(seed)

    def __call__(self, points, dists, k: int) -> np.ndarray:
        return noisy_toy_coordinate_score(
            points, self.graph, self.dists0, float(self.schedule.sigma[k]),
            self.delta, derive_seed(self.seed, k), dists=dists)


def provider_coordinate_field(provider, points, dists, k: int) -> np.ndarray:
    """Evaluate any provider and return the coordinate-space field.

    Distance-kind outputs are scattered here: over the provider's graph
    when it has one, else densely over all pairs with the 1 / (2 (n-1))
    mean factor.
    """
    kind = getattr(provider, "kind", "distance")
    out = provider(points, dists, k)
    if kind == "coordinate":
        return np.asarray(out, dtype=np.float64)
    graph = getattr(provider, "graph", None)
    if graph is not None:
        return scatter_mean_shift_sparse(points, graph, out, dists=dists)
    n = np.asarray(points).shape[0]
    return weighted_product(out, points, dists=dists) / (2.0 * (n - 1))


def score_matching_loss(provider, points0, schedule: NoiseSchedule,
                        batch: int, seed: int) -> float:
    """Monte Carlo denoising score matching loss.

    Each sample draws a uniform step t and a noised copy of points0,
    then measures (sigma_t / 2) times the squared Frobenius distance
    between the provider's coordinate field and the scattered clean
    score at that copy. Exact providers give zero.
    """
    pts0 = as_points(points0)
    if batch < 1:
        raise ValueError(f"batch must be at least 1, got {batch}")
    d0 = kernels.pairwise_distances(pts0)
    graph = getattr(provider, "graph", None)
    total = 0.0
    for b in range(int(batch)):
        rng = rng_from(seed, b)
        t = 1 + int(rng.random() * schedule.num_steps)
        sigma = float(schedule.sigma[t])
        noised = pts0 + sigma * rng.standard_normal(pts0.shape)
        dists = kernels.pairwise_distances(noised)
        clean = gaussian_distance_score(dists, d0, sigma)
        if graph is not None:
            target = scatter_mean_shift_sparse(noised, graph, clean, dists=dists)
        else:
            n = pts0.shape[0]
            target = weighted_product(clean, noised, dists=dists) / (2.0 * (n - 1))
        predicted = provider_coordinate_field(provider, noised, dists, t)
        resid = predicted - target
        total += 0.5 * sigma * float(np.sum(resid * resid))
    return total / batch
