"""Batch experiments: corrector sweeps, size/degree ablations, and
Monte Carlo verification of the increment statistics.

Chains inside a sweep derive their per-chain randomness (graph, clean
points, provider noise, prior draw) from (grid.seed, channel, chain),
so the same chain index sees the same problem instance in every cell.
Cell results therefore differ only through (delta, corrector), which is
what the sweep is meant to isolate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .diffusion import NoiseSchedule, NoisyToyScore, default_schedule
from .errors import DivergenceError
from .geometry import random_regular_graph
from .increments import laguerre_drift, mc_increment_stats
from .samplers import METHOD_ODE_SIMPLE, SamplerConfig, init_from_prior, run_chain
from .util import derive_seed, pmap, rng_from

# Channel tags for per-chain seed derivation.
_CH_GRAPH = 1
_CH_CLEAN = 2
_CH_PROVIDER = 3
_CH_PRIOR = 4
_CH_CHAIN = 5

# The reference ladder chains are subsampled from. Matches the length
# used to validate the default schedule's terminal noise level.
_REFERENCE_STEPS = 5000


@dataclass
class SweepGrid:
    """Grid definition shared by the sweep and ablation experiments."""
    deltas: Sequence[float] = (0.0,)
    correctors: Sequence[float] = (1.0,)
    n_chains: int = 100
    steps: int = 100
    threshold: float = 0.5
    quantile: float = 0.9
    seed: int = 0

    def __post_init__(self):
        self.deltas = tuple(float(d) for d in self.deltas)
        self.correctors = tuple(float(k) for k in self.correctors)
        if not self.deltas or not self.correctors:
            raise ValueError("deltas and correctors must be non-empty")
        if min(self.correctors) < 1.0:
            raise ValueError("correctors must be at least 1")
        if self.n_chains < 1 or self.steps < 1:
            raise ValueError("n_chains and steps must be positive")
        if not 0.0 < self.quantile <= 1.0:
            raise ValueError(f"quantile must be in (0, 1], got {self.quantile}")


@dataclass
class SweepCell:
    """Aggregate over the chains of one (delta, corrector) cell.

    ``converged_fraction`` counts chains whose final distance error is
    below the threshold. ``convergence_time`` is the fraction of the
    chain already run when the per-step converged fraction first reaches
    the grid quantile (0 = immediately, 1 = at the very end, None =
    never). ``diverged`` is set when more than half the chains tripped
    the divergence guard.
    """
    delta: float
    k: float
    converged_fraction: float
    convergence_time: float | None
    diverged: bool
    n_diverged: int = 0
    n_chains: int = 0

    def row(self) -> tuple:
        return (self.delta, self.k, self.converged_fraction,
                self.convergence_time, self.diverged)


SWEEP_HEADER = ["delta", "k", "converged_fraction", "convergence_time", "diverged"]


@dataclass
class FlowCurve:
    """Mean and spread of the distance error along the chain, averaged
    over the non-diverged chains of one ablation setting."""
    label: str
    steps: np.ndarray = field(repr=False)
    flow_mean: np.ndarray = field(repr=False)
    flow_std: np.ndarray = field(repr=False)
    n_chains_used: int = 0
    final_converged_fraction: float = 0.0

    def rows(self) -> list[tuple]:
        return [(self.label, int(t), float(m), float(s))
                for t, m, s in zip(self.steps, self.flow_mean, self.flow_std)]


FLOW_HEADER = ["label", "step", "flow_mean", "flow_std"]


def sweep_schedule(steps: int) -> NoiseSchedule:
    """Noise ladder for sweep chains: the reference 5000-step ladder
    subsampled to the requested length, preserving the terminal sigma."""
    return default_schedule(_REFERENCE_STEPS).subsample(steps)


def _chain_errors(grid: SweepGrid, schedule: NoiseSchedule, n: int, degree: int,
                  delta: float, corrector: float, chain: int):
    """Distance-error trace of one chain, or None if it diverged."""
    graph = random_regular_graph(n, degree, derive_seed(grid.seed, _CH_GRAPH, chain))
    clean = rng_from(grid.seed, _CH_CLEAN, chain).standard_normal((n, 3))
    d0 = kernels.pairwise_distances(clean)
    provider = NoisyToyScore(graph, d0, schedule, delta,
                             derive_seed(grid.seed, _CH_PROVIDER, chain))
    init = init_from_prior(n, schedule, derive_seed(grid.seed, _CH_PRIOR, chain))
    config = SamplerConfig(method=METHOD_ODE_SIMPLE, steps=grid.steps,
                           corrector=corrector,
                           seed=derive_seed(grid.seed, _CH_CHAIN, chain),
                           convergence_threshold=grid.threshold,
                           record_every=max(grid.steps, 1))
    try:
        result = run_chain(init, config, schedule, provider, d0=d0)
    except DivergenceError:
        return None
    return result.distance_errors


def _summarize_cell(grid: SweepGrid, delta: float, corrector: float,
                    traces: list) -> SweepCell:
    steps = grid.steps
    below = np.zeros(steps + 1, dtype=np.int64)
    final_hits = 0
    n_div = 0
    for errors in traces:
        if errors is None:
            n_div += 1
            continue
        below += errors < grid.threshold
        if errors[0] < grid.threshold:
            final_hits += 1
    frac = below / grid.n_chains
    conv_time = None
    for t in range(steps, -1, -1):
        if frac[t] >= grid.quantile:
            conv_time = 1.0 - t / steps
            break
    return SweepCell(delta=delta, k=corrector,
                     converged_fraction=final_hits / grid.n_chains,
                     convergence_time=conv_time,
                     diverged=n_div > grid.n_chains / 2,
                     n_diverged=n_div, n_chains=grid.n_chains)


def corrector_sweep(grid: SweepGrid, n: int = 20, degree: int = 4,
                    jobs: int = 1) -> list[SweepCell]:
    """Convergence of the simple reverse ODE across (delta, corrector).

    Each cell runs grid.n_chains chains of the noisy toy model on fresh
    random regular graphs and reports how many end within the distance
    error threshold. Cells are listed delta-major, corrector-minor.
    """
    schedule = sweep_schedule(grid.steps)
    cells = [(d, k) for d in grid.deltas for k in grid.correctors]

    def one(cell):
        delta, corrector = cell
        traces = [_chain_errors(grid, schedule, n, degree, delta, corrector, c)
                  for c in range(grid.n_chains)]
        return _summarize_cell(grid, delta, corrector, traces)

    return pmap(one, cells, jobs)


def _flow_curve(grid: SweepGrid, schedule: NoiseSchedule, label: str, n: int,
                degree: int, delta: float, corrector: float) -> FlowCurve:
    traces = [_chain_errors(grid, schedule, n, degree, delta, corrector, c)
              for c in range(grid.n_chains)]
    kept = [tr for tr in traces if tr is not None]
    steps_axis = np.arange(grid.steps, -1, -1)
    if kept:
        stack = np.stack(kept)[:, ::-1]  # reorder columns to match steps_axis
        mean = stack.mean(axis=0)
        std = stack.std(axis=0)
        final_frac = float(np.mean(np.stack(kept)[:, 0] < grid.threshold))
    else:
        mean = np.full(grid.steps + 1, np.nan)
        std = np.full(grid.steps + 1, np.nan)
        final_frac = 0.0
    return FlowCurve(label=label, steps=steps_axis, flow_mean=mean,
                     flow_std=std, n_chains_used=len(kept),
                     final_converged_fraction=final_frac)


def ablation_nodes(node_counts: Sequence[int], fixed_k: float, grid: SweepGrid,
                   delta: float = 0.0, degree: int = 4,
                   jobs: int = 1) -> list[FlowCurve]:
    """Distance-error flow at a fixed corrector as the node count grows.

    All curves share the step axis, so they can be overlaid directly;
    the point of the experiment is that the flow barely moves with n.
    """
    schedule = sweep_schedule(grid.steps)
    counts = [int(n) for n in node_counts]
    if not counts:
        raise ValueError("node_counts is empty")

    def one(n: int) -> FlowCurve:
        return _flow_curve(grid, schedule, f"n={n}", n, degree, delta, fixed_k)

    return pmap(one, counts, jobs)


def ablation_degree(degrees: Sequence[int], n: int, fixed_k: float,
                    grid: SweepGrid, delta: float = 0.0,
                    jobs: int = 1) -> list[FlowCurve]:
    """Distance-error flow at a fixed corrector as the graph degree grows."""
    schedule = sweep_schedule(grid.steps)
    degs = [int(d) for d in degrees]
    if not degs:
        raise ValueError("degrees is empty")

    def one(degree: int) -> FlowCurve:
        return _flow_curve(grid, schedule, f"degree={degree}", n, degree,
                           delta, fixed_k)

    return pmap(one, degs, jobs)


@dataclass
class StatsRow:
    """One (tau, d) cell of the increment statistics verification.

    ``predicted_drift`` is the -3 tau G^2 / d reference the Monte Carlo
    mean is compared against; ``laguerre`` is the closed-form mean from
    the noncentral chi expectation. The z columns are the deviations in
    units of the Monte Carlo standard error.
    """
    tau: float
    G: float
    d: float
    mean_drift: float
    predicted_drift: float
    stderr: float
    second_moment: float
    predicted_second: float
    stderr2: float
    n: int
    laguerre: float
    z_mean: float
    z_second: float
    z_laguerre: float

    def row(self) -> tuple:
        return (self.tau, self.G, self.d, self.mean_drift, self.predicted_drift,
                self.stderr, self.second_moment, self.predicted_second,
                self.stderr2, self.n, self.laguerre, self.z_mean,
                self.z_second, self.z_laguerre)


STATS_HEADER = ["tau", "G", "d", "mean_drift", "predicted_drift", "stderr",
                "second_moment", "predicted_second", "stderr2", "n",
                "laguerre", "z_mean", "z_second", "z_laguerre"]


def stats_verification(tau_list: Sequence[float], G: float,
                       d_list: Sequence[float], n_samples: int, seed: int,
                       jobs: int = 1) -> list[StatsRow]:
    """Monte Carlo increment statistics against their predictions.

    Rows are ordered tau-major, d-minor. Every cell gets an independent
    derived seed, so adding cells never perturbs existing ones.
    """
    taus = [float(t) for t in tau_list]
    ds = [float(d) for d in d_list]
    if not taus or not ds:
        raise ValueError("tau_list and d_list must be non-empty")
    G = float(G)
    cells = [(i, tau, d) for i, (tau, d) in
             enumerate((t, d) for t in taus for d in ds)]

    def one(cell) -> StatsRow:
        i, tau, d = cell
        stats = mc_increment_stats(np.array([d, 0.0, 0.0]), tau, G, n_samples,
                                   derive_seed(seed, i))
        predicted = -3.0 * tau * G * G / d
        predicted2 = 2.0 * tau * G * G
        lag = laguerre_drift(d, tau, G)
        z_mean = ((stats.mean_drift - predicted) / stats.stderr_mean
                  if stats.stderr_mean > 0.0 else 0.0)
        z_second = ((stats.second_moment - predicted2) / stats.stderr_second
                    if stats.stderr_second > 0.0 else 0.0)
        z_lag = ((stats.mean_drift - lag) / stats.stderr_mean
                 if stats.stderr_mean > 0.0 else 0.0)
        return StatsRow(tau=tau, G=G, d=d, mean_drift=stats.mean_drift,
                        predicted_drift=predicted, stderr=stats.stderr_mean,
                        second_moment=stats.second_moment,
                        predicted_second=predicted2,
                        stderr2=stats.stderr_second, n=stats.n_samples,
                        laguerre=lag, z_mean=z_mean, z_second=z_second,
                        z_laguerre=z_lag)

    return pmap(one, cells, jobs)
