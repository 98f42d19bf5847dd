"""Single-edge metric MDS: the scatter-mean update, its error bound,
and the descent / classic-MDS baselines it is compared against.

The scenario throughout: a point set X with distance matrix d, and a
target distance matrix t equal to d except one edge lengthened by
delta. ``scatter_mean_shift`` solves this approximately in one step;
``stress_bound`` bounds its residual stress; ``smoothed_gd_mds`` and
``classic_mds`` are the iterative and spectral baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DivergenceError
from .geometry import as_pair_matrix, as_points, scatter_mean_shift
from .spectral import classic_mds
from .util import derive_seed, pmap, rng_from

# Armijo line search constants for the smoothed descent.
_ARMIJO_C = 1e-4
_MAX_HALVINGS = 30


def mds_objective(points, target) -> float:
    """Raw stress: sum over unordered pairs of (||x_i - x_j|| - t_ij)^2."""
    pts = as_points(points)
    t = as_pair_matrix(target, pts.shape[0], "target")
    return float(kernels.mds_objective(pts, t))


def stress_bound(n: int, delta: float) -> float:
    """Guaranteed stress ceiling for the scatter-mean update after a
    single-edge perturbation of size delta on n points.

    Equals delta^2 * (2 n^2 - 7 n + 6) / (2 (n - 1)^2); zero at n = 2,
    where the update is exact, and approaching delta^2 from below as n
    grows.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"bound needs at least 2 points, got n={n}")
    num = 2.0 * n * n - 7.0 * n + 6.0
    den = 2.0 * (n - 1.0) ** 2
    return float(delta) ** 2 * num / den


def smoothed_gd_mds(init, target, eps: float = 1e-8, step: float = 0.1,
                    iters: int = 500, grad_tol: float = 1e-10,
                    return_history: bool = False):
    """Minimize the smoothed stress by gradient descent with backtracking.

    The smoothed stress replaces each ||x_i - x_j|| with
    sqrt(||x_i - x_j||^2 + eps) so the objective is differentiable even
    when points collide. Steps start at ``step`` and halve until the
    Armijo condition holds; the loop stops early when the gradient norm
    drops below ``grad_tol`` or no acceptable step exists.

    Returns the final coordinates, or (coordinates, history of accepted
    objective values) when ``return_history`` is set.
    """
    pts = as_points(init).copy()
    t = as_pair_matrix(target, pts.shape[0], "target")
    if eps <= 0.0:
        raise ValueError(f"smoothing eps must be positive, got {eps}")
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")

    f = float(kernels.smoothed_objective(pts, t, eps))
    history = [f]
    for _ in range(int(iters)):
        grad = kernels.smoothed_gradient(pts, t, eps)
        gsq = float(np.sum(grad * grad))
        if np.sqrt(gsq) < grad_tol:
            break
        a = step
        accepted = False
        for _ in range(_MAX_HALVINGS):
            cand = pts - a * grad
            fc = float(kernels.smoothed_objective(cand, t, eps))
            if np.isfinite(fc) and fc <= f - _ARMIJO_C * a * gsq:
                accepted = True
                break
            a *= 0.5
        if not accepted:
            break
        pts, f = cand, fc
        history.append(f)
    if not np.all(np.isfinite(pts)):
        raise DivergenceError("gradient descent produced non-finite coordinates")
    if return_history:
        return pts, history
    return pts


@dataclass
class MdsComparisonRecord:
    """One trial of the single-edge comparison experiment."""
    n: int
    delta: float
    f_approx: float
    f_gd: float
    f_cmds: float
    bound: float
    seed: int

    def row(self) -> tuple:
        return (self.n, self.delta, self.f_approx, self.f_gd,
                self.f_cmds, self.bound, self.seed)


MDS_COMPARISON_HEADER = ["n", "delta", "f_approx", "f_gd", "f_cmds", "bound", "seed"]

BOUND_CHECK_HEADER = ["n", "delta", "f_approx", "bound", "seed"]


def _draw_instance(trial_seed: int, n_choices: np.ndarray,
                   delta_range: tuple[float, float]):
    """Random instance: standard normal points, one random edge
    lengthened by a uniform delta.

    The first two draws are plain uniforms mapped to (n, delta) by hand.
    That keeps the stream consumption identical whatever the ranges are,
    so a trial replayed with its ranges collapsed to the recorded values
    regenerates the same points.
    """
    rng = np.random.default_rng(trial_seed)
    n = int(n_choices[int(rng.random() * len(n_choices))])
    lo, hi = delta_range
    delta = float(lo + rng.random() * (hi - lo))
    pts = rng.standard_normal((n, 3))
    d = kernels.pairwise_distances(pts)
    u, v = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
    target = d.copy()
    target[u, v] += delta
    target[v, u] += delta
    alpha = np.zeros((n, n))
    alpha[u, v] = delta
    alpha[v, u] = delta
    return n, delta, pts, d, target, alpha


def _normalize_ranges(n_range, delta_range, trials):
    n_choices = np.asarray(list(n_range), dtype=np.int64)
    if n_choices.size == 0:
        raise ValueError("n_range is empty")
    if n_choices.min() < 2:
        raise ValueError("n_range contains sizes below 2")
    lo, hi = float(delta_range[0]), float(delta_range[1])
    if not (hi >= lo):
        raise ValueError(f"bad delta range ({lo}, {hi})")
    if int(trials) < 1:
        raise ValueError("need at least one trial")
    return n_choices, (lo, hi), int(trials)


def run_bound_check(n_range, delta_range, trials: int, seed: int,
                    jobs: int = 1) -> list[MdsComparisonRecord]:
    """Scatter-mean stress versus its bound on random instances.

    Skips the two baselines, so large trial counts stay cheap. The
    returned records have f_gd and f_cmds set to NaN.
    """
    n_choices, drange, trials = _normalize_ranges(n_range, delta_range, trials)

    def one(i: int) -> MdsComparisonRecord:
        tseed = derive_seed(seed, i)
        n, delta, pts, d, target, alpha = _draw_instance(tseed, n_choices, drange)
        shifted = scatter_mean_shift(pts, alpha, dists=d)
        f_approx = mds_objective(shifted, target)
        return MdsComparisonRecord(n=n, delta=delta, f_approx=f_approx,
                                   f_gd=float("nan"), f_cmds=float("nan"),
                                   bound=stress_bound(n, delta), seed=tseed)

    return pmap(one, range(trials), jobs)


def run_mds_comparison(n_range, delta_range, trials: int, seed: int,
                       jobs: int = 1, gd_eps: float = 1e-12,
                       gd_iters: int = 500) -> list[MdsComparisonRecord]:
    """Full three-way comparison on random single-edge instances.

    Per trial: scatter-mean stress, stress after polishing the
    scatter-mean output with smoothed gradient descent, and classic MDS
    stress on the target matrix. The descent starts from the
    scatter-mean output, so its stress can only improve on f_approx
    (up to the tiny smoothing slack, hence the small default gd_eps).
    A descent that diverges is recorded as infinite rather than raised.
    """
    n_choices, drange, trials = _normalize_ranges(n_range, delta_range, trials)

    def one(i: int) -> MdsComparisonRecord:
        tseed = derive_seed(seed, i)
        n, delta, pts, d, target, alpha = _draw_instance(tseed, n_choices, drange)
        shifted = scatter_mean_shift(pts, alpha, dists=d)
        f_approx = mds_objective(shifted, target)
        try:
            polished = smoothed_gd_mds(shifted, target, eps=gd_eps, iters=gd_iters)
            f_gd = mds_objective(polished, target)
        except DivergenceError:
            f_gd = float("inf")
        f_cmds = mds_objective(classic_mds(target), target)
        return MdsComparisonRecord(n=n, delta=delta, f_approx=f_approx,
                                   f_gd=f_gd, f_cmds=f_cmds,
                                   bound=stress_bound(n, delta), seed=tseed)

    return pmap(one, range(trials), jobs)


def replay_comparison_trial(record: MdsComparisonRecord,
                            gd_eps: float = 1e-12) -> MdsComparisonRecord:
    """Re-run a single recorded trial from its stored seed.

    The stored per-trial seed fully determines the instance, so the
    replay must reproduce the record's numbers exactly.
    """
    n_choices = np.asarray([record.n], dtype=np.int64)
    drange = (record.delta, record.delta)
    n, delta, pts, d, target, alpha = _draw_instance(record.seed, n_choices, drange)
    shifted = scatter_mean_shift(pts, alpha, dists=d)
    f_approx = mds_objective(shifted, target)
    if np.isnan(record.f_gd):
        f_gd, f_cmds = float("nan"), float("nan")
    else:
        polished = smoothed_gd_mds(shifted, target, eps=gd_eps)
        f_gd = mds_objective(polished, target)
        f_cmds = mds_objective(classic_mds(target), target)
    return MdsComparisonRecord(n=n, delta=delta, f_approx=f_approx, f_gd=f_gd,
                               f_cmds=f_cmds, bound=stress_bound(n, delta),
                               seed=record.seed)
