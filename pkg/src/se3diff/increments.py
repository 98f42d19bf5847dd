"""Distance increments under one forward noise kick, exactly and in
expectation.

Setting: a pair at separation vector ``diff`` receives isotropic noise
m = sqrt(2 tau) * G * z on its relative coordinate. The distance moves
from ||diff|| to ||diff + m||. ``exact_distance_increment`` evaluates
one realization in a cancellation-free form; ``mc_increment_stats``
estimates the mean drift and second moment by Monte Carlo; and
``laguerre_drift`` gives the closed-form mean via the noncentral chi
expectation in three dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateDistanceError
from .geometry import EPS_DEGENERATE
from .util import rng_from

# Samples per Monte Carlo block. Accumulating fixed-size blocks with
# per-block seeds, reduced in index order, makes the estimate identical
# however the blocks are scheduled.
MC_BLOCK = 65536


def _as_vec3(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {np.asarray(x).shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def exact_distance_increment(diff, z, tau: float, G: float) -> float:
    """Exact distance change ||diff + sqrt(2 tau) G z|| - ||diff||.

    Uses (2 m.diff + ||m||^2) / (||diff + m|| + ||diff||) instead of the
    difference of norms, which stays accurate when the kick is orders of
    magnitude smaller than the separation.
    """
    d = _as_vec3(diff, "diff")
    zv = _as_vec3(z, "z")
    if tau < 0.0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    a = float(np.linalg.norm(d))
    if a < EPS_DEGENERATE:
        raise DegenerateDistanceError(
            f"separation {a:.3e} is degenerate; the increment direction is undefined")
    m = (math.sqrt(2.0 * tau) * G) * zv
    return float(kernels.distance_increments(d, m[None, :])[0])


@dataclass
class IncrementStats:
    """Monte Carlo summary of the backward increment d_t - d_{t+tau}."""
    mean_drift: float
    second_moment: float
    stderr_mean: float
    stderr_second: float
    n_samples: int


def mc_increment_stats(diff, tau: float, G: float, n_samples: int,
                       seed: int) -> IncrementStats:
    """Estimate mean and second moment of d_t - d_{t+tau} over the noise.

    Note the sign: the statistic is the *backward* increment, positive
    when noising pushes the pair outward. Samples are drawn in fixed
    blocks of ``MC_BLOCK`` with seeds derived per block, so the result
    depends only on (diff, tau, G, n_samples, seed).
    """
    d = _as_vec3(diff, "diff")
    a = float(np.linalg.norm(d))
    if a < EPS_DEGENERATE:
        raise DegenerateDistanceError(
            f"separation {a:.3e} is degenerate; increments are undefined")
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    n_samples = int(n_samples)
    if n_samples < 100:
        raise ValueError(f"need at least 100 samples, got {n_samples}")

    scale = math.sqrt(2.0 * tau) * G
    s1 = s2 = s4 = 0.0
    remaining = n_samples
    block_index = 0
    while remaining > 0:
        b = min(MC_BLOCK, remaining)
        rng = rng_from(seed, block_index)
        m = scale * rng.standard_normal((b, 3))
        inc = kernels.distance_increments(d, m)
        back = -inc
        s1 += float(back.sum())
        sq = back * back
        s2 += float(sq.sum())
        s4 += float((sq * sq).sum())
        remaining -= b
        block_index += 1

    mean = s1 / n_samples
    second = s2 / n_samples
    var_mean = max(s2 / n_samples - mean * mean, 0.0)
    var_second = max(s4 / n_samples - second * second, 0.0)
    bessel = n_samples / max(n_samples - 1, 1)
    stderr_mean = math.sqrt(var_mean * bessel / n_samples)
    stderr_second = math.sqrt(var_second * bessel / n_samples)
    return IncrementStats(mean_drift=mean, second_moment=second,
                          stderr_mean=stderr_mean, stderr_second=stderr_second,
                          n_samples=n_samples)


def laguerre_drift(diff_norm: float, tau: float, G: float) -> float:
    """Closed-form mean of d_t - d_{t+tau}: a - E||X|| with X normal
    around the separation.

    With a = diff_norm and s = sqrt(2 tau) G, the 3D noncentral chi
    expectation is

        E||X|| = s sqrt(2/pi) exp(-a^2 / (2 s^2))
                 + (a + s^2 / a) erf(a / (sqrt(2) s))

    (for a > 0; for a = 0 it is 2 s sqrt(2 / pi)). Expanding for small
    s gives E||X|| = a + s^2 / a + O(s^4), so the drift approaches
    -2 tau G^2 / a as tau shrinks.
    """
    a = float(diff_norm)
    if a < 0.0:
        raise ValueError(f"diff_norm must be nonnegative, got {a}")
    if tau < 0.0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    s = math.sqrt(2.0 * tau) * abs(float(G))
    if s == 0.0:
        return 0.0
    if a == 0.0:
        return -2.0 * s * math.sqrt(2.0 / math.pi)
    expected = s * math.sqrt(2.0 / math.pi) * math.exp(-a * a / (2.0 * s * s)) \
        + (a + s * s / a) * math.erf(a / (math.sqrt(2.0) * s))
    return a - expected
