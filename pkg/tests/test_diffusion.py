"""Noise schedule, forward perturbation, analytic scores, and the toy
score model."""

import numpy as np
import pytest

import se3diff as sd
from se3diff.diffusion import (CleanCoordinateScore, GaussianScoreOracle,
                               NoiseSchedule, NoisyToyScore,
                               provider_coordinate_field, score_matching_loss)
from se3diff.errors import DegenerateDistanceError, NormalizationError

# Terminal noise levels of the sigmoid ramp, frozen. The 5000-step value
# lands a bit above 12, large enough to swamp unit-scale coordinates.
SIGMA_T_5000 = 12.168463279670389
SIGMA_T_100 = 0.3244517343310485


class TestSchedule:
    def test_terminal_values_frozen(self):
        assert sd.default_schedule(5000).sigma_terminal == pytest.approx(
            SIGMA_T_5000, abs=1e-12)
        assert sd.default_schedule(100).sigma_terminal == pytest.approx(
            SIGMA_T_100, abs=1e-12)

    def test_shape_and_monotonicity(self):
        sched = sd.default_schedule(500)
        assert sched.sigma.shape == (501,)
        assert sched.sigma[0] == 0.0
        assert np.all(np.diff(sched.sigma) > 0.0)

    @pytest.mark.parametrize("T", [2, 7, 100])
    def test_gains_telescope(self, T):
        sched = sd.default_schedule(T)
        total = sum(sched.g2(k) for k in range(1, T + 1))
        assert total == pytest.approx(sched.sigma_terminal ** 2, rel=1e-10)

    def test_minimum_two_steps(self):
        with pytest.raises(ValueError):
            sd.default_schedule(1)
        sched = sd.default_schedule(2)
        assert 0.0 < sched.sigma[1] < sched.sigma[2]
        assert np.all(np.isfinite(sched.sigma))

    def test_invalid_ladders_rejected(self):
        with pytest.raises(ValueError):
            NoiseSchedule(num_steps=2, sigma=np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            NoiseSchedule(num_steps=2, sigma=np.array([0.1, 0.5, 1.0]))
        with pytest.raises(ValueError):
            NoiseSchedule(num_steps=2, sigma=np.array([0.0, 1.0, 1.0]))

    def test_g2_range_checked(self):
        sched = sd.default_schedule(10)
        with pytest.raises(ValueError):
            sched.g2(0)
        with pytest.raises(ValueError):
            sched.g2(11)


class TestSubsample:
    def test_preserves_endpoints(self):
        full = sd.default_schedule(5000)
        sub = full.subsample(100)
        assert sub.num_steps == 100
        assert sub.sigma.shape == (101,)
        assert sub.sigma[0] == 0.0
        assert sub.sigma_terminal == full.sigma_terminal
        assert np.all(np.diff(sub.sigma) > 0.0)

    def test_identity_subsample(self):
        full = sd.default_schedule(50)
        same = full.subsample(50)
        assert np.array_equal(same.sigma, full.sigma)

    def test_single_step_subsample(self):
        sub = sd.default_schedule(10).subsample(1)
        assert np.array_equal(sub.sigma[[0, -1]],
                              sd.default_schedule(10).sigma[[0, -1]])

    def test_bad_sizes(self):
        full = sd.default_schedule(10)
        with pytest.raises(ValueError):
            full.subsample(0)
        with pytest.raises(ValueError):
            full.subsample(11)


class TestForwardPerturb:
    def test_step_zero_is_identity_copy(self):
        pts = np.random.default_rng(0).standard_normal((5, 3))
        sched = sd.default_schedule(10)
        out = sd.forward_perturb(pts, sched, 0, seed=3)
        assert np.array_equal(out, pts)
        assert out is not pts

    def test_deterministic_in_seed(self):
        pts = np.random.default_rng(1).standard_normal((5, 3))
        sched = sd.default_schedule(10)
        a = sd.forward_perturb(pts, sched, 7, seed=5)
        b = sd.forward_perturb(pts, sched, 7, seed=5)
        c = sd.forward_perturb(pts, sched, 7, seed=6)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_noise_magnitude_matches_sigma(self):
        # pool many draws: per-entry std must match sigma_k within 3
        # standard errors of the std estimate
        pts = np.zeros((2, 3))
        sched = sd.default_schedule(100)
        k = 100
        draws = np.concatenate([
            np.ravel(sd.forward_perturb(pts, sched, k, seed=s))
            for s in range(20000)])
        sig = float(sched.sigma[k])
        stderr = sig / np.sqrt(2 * draws.size)
        assert abs(draws.std() - sig) < 3 * stderr

    def test_step_out_of_range(self):
        sched = sd.default_schedule(5)
        pts = np.zeros((2, 3))
        with pytest.raises(ValueError):
            sd.forward_perturb(pts, sched, 6, seed=0)


class TestScores:
    def test_gaussian_hand_value(self):
        d = np.array([[0.0, 3.0], [3.0, 0.0]])
        d0 = np.array([[0.0, 2.0], [2.0, 0.0]])
        s = sd.gaussian_distance_score(d, d0, sigma=1.0)
        assert s[0, 1] == pytest.approx(-0.5, abs=1e-15)
        assert s[0, 0] == 0.0

    def test_gaussian_sigma_scaling(self):
        d = np.array([[0.0, 3.0], [3.0, 0.0]])
        d0 = np.array([[0.0, 2.0], [2.0, 0.0]])
        s1 = sd.gaussian_distance_score(d, d0, sigma=1.0)
        s2 = sd.gaussian_distance_score(d, d0, sigma=2.0)
        assert s2[0, 1] == pytest.approx(s1[0, 1] / 4.0, abs=1e-15)

    def test_gaussian_validation(self):
        d = np.zeros((2, 2))
        with pytest.raises(ValueError):
            sd.gaussian_distance_score(d, np.zeros((3, 3)), 1.0)
        with pytest.raises(ValueError):
            sd.gaussian_distance_score(d, d, 0.0)

    def test_repulsive_hand_value(self):
        d = np.array([[0.0, 2.0], [2.0, 0.0]])
        s = sd.mb_distance_score(d, d, sigma=1.0, a_t=1.0)
        assert s[0, 1] == pytest.approx(0.5, abs=1e-15)

    def test_repulsive_reduces_to_gaussian_at_zero(self):
        rng = np.random.default_rng(2)
        pts = rng.standard_normal((6, 3))
        d = sd.pairwise_distances(pts)
        d0 = sd.pairwise_distances(rng.standard_normal((6, 3)))
        assert np.array_equal(sd.mb_distance_score(d, d0, 0.7, a_t=0.0),
                              sd.gaussian_distance_score(d, d0, 0.7))

    def test_repulsive_rejects_degenerate(self):
        d = np.array([[0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(DegenerateDistanceError):
            sd.mb_distance_score(d, d, 1.0, a_t=1.0)


class TestToyScore:
    def _setup(self, seed=0, n=12):
        graph = sd.random_regular_graph(n, 4, seed)
        rng = np.random.default_rng(seed + 100)
        clean = rng.standard_normal((n, 3))
        d0 = sd.pairwise_distances(clean)
        noisy = clean + 0.5 * rng.standard_normal((n, 3))
        return graph, d0, noisy

    def test_unit_standard_deviation(self):
        graph, d0, noisy = self._setup()
        for delta in (0.0, 0.5, 2.0):
            out = sd.noisy_toy_coordinate_score(noisy, graph, d0, 0.8, delta, 7)
            assert abs(out.std() - 1.0) < 1e-12

    def test_zero_delta_equals_normalized_clean_field(self):
        graph, d0, noisy = self._setup(1)
        d = sd.pairwise_distances(noisy)
        score = sd.gaussian_distance_score(d, d0, 0.8)
        clean = sd.scatter_mean_shift_sparse(noisy, graph, score, dists=d)
        toy = sd.noisy_toy_coordinate_score(noisy, graph, d0, 0.8, 0.0, 123)
        assert np.array_equal(toy, clean / clean.std())

    def test_deterministic_in_seed(self):
        graph, d0, noisy = self._setup(2)
        a = sd.noisy_toy_coordinate_score(noisy, graph, d0, 0.8, 1.0, 5)
        b = sd.noisy_toy_coordinate_score(noisy, graph, d0, 0.8, 1.0, 5)
        c = sd.noisy_toy_coordinate_score(noisy, graph, d0, 0.8, 1.0, 6)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_zero_variance_raises(self):
        # evaluating at the clean configuration with no dither makes the
        # raw field identically zero, which cannot be normalized
        graph = sd.random_regular_graph(12, 4, 3)
        clean = np.random.default_rng(103).standard_normal((12, 3))
        d0 = sd.pairwise_distances(clean)
        with pytest.raises(NormalizationError):
            sd.noisy_toy_coordinate_score(clean, graph, d0, 0.8, 0.0, 1)


class TestProviders:
    def _base(self, n=10):
        graph = sd.random_regular_graph(n, 4, 3)
        clean = np.random.default_rng(4).standard_normal((n, 3))
        d0 = sd.pairwise_distances(clean)
        sched = sd.default_schedule(50)
        return graph, clean, d0, sched

    def test_oracle_kinds(self):
        graph, clean, d0, sched = self._base()
        oracle = GaussianScoreOracle(d0, sched, graph=graph)
        assert oracle.kind == "distance"
        assert CleanCoordinateScore(d0, sched, graph).kind == "coordinate"
        assert NoisyToyScore(graph, d0, sched, 0.5, 0).kind == "coordinate"

    def test_oracle_matches_direct_score(self):
        graph, clean, d0, sched = self._base()
        noisy = clean + 0.3
        d = sd.pairwise_distances(noisy)
        oracle = GaussianScoreOracle(d0, sched)
        out = oracle(noisy, d, 20)
        expect = sd.gaussian_distance_score(d, d0, float(sched.sigma[20]))
        assert np.array_equal(out, expect)

    def test_oracle_repulsion_path(self):
        graph, clean, d0, sched = self._base()
        d = sd.pairwise_distances(clean + 0.3)
        oracle = GaussianScoreOracle(d0, sched, a_t=0.5)
        expect = sd.mb_distance_score(d, d0, float(sched.sigma[20]), a_t=0.5)
        assert np.array_equal(oracle(clean + 0.3, d, 20), expect)

    def test_field_dense_path(self):
        graph, clean, d0, sched = self._base()
        noisy = clean + 0.2
        d = sd.pairwise_distances(noisy)
        oracle = GaussianScoreOracle(d0, sched)  # no graph
        field = provider_coordinate_field(oracle, noisy, d, 10)
        score = sd.gaussian_distance_score(d, d0, float(sched.sigma[10]))
        n = clean.shape[0]
        expect = sd.weighted_product(score, noisy, dists=d) / (2.0 * (n - 1))
        assert np.abs(field - expect).max() < 1e-14

    def test_field_graph_path(self):
        graph, clean, d0, sched = self._base()
        noisy = clean + 0.2
        d = sd.pairwise_distances(noisy)
        oracle = GaussianScoreOracle(d0, sched, graph=graph)
        field = provider_coordinate_field(oracle, noisy, d, 10)
        score = sd.gaussian_distance_score(d, d0, float(sched.sigma[10]))
        expect = sd.scatter_mean_shift_sparse(noisy, graph, score, dists=d)
        assert np.abs(field - expect).max() < 1e-14

    def test_field_coordinate_passthrough(self):
        graph, clean, d0, sched = self._base()
        provider = CleanCoordinateScore(d0, sched, graph)
        d = sd.pairwise_distances(clean + 0.2)
        direct = provider(clean + 0.2, d, 5)
        routed = provider_coordinate_field(provider, clean + 0.2, d, 5)
        assert np.array_equal(direct, routed)

    def test_toy_per_step_noise_differs(self):
        graph, clean, d0, sched = self._base()
        toy = NoisyToyScore(graph, d0, sched, 1.0, 9)
        d = sd.pairwise_distances(clean + 0.2)
        a = toy(clean + 0.2, d, 5)
        b = toy(clean + 0.2, d, 6)
        assert not np.array_equal(a, b)


class TestScoreMatchingLoss:
    def _base(self):
        graph = sd.random_regular_graph(10, 4, 1)
        clean = np.random.default_rng(5).standard_normal((10, 3))
        sched = sd.default_schedule(50)
        d0 = sd.pairwise_distances(clean)
        return graph, clean, d0, sched

    def test_exact_provider_gives_zero(self):
        graph, clean, d0, sched = self._base()
        provider = CleanCoordinateScore(d0, sched, graph)
        assert score_matching_loss(provider, clean, sched, batch=6, seed=2) == 0.0

    def test_constant_offset_scales_quadratically(self):
        graph, clean, d0, sched = self._base()

        class Offset:
            kind = "coordinate"

            def __init__(self, c):
                self.c = c
                self.graph = graph
                self.inner = CleanCoordinateScore(d0, sched, graph)

            def __call__(self, pts, dists, k):
                return self.inner(pts, dists, k) + self.c

        l1 = score_matching_loss(Offset(0.1), clean, sched, batch=4, seed=3)
        l2 = score_matching_loss(Offset(0.2), clean, sched, batch=4, seed=3)
        assert l1 > 0.0
        assert l2 == pytest.approx(4.0 * l1, rel=1e-12)

    def test_noisier_toy_scores_worse(self):
        graph, clean, d0, sched = self._base()
        quiet = NoisyToyScore(graph, d0, sched, 0.0, 11)
        loud = NoisyToyScore(graph, d0, sched, 0.5, 11)
        lq = score_matching_loss(quiet, clean, sched, batch=8, seed=4)
        ll = score_matching_loss(loud, clean, sched, batch=8, seed=4)
        assert ll > lq

    def test_batch_validation(self):
        graph, clean, d0, sched = self._base()
        provider = CleanCoordinateScore(d0, sched, graph)
        with pytest.raises(ValueError):
            score_matching_loss(provider, clean, sched, batch=0, seed=0)
