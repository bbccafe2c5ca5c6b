"""Tests for Monte Carlo averages and the concentration interval baselines."""

import math
import warnings

import numpy as np
import pytest
from scipy.stats import norm

from src.conformal.scorers import ScoreMatrix
from src.errors import DataError, DomainError
from src.set_size.baselines import (
    ScoreDistributionSampler,
    ScoreMatrixSampler,
    SizeSampleSet,
    bernstein_interval,
    clt_interval,
    hoeffding_interval,
    mc_average,
    monte_carlo_sizes,
    same_data_mc,
)
from src.set_size.estimators import point_estimate_known, point_estimate_unknown
from src.set_size.factors import FactorSpec
from src.synthetic.beta_binomial import BetaBinomialScoreSampler, SyntheticConfig, sample_scores, theoretical_size


def _constant_sampler(value):
    return ScoreDistributionSampler(lambda rng, size: np.full(size, value), FactorSpec.l1(), 0.0)


class TestSizeSampleSet:

    def test_statistics(self):
        samples = SizeSampleSet([1.0, 2.0, 3.0, 4.0])
        assert len(samples) == 4
        assert samples.mean == 2.5
        assert samples.std == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
        assert samples.standard_error == pytest.approx(samples.std / 2.0)

    def test_single_size_has_zero_spread(self):
        assert SizeSampleSet([3.0]).std == 0.0

    def test_infinite_sizes(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            samples = SizeSampleSet([1.0, math.inf, math.inf])
            assert samples.mean == math.inf
            assert samples.std == math.inf
            assert samples.standard_error == math.inf
        with pytest.raises(DataError):
            clt_interval(samples, 0.1)

    def test_validation(self):
        with pytest.raises(DataError):
            SizeSampleSet([1.0, -0.5])
        with pytest.raises(DataError):
            SizeSampleSet([1.0, 3.0], bound=2.0)


class TestMonteCarlo:

    def test_degenerate_scores(self):
        # Every threshold equals c, the L1 set is [M(x) - c, M(x) + c]
        average = mc_average(_constant_sampler(1.75), n=10, alpha=0.2, runs=25, seed=0)
        assert average.mean == pytest.approx(3.5)
        assert average.standard_error == 0.0

    def test_infinite_threshold(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            average = mc_average(_constant_sampler(1.0), n=3, alpha=0.1, runs=5, seed=0)
        assert average.mean == math.inf
        assert average.standard_error == math.inf

    def test_deterministic_given_seed(self):
        sampler = ScoreDistributionSampler(lambda rng, size: rng.exponential(1.0, size), FactorSpec.l1(), 0.0)
        first = mc_average(sampler, 20, 0.1, 50, seed=7)
        second = mc_average(sampler, 20, 0.1, 50, seed=np.random.SeedSequence(7))
        np.testing.assert_array_equal(first.samples.sizes, second.samples.sizes)

    def test_uniform_scores_match_closed_form(self):
        # Uniform scores: the threshold is a Beta(n_alpha + 1, n - n_alpha) order statistic
        sampler = ScoreDistributionSampler(lambda rng, size: rng.random(size), FactorSpec.l1(), 0.0)
        n, alpha = 19, 0.1
        average = mc_average(sampler, n, alpha, 4000, seed=2)
        expected = 2.0 * 18 / 20
        assert abs(average.mean - expected) <= 4 * average.standard_error

    def test_one_size_per_seed(self):
        seeds = np.random.SeedSequence(1).spawn(6)
        assert len(monte_carlo_sizes(_constant_sampler(1.0), 4, 0.5, seeds)) == 6

    def test_runs_must_be_positive(self):
        with pytest.raises(DomainError):
            mc_average(_constant_sampler(1.0), 4, 0.5, 0, seed=0)


class TestSameDataMonteCarlo:

    def test_two_points(self):
        matrix = ScoreMatrix([[0.2, 0.7], [0.2, 0.7]], ("a", "b"), [1.0, 1.0], [0.5, 0.5])
        samples = same_data_mc(matrix, 0.5, seed=0)
        np.testing.assert_array_equal(samples.sizes, [1.0])
        assert samples.bound == 2.0

    def test_explicit_split(self):
        rng = np.random.default_rng(4)
        scores = rng.random((12, 3))
        matrix = ScoreMatrix(scores, (0, 1, 2), [1.0, 1.0, 1.0], scores[:, 0])
        assert len(same_data_mc(matrix, 0.2, seed=1, n=9)) == 3
        assert len(same_data_mc(matrix, 0.2, seed=1, n=40)) == 6
        np.testing.assert_array_equal(same_data_mc(matrix, 0.2, seed=5).sizes,
                                      same_data_mc(matrix, 0.2, seed=5).sizes)

    def test_needs_two_points(self):
        matrix = ScoreMatrix([[0.1]], ("a",), [1.0], [0.1])
        with pytest.raises(DataError):
            same_data_mc(matrix, 0.1, seed=0)


class TestIntervals:

    def test_hoeffding_half_width(self):
        samples = SizeSampleSet(np.ones(1000), bound=2.0)
        interval = hoeffding_interval(samples, 0.1)
        half_width = 2.0 * math.sqrt(math.log(20.0) / 2000.0)
        assert half_width == pytest.approx(0.0774, abs=1e-4)
        assert interval.raw_upper - 1.0 == pytest.approx(half_width)
        assert interval.lower == pytest.approx(1.0 - half_width)
        assert not interval.heuristic

    def test_bernstein_constant_sizes(self):
        samples = SizeSampleSet(np.full(500, 1.0), bound=4.0)
        interval = bernstein_interval(samples, 0.05)
        assert interval.raw_upper - 1.0 == pytest.approx(3.0 * 4.0 * math.log(60.0) / 500)
        assert interval.heuristic

    def test_clt_unit_z(self):
        sizes = np.arange(100, dtype=float)
        samples = SizeSampleSet(sizes)
        gamma = 2.0 * norm.sf(1.0)
        interval = clt_interval(samples, gamma)
        assert interval.raw_upper - samples.mean == pytest.approx(samples.std / 10.0, rel=1e-7)
        assert interval.upper == interval.raw_upper
        assert interval.method == "clt"

    def test_clipping_keeps_raw_values(self):
        samples = SizeSampleSet(np.zeros(10), bound=1.0)
        interval = hoeffding_interval(samples, 0.1)
        assert interval.lower == 0.0
        assert interval.raw_lower < 0.0
        assert interval.upper == pytest.approx(interval.raw_upper)

    def test_upper_clipped_to_bound(self):
        samples = SizeSampleSet(np.full(3, 2.0), bound=2.0)
        interval = hoeffding_interval(samples, 0.1)
        assert interval.upper == 2.0
        assert interval.raw_upper > 2.0

    def test_bound_required(self):
        samples = SizeSampleSet([1.0, 2.0])
        with pytest.raises(DomainError):
            hoeffding_interval(samples, 0.1)
        with pytest.raises(DomainError):
            bernstein_interval(samples, 0.1)

    def test_sample_size_requirements(self):
        with pytest.raises(DataError):
            clt_interval(SizeSampleSet([1.0]), 0.1)
        with pytest.raises(DataError):
            bernstein_interval(SizeSampleSet([1.0], bound=2.0), 0.1)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, 1.5])
    def test_gamma_domain(self, gamma):
        with pytest.raises(DomainError):
            hoeffding_interval(SizeSampleSet([1.0], bound=2.0), gamma)

    def test_hoeffding_is_wider_with_more_confidence(self):
        samples = SizeSampleSet(np.linspace(0.0, 3.0, 50), bound=3.0)
        assert hoeffding_interval(samples, 0.01).raw_upper > hoeffding_interval(samples, 0.1).raw_upper


class TestScoreMatrixSampler:

    def test_identical_rows(self):
        matrix = ScoreMatrix([[0.2, 0.7], [0.2, 0.7]], ("a", "b"), [1.0, 1.0], [0.5, 0.5])
        sampler = ScoreMatrixSampler(matrix)
        assert sampler.bound == 2.0
        assert mc_average(sampler, 2, 0.5, 20, seed=0, bound=sampler.bound).mean == 1.0
        # n_alpha = n, the set is the whole grid
        assert mc_average(sampler, 1, 0.1, 20, seed=0, bound=sampler.bound).mean == 2.0

    def test_mean_matches_unknown_factor_estimate(self):
        rng = np.random.default_rng(6)
        scores = rng.random((30, 5))
        matrix = ScoreMatrix(scores, tuple(range(5)), np.ones(5), scores[np.arange(30), rng.integers(0, 5, 30)])
        sampler = ScoreMatrixSampler(matrix)
        average = mc_average(sampler, 12, 0.2, 4000, seed=9, bound=sampler.bound)
        truth = point_estimate_unknown(matrix, 12, 0.2).point
        assert abs(average.mean - truth) <= 4 * average.standard_error


class TestMonteCarloAgainstTheory:

    def test_unbiased_over_macro_replicates(self):
        config = SyntheticConfig(m=10, a=0.25, b=1.0)
        n, alpha = 30, 0.1
        truth = theoretical_size(config, n, alpha)
        sampler = BetaBinomialScoreSampler(config)
        averages = [mc_average(sampler, n, alpha, 200, seed=child, bound=config.total_weight)
                    for child in np.random.SeedSequence(77).spawn(50)]

        within = [abs(a.mean - truth) <= 3 * a.standard_error for a in averages]
        assert np.mean(within) >= 0.9
        means = np.array([a.mean for a in averages])
        assert abs(means.mean() - truth) <= 3 * means.std(ddof=1) / math.sqrt(len(means))

    def test_same_data_spread_exceeds_known_factor_estimate(self):
        # Near-continuous uniform law: one split calibrates on k/2 points, the estimate uses all k
        config = SyntheticConfig(m=100, a=1.0, b=1.0)
        k, n, alpha = 200, 100, 0.1
        truth = theoretical_size(config, n, alpha)
        rows = np.tile(np.array(config.score_values), (k, 1))
        weights = np.full(config.m, config.weight)

        same_data, known = [], []
        for seed in range(100):
            sample = sample_scores(config, k, np.random.default_rng(500 + seed)).scores
            matrix = ScoreMatrix(rows, tuple(range(config.m)), weights, sample)
            same_data.append(same_data_mc(matrix, alpha, seed=seed, n=n).mean - truth)
            known.append(point_estimate_known(sample, n, alpha, config.factor).point - truth)

        rmse = lambda errors: math.sqrt(np.mean(np.square(errors)))
        assert rmse(same_data) > rmse(known)
