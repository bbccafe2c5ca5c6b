"""Tests for the practical size estimators."""

import math

import numpy as np
import pytest

from src.conformal.scorers import ScoreMatrix
from src.errors import DataError, DomainError, SizeEstimationError, UnsupportedFactorError
from src.set_size.estimators import (
    KnownFactorEstimator,
    _sandwich,
    conditional_interval_estimate_feature,
    conditional_point_estimate_feature,
    dkw_radius,
    empirical_tilde_cdf,
    interval_estimate_known,
    interval_estimate_unknown,
    point_estimate_known,
    point_estimate_unknown,
)
from src.set_size.factors import FactorSpec
from src.set_size.theory import SizeQuery, expected_size_step
from src.synthetic.beta_binomial import SyntheticConfig, sample_scores, theoretical_size


class TestEmpiricalTildeCdf:

    def test_strictly_below(self):
        tilde = empirical_tilde_cdf([3.0, 1.0, 2.0])
        assert tilde(2.0) == pytest.approx(1 / 3)
        assert tilde(0.5) == 0.0
        assert tilde(3.0) == pytest.approx(2 / 3)
        assert tilde(3.0001) == 1.0

    def test_ties_use_strict_inequality(self):
        tilde = empirical_tilde_cdf([1.0, 1.0, 2.0])
        assert tilde(1.0) == 0.0
        assert tilde(1.5) == pytest.approx(2 / 3)
        # A non-strict count would give 2/3 at r = 1
        assert tilde(1.0) != pytest.approx(2 / 3)

    def test_values_are_multiples_of_one_over_k(self):
        rng = np.random.default_rng(0)
        scores = rng.integers(0, 5, size=40).astype(float)
        tilde = empirical_tilde_cdf(scores)
        np.testing.assert_allclose(tilde.values * 40, np.round(tilde.values * 40), atol=1e-9)

    def test_empty(self):
        with pytest.raises(DataError):
            empirical_tilde_cdf([])


class TestDkwRadius:

    def test_formula(self):
        assert dkw_radius(50, 0.1).delta == pytest.approx(math.sqrt(math.log(20.0) / 100.0), rel=1e-14)
        assert dkw_radius(50, 0.1).delta == pytest.approx(0.1730818, abs=1e-7)
        assert dkw_radius(1, 2.0 / math.e).delta == pytest.approx(math.sqrt(0.5), rel=1e-14)

    def test_monotone(self):
        assert dkw_radius(1000, 0.1).delta < dkw_radius(100, 0.1).delta
        assert dkw_radius(100, 0.01).delta > dkw_radius(100, 0.1).delta
        assert dkw_radius(10**12, 0.1).delta < 1e-5

    @pytest.mark.parametrize("k,gamma", [(0, 0.1), (10, 0.0), (10, 1.0)])
    def test_domain(self, k, gamma):
        with pytest.raises(DomainError):
            dkw_radius(k, gamma)


class TestKnownFactorEstimates:

    def test_point_hand_computed(self):
        estimate = point_estimate_known([1.0, 2.0, 3.0], 3, 0.5, FactorSpec.l1())
        assert estimate.point == pytest.approx(4.0, abs=1e-12)
        assert estimate.meta.n_alpha == 1
        assert estimate.meta.k == 3
        assert estimate.interval is None

    def test_point_constant_scores(self):
        estimate = point_estimate_known([2.5] * 6, 10, 0.3, FactorSpec.l1())
        assert estimate.point == pytest.approx(5.0)

    def test_point_infinite_regime(self):
        estimate = point_estimate_known([1.0, 2.0, 3.0], 3, 0.1, FactorSpec.l1())
        assert estimate.is_infinite

    def test_unknown_factor(self):
        with pytest.raises(UnsupportedFactorError):
            point_estimate_known([1.0], 3, 0.5, FactorSpec.unknown())

    def test_scores_outside_score_space(self):
        with pytest.raises(DataError):
            point_estimate_known([-1.0, 2.0], 3, 0.5, FactorSpec.l1())

    def test_interval_hand_computed(self):
        estimate = interval_estimate_known([1.0, 2.0, 3.0], 3, 0.5, FactorSpec.l1(), 0.1)
        delta = math.sqrt(math.log(20.0) / 6.0)
        assert estimate.interval.lower == pytest.approx(2.0 * (1 - delta) ** 2 * (1 + 2 * delta), rel=1e-12)
        assert estimate.interval.lower == pytest.approx(0.41547, abs=1e-4)
        assert estimate.interval.upper == pytest.approx(6.0, rel=1e-12)
        assert estimate.meta.truncated
        assert estimate.meta.integration_upper == 3.0

    def test_interval_explicit_bound(self):
        estimate = interval_estimate_known([1.0, 2.0, 3.0], 3, 0.5, FactorSpec.l1(), 0.1, integration_upper=5.0)
        # Beyond the last score the shifted tilde-CDF is 1 - delta
        p = 1.0 - math.sqrt(math.log(20.0) / 6.0)
        assert estimate.interval.upper == pytest.approx(6.0 + 4.0 * (1 - p) ** 2 * (1 + 2 * p), rel=1e-12)
        assert estimate.meta.integration_upper == 5.0
        with pytest.raises(DomainError):
            interval_estimate_known([1.0, 2.0, 3.0], 3, 0.5, FactorSpec.l1(), 0.1, integration_upper=2.0)

    def test_saturated_radius(self):
        # k = 1 gives a radius above 1, the lower bound vanishes
        estimate = interval_estimate_known([1.0], 5, 0.5, FactorSpec.l1(), 0.1)
        assert estimate.interval.lower == 0.0

    def test_infinite_regime_interval(self):
        estimate = interval_estimate_known([1.0, 2.0, 3.0], 3, 0.1, FactorSpec.l1(), 0.1)
        assert estimate.point == estimate.interval.lower == estimate.interval.upper == math.inf
        assert not estimate.meta.truncated

    def test_discrete_support_is_not_truncated(self):
        estimate = interval_estimate_known([0.0, 0.0, 1.0, 0.0], 10, 0.2, FactorSpec.zero_one(3), 0.1)
        assert not estimate.meta.truncated
        assert 0.0 <= estimate.interval.lower <= estimate.point <= estimate.interval.upper <= 3.0

    def test_reusable_across_configurations(self):
        estimator = KnownFactorEstimator([0.5, 1.0, 1.5, 2.0, 4.0], FactorSpec.lp(2))
        for n, alpha in [(5, 0.2), (50, 0.1), (500, 0.05)]:
            assert estimator.point(n, alpha).point == pytest.approx(
                point_estimate_known([0.5, 1.0, 1.5, 2.0, 4.0], n, alpha, FactorSpec.lp(2)).point)

    def test_sandwich_and_gamma_nesting(self):
        # Integrals of the shifted tilde-CDFs, before any clamping, must bracket the point
        rng = np.random.default_rng(31)
        for _ in range(200):
            k = int(rng.integers(1, 60))
            scores = rng.exponential(1.0, size=k)
            factor = FactorSpec.lp(float(rng.uniform(1.0, 3.0)))
            n = int(rng.integers(1, 200))
            alpha = float(rng.uniform(0.05, 0.5))
            estimator = KnownFactorEstimator(scores, factor)
            point = expected_size_step(estimator.tilde, SizeQuery(n, alpha, factor))
            raw = {}
            for gamma in (0.01, 0.2):
                delta = dkw_radius(k, gamma).delta
                lower = expected_size_step(estimator.tilde.shifted(delta), SizeQuery(n, alpha, factor))
                upper = expected_size_step(estimator.tilde.shifted(-delta),
                                           SizeQuery(n, alpha, factor, scores.max()))
                if math.isfinite(point):
                    assert lower <= point * (1 + 1e-12) + 1e-15
                    assert upper >= point * (1 - 1e-12) - 1e-15
                raw[gamma] = (lower, upper)
            assert raw[0.01][0] <= raw[0.2][0] + 1e-12
            assert raw[0.01][1] >= raw[0.2][1] - 1e-12

    def test_crossing_bounds_raise(self):
        assert _sandwich(1.0, 1.0 + 1e-13, 2.0, 0.1).lower == 1.0
        assert _sandwich(1.0, 0.5, 1.0 - 1e-13, 0.1).upper == 1.0
        with pytest.raises(SizeEstimationError):
            _sandwich(1.0, 1.5, 2.0, 0.1)
        with pytest.raises(SizeEstimationError):
            _sandwich(1.0, 0.5, 0.9, 0.1)

    def test_consistency_on_synthetic_law(self):
        config = SyntheticConfig(m=10, a=1.0, b=4.0)
        truth = theoretical_size(config, 100, 0.1)
        medians = []
        for k in [100, 1000, 10000]:
            errors = []
            for seed in range(30):
                sample = sample_scores(config, k, np.random.default_rng(seed))
                errors.append(abs(point_estimate_known(sample, 100, 0.1, config.factor).point - truth))
            medians.append(np.median(errors))
        assert medians[0] >= medians[1] >= medians[2]

    def test_dkw_validity_on_synthetic_law(self):
        config = SyntheticConfig(m=10, a=0.25, b=1.0)
        truth = theoretical_size(config, 50, 0.1)
        gamma = 0.1
        misses = 0
        replicates = 500
        for seed in range(replicates):
            sample = sample_scores(config, 50, np.random.default_rng(1000 + seed))
            estimate = interval_estimate_known(sample, 50, 0.1, config.factor, gamma)
            misses += not (estimate.interval.lower <= truth <= estimate.interval.upper)
        assert misses / replicates <= gamma + 3 * math.sqrt(gamma * (1 - gamma) / replicates)


class TestUnknownFactorEstimates:

    def test_entries_below_accessible_scores(self):
        matrix = ScoreMatrix([[0.0, 0.1, 0.2], [0.05, 0.0, 0.3]], (0, 1, 2), [1.0, 1.0, 1.0], [1.0, 2.0])
        assert point_estimate_unknown(matrix, 10, 0.1).point == pytest.approx(3.0)

    def test_single_row_above_accessible_score(self):
        matrix = ScoreMatrix([[5.0]], (0,), [1.0], [1.0])
        assert point_estimate_unknown(matrix, 4, 0.5).point == 0.0

    def test_saturated_interval(self):
        matrix = ScoreMatrix([[0.5, 1.5]], (0, 1), [1.0, 1.0], [1.0])
        estimate = interval_estimate_unknown(matrix, 4, 0.5, 0.1)
        assert estimate.interval.lower == 0.0
        assert estimate.interval.upper == pytest.approx(2.0)
        assert estimate.interval.heuristic

    def test_gamma_nesting(self):
        rng = np.random.default_rng(8)
        scores = rng.random((30, 5))
        matrix = ScoreMatrix(scores, tuple(range(5)), np.ones(5), scores[np.arange(30), rng.integers(0, 5, 30)])
        wide = interval_estimate_unknown(matrix, 20, 0.2, 0.01)
        narrow = interval_estimate_unknown(matrix, 20, 0.2, 0.3)
        assert wide.interval.lower <= narrow.interval.lower <= narrow.point <= narrow.interval.upper
        assert narrow.interval.upper <= wide.interval.upper


class TestFeatureConditionalEstimates:

    def test_point(self):
        accessible = [1.0, 2.0, 3.0]
        assert conditional_point_estimate_feature(accessible, [0.5, 1.5, 2.5], 3, 0.5).point == pytest.approx(2.0)
        assert conditional_point_estimate_feature(accessible, [0.1, 0.2], 3, 0.5).point == pytest.approx(2.0)
        assert conditional_point_estimate_feature(accessible, [4.0, 9.0], 3, 0.5).point == 0.0

    def test_point_weights(self):
        estimate = conditional_point_estimate_feature([1.0, 2.0], [0.1, 0.2], 3, 0.5, weights=[0.25, 0.5])
        assert estimate.point == pytest.approx(0.75)
        assert estimate.meta.estimator_kind == "feature-conditional"

    def test_interval(self):
        estimate = conditional_interval_estimate_feature([1.0, 2.0, 3.0, 4.0], [0.5, 2.5, 4.5], 10, 0.2, 0.2)
        assert estimate.interval.lower <= estimate.point <= estimate.interval.upper
        assert estimate.interval.heuristic

    def test_empty_row(self):
        with pytest.raises(DataError):
            conditional_point_estimate_feature([1.0], [], 3, 0.5)
