"""End-to-end validation of the estimators on synthetic and toy regression data.

Exact oracles for the binomial CDF, the hand-computed estimate, the Riemann
comparison, exhaustive enumeration and the high-dimensional factors live in the
per-module suites; this file covers the checks that span several modules.
"""

import numpy as np
import pytest

from src.conformal.predictors import LeastSquaresLine
from src.conformal.scorers import L1Scorer, build_score_matrix, trapezoid_weights
from src.set_size.baselines import hoeffding_interval, monte_carlo_sizes
from src.set_size.estimators import point_estimate_known, point_estimate_unknown
from src.synthetic.beta_binomial import BetaBinomialScoreSampler, SyntheticConfig, theoretical_size
from src.synthetic.experiment import DESK_AB_VALUES, DESK_M_VALUES, DESK_N_VALUES, run_grid, summarize_grid


class TestSyntheticGrid:

    def test_reduced_grid(self):
        frame = run_grid([0.25, 4.0], [1.0, 16.0], [10], [10, 100], [0.1], alpha=0.1, runs_per_setting=50,
                         repeats=5, master_seed=11)
        summary = summarize_grid(frame, runs_per_setting=50)
        assert summary["containment"][0.1] >= 0.9
        assert summary["mc_within_3se"] >= 0.9

    @pytest.mark.slow
    def test_desk_grid(self):
        runs = 200
        frame = run_grid(DESK_AB_VALUES, DESK_AB_VALUES, DESK_M_VALUES, DESK_N_VALUES, [0.1, 0.01], alpha=0.1,
                         runs_per_setting=runs, repeats=10, master_seed=2024)
        summary = summarize_grid(frame, runs_per_setting=runs)

        assert summary["mc_within_3se"] >= 0.99
        assert summary["containment"][0.1] >= 0.90
        assert summary["containment"][0.01] >= 0.99

        errors = [summary["median_abs_error_by_n"][n] for n in DESK_N_VALUES]
        assert errors[0] >= errors[1] >= errors[2]


class TestCrossEstimatorConsistency:

    def test_unknown_factor_matches_known_factor(self):
        rng = np.random.default_rng(17)
        k = 200
        features = rng.random(k)
        labels = features + rng.uniform(-1.0, 1.0, size=k)
        scorer = L1Scorer(LeastSquaresLine(0.0, 1.0))

        # Scores never exceed 1, so the grid covers every label with a positive integrand
        grid = np.linspace(-2.0, 3.0, 10**4)
        matrix = build_score_matrix(scorer, features, labels, grid, weights=trapezoid_weights(grid))

        for n, alpha in [(20, 0.1), (50, 0.2)]:
            known = point_estimate_known(matrix.marginal, n, alpha, scorer.factor).point
            unknown = point_estimate_unknown(matrix, n, alpha).point
            assert unknown == pytest.approx(known, rel=0.01)


class TestHoeffdingValidity:

    def test_error_frequency(self):
        config = SyntheticConfig(m=10, a=1.0, b=1.0)
        n, alpha, gamma, runs = 20, 0.1, 0.1, 50
        truth = theoretical_size(config, n, alpha)
        sampler = BetaBinomialScoreSampler(config)

        replicates = np.random.SeedSequence(99).spawn(500)
        errors = 0
        for replicate in replicates:
            samples = monte_carlo_sizes(sampler, n, alpha, replicate.spawn(runs), bound=config.total_weight)
            interval = hoeffding_interval(samples, gamma)
            errors += not (interval.lower <= truth <= interval.upper)
        assert errors / len(replicates) <= gamma
