"""
Split conformal mechanics: acceptance threshold, prediction sets and coverage.

n_alpha(n, alpha) - largest count of calibration scores allowed strictly below a score.
compute_threshold(cal, alpha) - the ceil((1 - alpha)(n + 1))'th smallest calibration score (or +inf).
prediction_set_discrete(threshold, test_scores) - labels whose test score is at most the threshold.
coverage_trial(cal_scores, test_score, alpha) - whether a test score is covered.
miscoverage_rate(sampler, n, alpha, trials, seed) - frequency of uncovered test scores.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import DataError, DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoreSample:
    """
    Sorted collection of non-conformity scores

    Args:
        scores, array-like: Non-conformity scores, sorted on construction
        score_space_min, float: Lower bound of the score space (0 for l1, -inf for CQR)
    """
    scores: np.ndarray
    score_space_min: float = -math.inf

    def __post_init__(self):
        scores = np.sort(np.asarray(self.scores, dtype=float).ravel())
        if np.any(np.isnan(scores)):
            raise DataError("Scores must not contain NaN")
        if scores.size and scores[0] < self.score_space_min:
            raise DataError(f"Score {scores[0]} is below the score space minimum {self.score_space_min}")
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    def __len__(self):
        return int(self.scores.size)

    def max(self):
        """
        Return the largest score
        """
        if not len(self):
            raise DataError("Empty score sample has no maximum")
        return float(self.scores[-1])


@dataclass(frozen=True)
class Threshold:
    """
    Acceptance score threshold, a calibration score or +inf

    Args:
        value, float: The threshold value
    """
    value: float

    @property
    def is_infinite(self):
        return math.isinf(self.value) and self.value > 0

    def accepts(self, score):
        """
        Return True if a score is at most the threshold (r <= +inf always holds)
        """
        return self.is_infinite or score <= self.value


def n_alpha(n, alpha):
    """
    Largest number of calibration scores that may fall strictly below r while the
    threshold stays at or above r

    Args:
        n, int: Number of calibration scores (n >= 1)
        alpha, float: Significance level in (0, 1)

    Returns:
        int: ceil((1 - alpha)(n + 1)) - 1, in [0, n]
    """
    if n < 1:
        raise DomainError(f"Number of calibration scores must be positive, got {n}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"Significance level must lie in (0, 1), got {alpha}")

    # Exact rational arithmetic on the decimal alpha, 0.9 * 10 must stay 9
    rank = math.ceil((1 - Fraction(repr(float(alpha)))) * (n + 1))
    return min(max(rank - 1, 0), n)


def _as_sample(cal):
    if isinstance(cal, ScoreSample):
        return cal
    return ScoreSample(cal)


def compute_threshold(cal, alpha):
    """
    Compute the split conformal acceptance threshold

    Args:
        cal, ScoreSample or array-like: Calibration scores
        alpha, float: Significance level in (0, 1)

    Returns:
        Threshold: The (n_alpha + 1)'th smallest calibration score, or +inf when that
            rank exceeds the number of calibration scores
    """
    cal = _as_sample(cal)
    n = len(cal)
    if n == 0:
        raise DataError("Calibration set is empty")

    rank = n_alpha(n, alpha) + 1
    if rank > n:
        return Threshold(math.inf)
    return Threshold(float(cal.scores[rank - 1]))


def prediction_set_discrete(threshold, test_scores):
    """
    Build the prediction set over a discrete label space

    Args:
        threshold, Threshold: Acceptance threshold
        test_scores, dict: Label to test non-conformity score

    Returns:
        set: Labels whose score is at most the threshold
    """
    return {label for label, score in test_scores.items() if threshold.accepts(score)}


def coverage_trial(cal_scores, test_score, alpha):
    """
    Check whether a test score is covered by the threshold of the calibration scores

    Args:
        cal_scores, ScoreSample or array-like: Calibration scores
        test_score, float: Score of the true test label
        alpha, float: Significance level in (0, 1)

    Returns:
        bool: True if the test score is at most the threshold
    """
    return compute_threshold(cal_scores, alpha).accepts(test_score)


def miscoverage_rate(sampler, n, alpha, trials, seed):
    """
    Frequency with which the true test score exceeds the threshold

    Args:
        sampler, callable: sampler(rng, size) returns an array of i.i.d. scores
        n, int: Number of calibration scores per trial
        alpha, float: Significance level
        trials, int: Number of independent trials
        seed, int: Master seed, each trial gets its own child stream

    Returns:
        float: Fraction of trials where the test score was not covered
    """
    if trials < 1:
        raise DomainError(f"Number of trials must be positive, got {trials}")

    misses = 0
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        scores = np.asarray(sampler(rng, n + 1), dtype=float)
        if not coverage_trial(scores[:n], float(scores[n]), alpha):
            misses += 1

    rate = misses / trials
    logger.debug("Miscoverage %.4f over %d trials (n=%d, alpha=%.3f)", rate, trials, n, alpha)
    return rate
