"""
Practical estimators of the expected prediction set size from accessible data.

empirical_tilde_cdf(accessible) - fraction of accessible scores strictly below r.
dkw_radius(k, gamma) - uniform confidence radius of the empirical tilde-CDF.
KnownFactorEstimator - point and interval estimates for a known factor, reusable over (n, alpha).
point_estimate_known / interval_estimate_known - one-shot wrappers around KnownFactorEstimator.
point_estimate_unknown / interval_estimate_unknown - nested Monte Carlo over a score matrix.
conditional_point_estimate_feature / conditional_interval_estimate_feature - for a fixed test feature.
"""

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..conformal.split_conformal import ScoreSample, n_alpha
from ..errors import DataError, DomainError, SizeEstimationError, UnsupportedFactorError
from .factors import FactorSpec, factor_support
from .theory import (SizeQuery, StepTildeCdf, conditional_size_given_feature, expected_size_step,
                     expected_size_unknown_factor)

logger = logging.getLogger(__name__)

SANDWICH_TOLERANCE = 1e-9


@dataclass(frozen=True)
class DkwRadius:
    """
    Dvoretzky-Kiefer-Wolfowitz radius sqrt(ln(2 / gamma) / (2k))

    Args:
        k, int: Number of accessible scores
        gamma, float: Confidence parameter in (0, 1)
    """
    k: int
    gamma: float
    delta: float = field(init=False)

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"DKW radius needs k >= 1, got {self.k}")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"DKW confidence parameter must lie in (0, 1), got {self.gamma}")
        object.__setattr__(self, "delta", math.sqrt(math.log(2.0 / self.gamma) / (2.0 * self.k)))


def dkw_radius(k, gamma):
    return DkwRadius(k, gamma)


@dataclass(frozen=True)
class SizeInterval:
    lower: float
    upper: float
    gamma: float
    heuristic: bool = False


@dataclass(frozen=True)
class EstimateMeta:
    """
    Provenance of a size estimate

    Args:
        k, int: Number of accessible data points
        n, int: Calibration set size
        alpha, float: Significance level
        n_alpha, int: ceil((1 - alpha)(n + 1)) - 1
        factor, str: Factor in command line form
        estimator_kind, str: 'known-factor', 'unknown-factor' or 'feature-conditional'
        integration_upper, float: Upper end of the upper-bound integral
        truncated, bool: True if the upper bound was cut at integration_upper
    """
    k: int
    n: int
    alpha: float
    n_alpha: int
    factor: str
    estimator_kind: str
    integration_upper: float = math.inf
    truncated: bool = False


@dataclass(frozen=True)
class SizeEstimate:
    point: float
    meta: EstimateMeta
    interval: SizeInterval = None

    @property
    def is_infinite(self):
        return math.isinf(self.point)

    def to_dict(self):
        out = {"point": self.point, **asdict(self.meta)}
        if self.interval is not None:
            out.update(lower=self.interval.lower, upper=self.interval.upper,
                       gamma=self.interval.gamma, heuristic=self.interval.heuristic)
        return out


def _sandwich(point, lower, upper, gamma, heuristic=False):
    # Binomial CDF rounding near 0 and 1 may cross the point by a few ulps, larger crossings raise
    tolerance = SANDWICH_TOLERANCE * max(1.0, abs(point)) if math.isfinite(point) else 0.0
    if lower > point + tolerance or upper < point - tolerance:
        raise SizeEstimationError(f"Bounds [{lower}, {upper}] do not contain the point estimate {point}")
    return SizeInterval(min(lower, point), max(upper, point), gamma, heuristic)


def _as_sample(accessible):
    sample = accessible if isinstance(accessible, ScoreSample) else ScoreSample(accessible)
    if len(sample) == 0:
        raise DataError("Accessible score sample is empty")
    return sample


def empirical_tilde_cdf(accessible):
    """
    Empirical approximation of r -> P{R < r}

    Args:
        accessible, ScoreSample or array-like: Accessible non-conformity scores

    Returns:
        StepTildeCdf: Jumps at the distinct scores, value at r is the fraction of
            scores strictly below r
    """
    sample = _as_sample(accessible)
    distinct, counts = np.unique(sample.scores, return_counts=True)
    values = np.concatenate([[0.0], np.cumsum(counts) / len(sample)])
    values[-1] = 1.0
    return StepTildeCdf(distinct, values)


class KnownFactorEstimator:
    """
    Size estimates for a known factor

    The empirical tilde-CDF does not depend on n or alpha, so it is built once and
    every (n, alpha) configuration is answered from it.

    Args:
        accessible, ScoreSample or array-like: Accessible non-conformity scores
        factor, FactorSpec: Known multiplicative factor
    """

    def __init__(self, accessible, factor):
        if not factor.is_known:
            raise UnsupportedFactorError("Known-factor estimation needs a known factor, "
                                         "use the score matrix estimators for an unknown factor")
        self.accessible = _as_sample(accessible)
        self.factor = factor

        support = factor_support(factor)
        if not support.is_discrete and self.accessible.scores[0] < support.lower:
            raise DataError(f"Accessible score {self.accessible.scores[0]} is outside the score space "
                            f"of factor {factor}")
        self.tilde = empirical_tilde_cdf(self.accessible)

    @property
    def k(self):
        return len(self.accessible)

    def _meta(self, n, alpha, integration_upper=math.inf, truncated=False):
        return EstimateMeta(self.k, n, alpha, n_alpha(n, alpha), str(self.factor), "known-factor",
                            integration_upper, truncated)

    def point(self, n, alpha):
        """
        Plug the empirical tilde-CDF into the exact expected size

        Args:
            n, int: Calibration set size
            alpha, float: Significance level

        Returns:
            SizeEstimate: The point estimate
        """
        size = expected_size_step(self.tilde, SizeQuery(n, alpha, self.factor))
        return SizeEstimate(size, self._meta(n, alpha))

    def interval(self, n, alpha, gamma, integration_upper=None):
        """
        Point estimate with a 1 - gamma confidence interval

        The lower bound shifts the tilde-CDF up by the DKW radius, the upper bound
        shifts it down. On a score space unbounded above the upper bound would diverge,
        so it is integrated up to integration_upper (the largest accessible score by
        default).

        Args:
            n, int: Calibration set size
            alpha, float: Significance level
            gamma, float: Confidence parameter in (0, 1)
            integration_upper, float: Upper end of the upper-bound integral

        Returns:
            SizeEstimate: Point estimate with its interval
        """
        delta = dkw_radius(self.k, gamma).delta
        support = factor_support(self.factor)
        query = SizeQuery(n, alpha, self.factor)

        upper_end = math.inf
        truncated = False
        if support.is_unbounded_above and query.n_alpha < n:
            upper_end = self.accessible.max() if integration_upper is None else float(integration_upper)
            if upper_end < self.accessible.max():
                raise DomainError(f"Integration bound {upper_end} is below the largest accessible score "
                                  f"{self.accessible.max()}")
            truncated = True
            logger.info("Upper bound integral truncated at %.6g", upper_end)

        point = expected_size_step(self.tilde, query)
        lower = expected_size_step(self.tilde.shifted(delta), query)
        upper = expected_size_step(self.tilde.shifted(-delta), SizeQuery(n, alpha, self.factor, upper_end))
        return SizeEstimate(point, self._meta(n, alpha, upper_end, truncated), _sandwich(point, lower, upper, gamma))


def point_estimate_known(accessible, n, alpha, factor):
    return KnownFactorEstimator(accessible, factor).point(n, alpha)


def interval_estimate_known(accessible, n, alpha, factor, gamma, integration_upper=None):
    return KnownFactorEstimator(accessible, factor).interval(n, alpha, gamma, integration_upper)


def _matrix_meta(matrix, n, alpha):
    return EstimateMeta(matrix.k, n, alpha, n_alpha(n, alpha), str(FactorSpec.unknown()), "unknown-factor")


def point_estimate_unknown(matrix, n, alpha):
    """
    Nested Monte Carlo estimate without the multiplicative factor

    The marginal scores of the matrix build the tilde-CDF, and the same points
    supply the outer average over accessible features.

    Args:
        matrix, ScoreMatrix: Scores of the accessible points over a label grid
        n, int: Calibration set size
        alpha, float: Significance level

    Returns:
        SizeEstimate: The point estimate
    """
    tilde = empirical_tilde_cdf(matrix.marginal)
    return SizeEstimate(expected_size_unknown_factor(tilde, matrix, n, alpha), _matrix_meta(matrix, n, alpha))


def interval_estimate_unknown(matrix, n, alpha, gamma):
    """
    DKW-shifted bounds around the nested Monte Carlo estimate

    These bounds are not proven confidence intervals and are flagged heuristic.
    """
    tilde = empirical_tilde_cdf(matrix.marginal)
    delta = dkw_radius(matrix.k, gamma).delta
    point = expected_size_unknown_factor(tilde, matrix, n, alpha)
    lower = expected_size_unknown_factor(tilde.shifted(delta), matrix, n, alpha)
    upper = expected_size_unknown_factor(tilde.shifted(-delta), matrix, n, alpha)
    return SizeEstimate(point, _matrix_meta(matrix, n, alpha), _sandwich(point, lower, upper, gamma, heuristic=True))


def _feature_meta(sample, n, alpha):
    return EstimateMeta(len(sample), n, alpha, n_alpha(n, alpha), str(FactorSpec.unknown()), "feature-conditional")


def conditional_point_estimate_feature(accessible, feature_row, n, alpha, weights=None):
    """
    Expected size for a fixed test feature from accessible scores

    Args:
        accessible, ScoreSample or array-like: Accessible non-conformity scores
        feature_row, array-like: R(x, y_j) of the test feature over the label grid
        n, int: Calibration set size
        alpha, float: Significance level
        weights, array-like: Label weights (default counting measure)

    Returns:
        SizeEstimate: The point estimate
    """
    sample = _as_sample(accessible)
    tilde = empirical_tilde_cdf(sample)
    size = conditional_size_given_feature(tilde, feature_row, n, alpha, weights)
    return SizeEstimate(size, _feature_meta(sample, n, alpha))


def conditional_interval_estimate_feature(accessible, feature_row, n, alpha, gamma, weights=None):
    sample = _as_sample(accessible)
    tilde = empirical_tilde_cdf(sample)
    delta = dkw_radius(len(sample), gamma).delta
    point = conditional_size_given_feature(tilde, feature_row, n, alpha, weights)
    lower = conditional_size_given_feature(tilde.shifted(delta), feature_row, n, alpha, weights)
    upper = conditional_size_given_feature(tilde.shifted(-delta), feature_row, n, alpha, weights)
    return SizeEstimate(point, _feature_meta(sample, n, alpha), _sandwich(point, lower, upper, gamma, heuristic=True))
