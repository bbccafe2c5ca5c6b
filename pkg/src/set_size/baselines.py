"""
Monte Carlo averages of prediction set sizes and concentration interval baselines.

SizeSampleSet - i.i.d. prediction set sizes, optionally bounded by the label space size.
ScoreDistributionSampler - draws calibration scores and sizes sets through a known factor.
ScoreMatrixSampler - resamples score matrix rows, sizes sets over the label grid.
monte_carlo_sizes(sampler, n, alpha, seeds) - one constructed set size per seed.
mc_average(sampler, n, alpha, runs, seed) - mean size and its standard error.
same_data_mc(matrix, alpha, seed, n) - split accessible data into pseudo-calibration and pseudo-test.
clt_interval / hoeffding_interval / bernstein_interval - intervals for the mean size.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..conformal.split_conformal import ScoreSample, compute_threshold
from ..errors import DataError, DomainError
from .theory import conditional_size_given_calibration

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SizeSampleSet:
    """
    Independent prediction set sizes

    Args:
        sizes, array-like: Non-negative sizes
        bound, float: Upper bound on any size (label space size), None if unbounded
    """
    sizes: np.ndarray
    bound: float = None

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=float).ravel()
        if np.any(sizes < 0) or np.any(np.isnan(sizes)):
            raise DataError("Prediction set sizes must be non-negative")
        if self.bound is not None and np.any(sizes > self.bound):
            raise DataError(f"Prediction set size above the bound {self.bound}")
        sizes.setflags(write=False)
        object.__setattr__(self, "sizes", sizes)

    def __len__(self):
        return int(self.sizes.size)

    @property
    def mean(self):
        return math.fsum(self.sizes) / len(self)

    @property
    def std(self):
        """
        Unbiased sample standard deviation (0 for a single size, inf once any size is infinite)
        """
        if len(self) < 2:
            return 0.0
        if not np.all(np.isfinite(self.sizes)):
            return math.inf
        return float(np.std(self.sizes, ddof=1))

    @property
    def standard_error(self):
        return self.std / math.sqrt(len(self))


@dataclass(frozen=True)
class MonteCarloAverage:
    mean: float
    standard_error: float
    samples: SizeSampleSet


@dataclass(frozen=True)
class BaselineInterval:
    """
    Interval for the expected size from i.i.d. sizes

    Args:
        lower, float: Clipped lower end
        upper, float: Clipped upper end
        raw_lower, float: Lower end before clipping
        raw_upper, float: Upper end before clipping
        method, str: 'clt', 'hoeffding' or 'bernstein'
        gamma, float: Confidence parameter
        heuristic, bool: True when the interval has no finite-sample guarantee
    """
    lower: float
    upper: float
    raw_lower: float
    raw_upper: float
    method: str
    gamma: float
    heuristic: bool = False


class ScoreDistributionSampler:
    """
    Sampler for a score law with a known factor

    A constructed prediction set contains exactly the scores at or below the
    threshold, so its size is the factor measure up to the threshold.

    Args:
        draw, callable: draw(rng, size) returns i.i.d. calibration scores
        factor, FactorSpec: Known multiplicative factor
        score_space_min, float: Lower bound of the score space
    """

    def __init__(self, draw, factor, score_space_min=-math.inf):
        self.draw = draw
        self.factor = factor
        self.score_space_min = score_space_min

    def sample_calibration(self, rng, n):
        return ScoreSample(self.draw(rng, n), self.score_space_min)

    def set_size(self, threshold, rng):
        return conditional_size_given_calibration(threshold, self.factor)


class ScoreMatrixSampler:
    """
    Bootstrap sampler over the rows of a score matrix

    Calibration scores are the marginal scores of resampled rows and each set is
    sized on one more resampled row, so no factor is needed. Under this resampling
    the unknown-factor point estimate of the same matrix is the exact expected size.

    Args:
        matrix, ScoreMatrix: Accessible scores over a label grid
    """

    def __init__(self, matrix):
        self.matrix = matrix

    @property
    def bound(self):
        return self.matrix.total_label_measure

    def sample_calibration(self, rng, n):
        return ScoreSample(self.matrix.marginal[rng.integers(self.matrix.k, size=n)])

    def set_size(self, threshold, rng):
        row = self.matrix.scores[rng.integers(self.matrix.k)]
        return math.fsum(self.matrix.weights[row <= threshold.value])


def monte_carlo_sizes(sampler, n, alpha, seeds, bound=None):
    """
    Construct one prediction set per seed and record its size

    Args:
        sampler: Exposes sample_calibration(rng, n) and set_size(threshold, rng)
        n, int: Calibration set size
        alpha, float: Significance level
        seeds, list: np.random.SeedSequence per run
        bound, float: Upper bound on any size

    Returns:
        SizeSampleSet: The constructed set sizes
    """
    sizes = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        threshold = compute_threshold(sampler.sample_calibration(rng, n), alpha)
        sizes.append(sampler.set_size(threshold, rng))
    return SizeSampleSet(sizes, bound)


def mc_average(sampler, n, alpha, runs, seed, bound=None):
    """
    Monte Carlo average of constructed prediction set sizes

    Args:
        sampler: Exposes sample_calibration(rng, n) and set_size(threshold, rng)
        n, int: Calibration set size
        alpha, float: Significance level
        runs, int: Number of independent runs
        seed, int or np.random.SeedSequence: Master seed
        bound, float: Upper bound on any size

    Returns:
        MonteCarloAverage: Mean size, its standard error and the sizes
    """
    if runs < 1:
        raise DomainError(f"Number of Monte Carlo runs must be positive, got {runs}")
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)

    samples = monte_carlo_sizes(sampler, n, alpha, seed.spawn(runs), bound)
    logger.debug("Monte Carlo average %.6g over %d runs", samples.mean, runs)
    return MonteCarloAverage(samples.mean, samples.standard_error, samples)


def same_data_mc(matrix, alpha, seed, n=None):
    """
    Same-data Monte Carlo: calibrate on part of the accessible data, size sets on the rest

    With n given and smaller than k, n points calibrate and the other k - n are
    tests; otherwise the data is split in half.

    Args:
        matrix, ScoreMatrix: Accessible scores over the label grid and at the true labels
        alpha, float: Significance level
        seed, int: Seed of the random split
        n, int: Number of pseudo-calibration points

    Returns:
        SizeSampleSet: Set size of every pseudo-test point
    """
    k = matrix.k
    if k < 2:
        raise DataError(f"Same-data Monte Carlo needs at least 2 accessible points, got {k}")
    if n is None or n >= k:
        n = k // 2
    elif n < 1:
        raise DomainError(f"Pseudo-calibration size must be positive, got {n}")

    order = np.random.default_rng(seed).permutation(k)
    calibration, test = order[:n], order[n:]
    threshold = compute_threshold(matrix.marginal[calibration], alpha)

    accepted = matrix.scores[test] <= threshold.value
    sizes = accepted.astype(float) @ matrix.weights
    return SizeSampleSet(sizes, matrix.total_label_measure)


def _clipped(samples, half_width, method, gamma, heuristic=False):
    mean = samples.mean
    ceiling = math.inf if samples.bound is None else samples.bound
    raw_lower, raw_upper = mean - half_width, mean + half_width
    return BaselineInterval(max(raw_lower, 0.0), min(raw_upper, ceiling), raw_lower, raw_upper,
                            method, gamma, heuristic)


def _check_gamma(gamma):
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"Confidence parameter must lie in (0, 1), got {gamma}")


def _require_bound(samples, method):
    if samples.bound is None:
        raise DomainError(f"{method} intervals need a bounded label space, set the size bound")


def clt_interval(samples, gamma):
    """
    Normal approximation interval mean +- z s / sqrt(N), valid only asymptotically
    """
    _check_gamma(gamma)
    if len(samples) < 2:
        raise DataError("CLT interval needs at least 2 sizes")
    if math.isinf(samples.mean):
        raise DataError("CLT interval needs finite sizes")
    z = norm.ppf(1.0 - gamma / 2.0)
    return _clipped(samples, z * samples.std / math.sqrt(len(samples)), "clt", gamma, heuristic=True)


def hoeffding_interval(samples, gamma):
    """
    Hoeffding interval mean +- B sqrt(ln(2 / gamma) / (2N)) for sizes in [0, B]

    Args:
        samples, SizeSampleSet: Sizes with a bound B
        gamma, float: Confidence parameter in (0, 1)

    Returns:
        BaselineInterval: Interval clipped to [0, B]
    """
    _check_gamma(gamma)
    _require_bound(samples, "Hoeffding")
    if len(samples) < 1:
        raise DataError("Hoeffding interval needs at least 1 size")
    half_width = samples.bound * math.sqrt(math.log(2.0 / gamma) / (2.0 * len(samples)))
    return _clipped(samples, half_width, "hoeffding", gamma)


def bernstein_interval(samples, gamma):
    """
    Empirical Bernstein interval, the variance term uses the sample variance

    Args:
        samples, SizeSampleSet: Sizes with a bound B
        gamma, float: Confidence parameter in (0, 1)

    Returns:
        BaselineInterval: Interval clipped to [0, B], flagged heuristic
    """
    _check_gamma(gamma)
    _require_bound(samples, "Bernstein")
    if len(samples) < 2:
        raise DataError("Bernstein interval needs at least 2 sizes")
    size = len(samples)
    log_term = math.log(3.0 / gamma)
    half_width = math.sqrt(2.0 * samples.std**2 * log_term / size) + 3.0 * samples.bound * log_term / size
    return _clipped(samples, half_width, "bernstein", gamma, heuristic=True)
