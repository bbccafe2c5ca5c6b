"""
Exact expected prediction set size.

StepTildeCdf - left-continuous step function r -> P{R < r}.
SizeQuery - calibration size, significance level, factor and integration bound.
expected_size_from_tail(...) - integrates any step function P{threshold >= r} against a factor.
expected_size_step(tilde, query) - the exchangeable case, tail = P{B(n, tilde(r)) <= n_alpha}.
expected_size_discrete_exact(...) - the same sum over a finite set of score atoms.
expected_size_unknown_factor(tilde, matrix, n, alpha) - label-space average, no factor required.
conditional_size_given_feature(...) - expected size for a fixed test feature.
conditional_size_given_calibration(threshold, factor) - size of one constructed prediction set.
expected_size_curve_alpha(...) - expected size over a sweep of significance levels.

Every integral over a step function is evaluated exactly through the factor's
antiderivative, summed with math.fsum.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..conformal.split_conformal import Threshold, n_alpha
from ..errors import DataError, DomainError, UnsupportedFactorError
from ..special.special_functions import binomial_cdf_many
from .factors import FactorSpec, factor_antiderivative, factor_atoms, factor_support

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepTildeCdf:
    """
    Left-continuous non-decreasing step function with values in [0, 1]

    values[0] holds on (-inf, breakpoints[0]] and values[j] on
    (breakpoints[j - 1], breakpoints[j]], the last value extending to +inf.

    Args:
        breakpoints, array-like: Strictly increasing jump locations
        values, array-like: One more value than breakpoints
    """
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breakpoints = np.asarray(self.breakpoints, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size != breakpoints.size + 1:
            raise DomainError(f"Step function with {breakpoints.size} breakpoints needs "
                              f"{breakpoints.size + 1} values, got {values.size}")
        if np.any(np.isnan(breakpoints)) or np.any(np.diff(breakpoints) <= 0):
            raise DomainError("Breakpoints must be strictly increasing")
        if np.any(values < 0.0) or np.any(values > 1.0) or np.any(np.isnan(values)):
            raise DomainError("Step values must lie in [0, 1]")
        if np.any(np.diff(values) < 0):
            raise DomainError("Step values must be non-decreasing")
        breakpoints.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "breakpoints", breakpoints)
        object.__setattr__(self, "values", values)

    def __call__(self, r):
        """
        Evaluate at one score or an array of scores
        """
        index = np.searchsorted(self.breakpoints, r, side="left")
        out = self.values[index]
        if np.ndim(out) == 0:
            return float(out)
        return out

    def steps(self):
        """
        Return (lower, upper, value) for every step, outermost bounds infinite
        """
        edges = np.concatenate([[-math.inf], self.breakpoints, [math.inf]])
        return [(float(edges[j]), float(edges[j + 1]), float(self.values[j])) for j in range(self.values.size)]

    def shifted(self, delta):
        """
        Return the step function with every value moved by delta and clamped to [0, 1]
        """
        return StepTildeCdf(self.breakpoints, np.clip(self.values + delta, 0.0, 1.0))


@dataclass(frozen=True)
class SizeQuery:
    """
    Configuration of a single expected size evaluation

    Args:
        n, int: Calibration set size
        alpha, float: Significance level in (0, 1)
        factor, FactorSpec: Multiplicative factor
        integration_upper, float: Scores above this bound are left out of the integral
    """
    n: int
    alpha: float
    factor: FactorSpec
    integration_upper: float = math.inf

    def __post_init__(self):
        # Validates n and alpha
        n_alpha(self.n, self.alpha)

    @property
    def n_alpha(self):
        return n_alpha(self.n, self.alpha)


def _integrate_steps(breakpoints, tail_values, factor, integration_upper):
    # Exact integral of a left-continuous step function against the factor measure
    support = factor_support(factor)

    if support.is_discrete:
        atoms, weights = factor_atoms(factor)
        keep = atoms <= integration_upper
        tail_at_atoms = tail_values[np.searchsorted(breakpoints, atoms[keep], side="left")]
        return math.fsum(tail_at_atoms * weights[keep])

    lower = support.lower
    upper = min(integration_upper, support.upper)
    if upper <= lower:
        return 0.0

    inner = breakpoints[(breakpoints > lower) & (breakpoints < upper)]
    edges = np.concatenate([[lower], inner, [upper]])
    starts, ends = edges[:-1], edges[1:]
    step_values = tail_values[np.searchsorted(breakpoints, starts, side="right")]

    contributions = []
    for start, end, value in zip(starts, ends, step_values):
        if value == 0.0:
            continue
        if math.isinf(end):
            return math.inf
        width = factor_antiderivative(factor, end) - factor_antiderivative(factor, start)
        contributions.append(value * width)
    return math.fsum(contributions)


def expected_size_from_tail(breakpoints, tail_values, factor, integration_upper=math.inf):
    """
    Expected size from an arbitrary threshold tail probability

    Integrates r -> P{threshold >= r} against the factor. The tail is supplied as a
    left-continuous step function, which covers calibration scores that are not
    exchangeable as long as their threshold tail can be computed.

    Args:
        breakpoints, array-like: Strictly increasing jump locations
        tail_values, array-like: P{threshold >= r} per step, one more than breakpoints
        factor, FactorSpec: Known multiplicative factor
        integration_upper, float: Upper end of the integral

    Returns:
        float: The expected size, +inf when a positive tail reaches an unbounded end
    """
    if not factor.is_known:
        raise UnsupportedFactorError("Expected size integration needs a known multiplicative factor")

    breakpoints = np.asarray(breakpoints, dtype=float).ravel()
    tail_values = np.asarray(tail_values, dtype=float).ravel()
    if tail_values.size != breakpoints.size + 1:
        raise DomainError(f"Tail with {breakpoints.size} breakpoints needs {breakpoints.size + 1} values, "
                          f"got {tail_values.size}")
    if np.any(np.diff(breakpoints) <= 0):
        raise DomainError("Breakpoints must be strictly increasing")
    if np.any(tail_values < 0.0) or np.any(tail_values > 1.0):
        raise DomainError("Tail probabilities must lie in [0, 1]")

    return _integrate_steps(breakpoints, tail_values, factor, integration_upper)


def expected_size_step(tilde, query):
    """
    Expected size of split conformal prediction sets for a step tilde-CDF

    Args:
        tilde, StepTildeCdf: r -> P{R < r}
        query, SizeQuery: Calibration size, significance level, factor and bound

    Returns:
        float: Integral of P{B(n, tilde(r)) <= n_alpha} against the factor
    """
    if not query.factor.is_known:
        raise UnsupportedFactorError("expected_size_step needs a known multiplicative factor")

    k = query.n_alpha
    if k == query.n:
        logger.warning("n_alpha equals n=%d at alpha=%.4g, the threshold is always infinite", query.n, query.alpha)

    tail = binomial_cdf_many(query.n, tilde.values, k)
    return _integrate_steps(tilde.breakpoints, tail, query.factor, query.integration_upper)


def expected_size_discrete_exact(tilde_values, factor_weights, n, alpha):
    """
    Expected size over a finite set of score atoms

    Args:
        tilde_values, array-like: tilde-CDF at each atom, in [0, 1]
        factor_weights, array-like: Factor weight of each atom
        n, int: Calibration set size
        alpha, float: Significance level

    Returns:
        float: Sum of P{B(n, tilde_i) <= n_alpha} * weight_i
    """
    tilde_values = np.asarray(tilde_values, dtype=float).ravel()
    factor_weights = np.asarray(factor_weights, dtype=float).ravel()
    if tilde_values.size != factor_weights.size:
        raise DataError(f"Got {tilde_values.size} tilde values but {factor_weights.size} factor weights")
    if np.any(factor_weights < 0):
        raise DomainError("Factor weights must be non-negative")

    tail = binomial_cdf_many(n, tilde_values, n_alpha(n, alpha))
    return math.fsum(tail * factor_weights)


def expected_size_unknown_factor(tilde, matrix, n, alpha):
    """
    Expected size without the multiplicative factor

    Averages P{B(n, tilde(R(X'_i, y_j))) <= n_alpha} over the accessible rows and
    integrates over the label grid with the matrix's label weights.

    Args:
        tilde, StepTildeCdf: r -> P{R < r}
        matrix, ScoreMatrix: Scores of the accessible points over the label grid
        n, int: Calibration set size
        alpha, float: Significance level

    Returns:
        float: The expected size
    """
    scores = np.asarray(matrix.scores, dtype=float)
    if scores.size == 0:
        raise DataError("Score matrix is empty")

    tail = binomial_cdf_many(n, tilde(scores), n_alpha(n, alpha))
    k = scores.shape[0]
    return math.fsum((tail * (np.asarray(matrix.weights, dtype=float) / k)).ravel())


def conditional_size_given_feature(tilde, feature_scores, n, alpha, weights=None):
    """
    Expected size for a fixed test feature

    Args:
        tilde, StepTildeCdf: r -> P{R < r}
        feature_scores, array-like: R(x, y_j) over the label grid
        n, int: Calibration set size
        alpha, float: Significance level
        weights, array-like: Label weights (default counting measure)

    Returns:
        float: Sum of w_j P{B(n, tilde(R(x, y_j))) <= n_alpha}
    """
    feature_scores = np.asarray(feature_scores, dtype=float).ravel()
    if feature_scores.size == 0:
        raise DataError("Feature score row is empty")
    weights = np.ones_like(feature_scores) if weights is None else np.asarray(weights, dtype=float).ravel()
    if weights.size != feature_scores.size:
        raise DataError(f"Got {feature_scores.size} feature scores but {weights.size} weights")

    tail = binomial_cdf_many(n, tilde(feature_scores), n_alpha(n, alpha))
    return math.fsum(tail * weights)


def conditional_size_given_calibration(threshold, factor):
    """
    Size of the prediction set built from one calibration sample

    Args:
        threshold, Threshold or float: The acceptance threshold
        factor, FactorSpec: Known multiplicative factor

    Returns:
        float: Factor measure of the scores at or below the threshold
    """
    if not factor.is_known:
        raise UnsupportedFactorError("Calibration conditional size needs a known multiplicative factor")
    tau = threshold.value if isinstance(threshold, Threshold) else float(threshold)

    if factor.is_discrete:
        atoms, weights = factor_atoms(factor)
        return math.fsum(weights[atoms <= tau])

    support = factor_support(factor)
    if tau <= support.lower:
        return 0.0
    if math.isinf(tau):
        return math.inf
    return factor_antiderivative(factor, tau) - factor_antiderivative(factor, support.lower)


def expected_size_curve_alpha(tilde, factor, n, alphas, integration_upper=math.inf):
    """
    Expected size for each significance level of a sweep, sharing one tilde-CDF

    Args:
        tilde, StepTildeCdf: r -> P{R < r}
        factor, FactorSpec: Known multiplicative factor
        n, int: Calibration set size
        alphas, iterable: Significance levels
        integration_upper, float: Upper end of the integrals

    Returns:
        np.ndarray: Expected size per alpha
    """
    return np.array([expected_size_step(tilde, SizeQuery(n, alpha, factor, integration_upper)) for alpha in alphas],
                    dtype=float)


if __name__ == "__main__":
    # Example usage
    tilde = StepTildeCdf([1.0, 2.0, 3.0], [0.0, 1 / 3, 2 / 3, 1.0])
    print(expected_size_step(tilde, SizeQuery(3, 0.5, FactorSpec.l1())))  # Output: 4.0
    print(conditional_size_given_calibration(1.5, FactorSpec.l1()))  # Output: 3.0
