"""
Synthetic score law over a finite set of score atoms.

The score index I follows I - 1 ~ BetaBin(m - 1, a, b) over the atoms r_1 < ... < r_m,
and every atom carries the same factor weight, so the exact expected size is a
finite sum.

SyntheticConfig - atoms, beta-binomial parameters and factor weight.
exact_tilde_p(config) - P{R < r_i} at every atom.
exact_tilde_step(config) - the same values as a StepTildeCdf.
theoretical_size(config, n, alpha) - exact expected prediction set size.
sample_scores(config, n, rng) - inverse CDF sampling of calibration scores.
BetaBinomialScoreSampler - Monte Carlo sampler for the synthetic law.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..conformal.split_conformal import ScoreSample
from ..errors import DomainError
from ..set_size.factors import FactorSpec
from ..set_size.theory import StepTildeCdf, conditional_size_given_calibration, expected_size_discrete_exact
from ..special.special_functions import beta_binomial_cdf_table

DEFAULT_FACTOR_WEIGHT = 2.0


@dataclass(frozen=True)
class SyntheticConfig:
    """
    Beta-binomial score law

    Args:
        m, int: Number of score atoms
        a, float: First beta parameter (a > 0)
        b, float: Second beta parameter (b > 0)
        score_values, tuple: Strictly increasing atoms, defaults to 1..m
        weight, float: Factor weight of every atom
    """
    m: int
    a: float
    b: float
    score_values: tuple = None
    weight: float = DEFAULT_FACTOR_WEIGHT

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"Synthetic law needs at least one atom, got m={self.m}")
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"Beta-binomial parameters must be positive, got a={self.a}, b={self.b}")
        if self.weight < 0:
            raise DomainError(f"Factor weight must be non-negative, got {self.weight}")

        values = np.arange(1, self.m + 1, dtype=float) if self.score_values is None else \
            np.asarray(self.score_values, dtype=float)
        if values.size != self.m or np.any(np.diff(values) <= 0):
            raise DomainError(f"Need {self.m} strictly increasing score values")
        object.__setattr__(self, "score_values", tuple(float(v) for v in values))

    @property
    def factor(self):
        return FactorSpec.atoms(self.score_values, [self.weight] * self.m)

    @property
    def total_weight(self):
        return self.weight * self.m

    @cached_property
    def cdf_table(self):
        # P{I - 1 <= j} for j = 0..m-1
        return beta_binomial_cdf_table(self.m - 1, self.a, self.b)


def exact_tilde_p(config):
    """
    P{R < r_i} = P{BetaBin(m - 1, a, b) <= i - 2} for i = 1..m

    Args:
        config, SyntheticConfig: The score law

    Returns:
        np.ndarray: One probability per atom, starting at 0
    """
    return np.concatenate([[0.0], config.cdf_table[:-1]])


def exact_tilde_step(config):
    return StepTildeCdf(config.score_values, np.concatenate([[0.0], config.cdf_table]))


def theoretical_size(config, n, alpha):
    """
    Exact expected prediction set size under the synthetic law

    Args:
        config, SyntheticConfig: The score law
        n, int: Calibration set size
        alpha, float: Significance level

    Returns:
        float: The expected size
    """
    return expected_size_discrete_exact(exact_tilde_p(config), np.full(config.m, config.weight), n, alpha)


def draw_scores(config, rng, n):
    # Inverse CDF over the atom indices
    indices = np.searchsorted(config.cdf_table, rng.random(n), side="right")
    return np.asarray(config.score_values)[np.minimum(indices, config.m - 1)]


def sample_scores(config, n, rng):
    """
    Draw n i.i.d. scores from the synthetic law

    Args:
        config, SyntheticConfig: The score law
        n, int: Number of scores
        rng, np.random.Generator: Random source

    Returns:
        ScoreSample: The sorted scores
    """
    if n < 1:
        raise DomainError(f"Number of scores must be positive, got {n}")
    return ScoreSample(draw_scores(config, rng, n))


class BetaBinomialScoreSampler:
    """
    Monte Carlo sampler for the synthetic law

    A set built from threshold tau holds every atom at or below tau, each with the
    configured weight.
    """

    def __init__(self, config):
        self.config = config

    def __call__(self, rng, size):
        return draw_scores(self.config, rng, size)

    def sample_calibration(self, rng, n):
        return sample_scores(self.config, n, rng)

    def set_size(self, threshold, rng):
        return conditional_size_given_calibration(threshold, self.config.factor)


if __name__ == "__main__":
    # Example usage
    config = SyntheticConfig(m=5, a=1.0, b=1.0)
    print(exact_tilde_p(config))  # Output: [0.  0.2 0.4 0.6 0.8]
    print(theoretical_size(config, n=10, alpha=0.1))
