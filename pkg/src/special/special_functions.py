"""
Special functions used by the set size estimators.

log_gamma(x) - ln Gamma(x).
regularized_incomplete_beta(a, b, x) - I_x(a, b).
binomial_cdf(query) - P{B(n, p) <= k} for a single BinomialQuery.
binomial_cdf_many(n, probabilities, k) - the same CDF for an array of success probabilities.
beta_binomial_pmf(trials, a, b, k) - BetaBin(trials, a, b) probability mass at k.
beta_binomial_cdf(trials, a, b, k) - cumulative sum of the mass function.
beta_binomial_cdf_table(trials, a, b) - the full CDF over {0, ..., trials}.

All functions are pure and safe to call concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.stats import betabinom

from ..errors import DomainError

# Below this many trials the binomial CDF is summed term by term
DIRECT_SUMMATION_MAX_TRIALS = 64


@dataclass(frozen=True)
class BinomialQuery:
    """
    A single binomial CDF evaluation P{B(n, p) <= k}

    Args:
        n, int: Number of trials (n >= 0)
        p, float: Success probability in [0, 1]
        k, int: Evaluation point
    """
    n: int
    p: float
    k: int

    def __post_init__(self):
        if self.n < 0:
            raise DomainError(f"Number of trials must be non-negative, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"Success probability must lie in [0, 1], got {self.p}")


def log_gamma(x):
    """
    Natural logarithm of the gamma function

    Args:
        x, float: Positive argument

    Returns:
        float: ln Gamma(x)
    """
    if not x > 0:
        raise DomainError(f"log_gamma is defined for x > 0, got {x}")
    return float(special.gammaln(x))


def regularized_incomplete_beta(a, b, x):
    """
    Regularized incomplete beta function I_x(a, b)

    Args:
        a, float: First shape parameter (a > 0)
        b, float: Second shape parameter (b > 0)
        x, float: Upper limit of integration in [0, 1]

    Returns:
        float: I_x(a, b) in [0, 1]
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"Shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    return float(special.betainc(a, b, x))


def binomial_cdf(query):
    """
    P{B(n, p) <= k}

    Small n is summed directly, larger n goes through the identity
    P{B(n, p) <= k} = I_{1-p}(n - k, k + 1).

    Args:
        query, BinomialQuery: The trials, success probability and evaluation point

    Returns:
        float: The cumulative probability
    """
    n, p, k = query.n, query.p, query.k

    # Edge cases are exact
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0

    if n <= DIRECT_SUMMATION_MAX_TRIALS:
        return math.fsum(math.comb(n, j) * p**j * (1.0 - p) ** (n - j) for j in range(k + 1))
    return float(special.betainc(n - k, k + 1, 1.0 - p))


def binomial_cdf_many(n, probabilities, k):
    """
    P{B(n, p) <= k} for every p in an array of success probabilities

    Args:
        n, int: Number of trials
        probabilities, array-like: Success probabilities in [0, 1]
        k, int: Evaluation point

    Returns:
        np.ndarray: Cumulative probabilities, same shape as probabilities
    """
    p = np.asarray(probabilities, dtype=float)
    if n < 0:
        raise DomainError(f"Number of trials must be non-negative, got {n}")
    if p.size and (np.any(p < 0.0) or np.any(p > 1.0) or np.any(np.isnan(p))):
        raise DomainError("Success probabilities must lie in [0, 1]")

    if k < 0:
        return np.zeros_like(p)
    if k >= n:
        return np.ones_like(p)

    if n <= DIRECT_SUMMATION_MAX_TRIALS:
        # Sum the mass function over j = 0..k
        out = np.zeros_like(p)
        for j in range(k + 1):
            out = out + math.comb(n, j) * np.power(p, j) * np.power(1.0 - p, n - j)
    else:
        out = special.betainc(n - k, k + 1, 1.0 - p)

    # Saturated probabilities are exact
    out = np.where(p == 0.0, 1.0, out)
    out = np.where(p == 1.0, 0.0, out)
    return np.clip(out, 0.0, 1.0)


def _check_beta_binomial(trials, a, b):
    if trials < 0:
        raise DomainError(f"Number of trials must be non-negative, got {trials}")
    if not (a > 0 and b > 0):
        raise DomainError(f"Beta-binomial parameters must be positive, got a={a}, b={b}")


def beta_binomial_pmf(trials, a, b, k):
    """
    Probability mass of BetaBin(trials, a, b) at k

    Args:
        trials, int: Number of trials
        a, float: First beta parameter (a > 0)
        b, float: Second beta parameter (b > 0)
        k, int: Evaluation point

    Returns:
        float: C(trials, k) B(k + a, trials - k + b) / B(a, b), 0 outside {0, ..., trials}
    """
    _check_beta_binomial(trials, a, b)
    if k < 0 or k > trials:
        return 0.0
    return float(betabinom.pmf(k, trials, a, b))


def beta_binomial_cdf_table(trials, a, b):
    """
    Cumulative distribution of BetaBin(trials, a, b) over its whole support

    Args:
        trials, int: Number of trials
        a, float: First beta parameter (a > 0)
        b, float: Second beta parameter (b > 0)

    Returns:
        np.ndarray: table[k] = P{BetaBin <= k} for k = 0..trials, with table[trials] == 1
    """
    _check_beta_binomial(trials, a, b)
    pmf = betabinom.pmf(np.arange(trials + 1), trials, a, b)
    table = np.cumsum(pmf)

    # The last entry is the whole support
    table[-1] = 1.0
    return np.clip(table, 0.0, 1.0)


def beta_binomial_cdf(trials, a, b, k):
    """
    P{BetaBin(trials, a, b) <= k}

    Args:
        trials, int: Number of trials
        a, float: First beta parameter (a > 0)
        b, float: Second beta parameter (b > 0)
        k, int: Evaluation point

    Returns:
        float: The cumulative probability, 0 for k < 0 and 1 for k >= trials
    """
    _check_beta_binomial(trials, a, b)
    if k < 0:
        return 0.0
    if k >= trials:
        return 1.0
    return float(beta_binomial_cdf_table(trials, a, b)[k])


if __name__ == "__main__":
    # Example usage
    print(binomial_cdf(BinomialQuery(n=2, p=0.5, k=1)))  # Output: 0.75
    print(beta_binomial_pmf(4, 1.0, 1.0, 2))  # Output: 0.2
    print(beta_binomial_cdf(4, 1.0, 1.0, 1))  # Output: 0.4
