"""Tests for the binomial and beta-binomial distribution functions."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad
from scipy.special import beta, betaln

from src.errors import DomainError
from src.special.special_functions import (
    BinomialQuery,
    beta_binomial_cdf,
    beta_binomial_cdf_table,
    beta_binomial_pmf,
    binomial_cdf,
    binomial_cdf_many,
    log_gamma,
    regularized_incomplete_beta,
)


def _direct_binomial_cdf(n, p, k):
    if k < 0:
        return 0.0
    return math.fsum(math.comb(n, j) * p**j * (1.0 - p) ** (n - j) for j in range(min(k, n) + 1))


class TestLogGamma:

    def test_known_values(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
        assert log_gamma(0.5) == pytest.approx(0.5723649429, abs=1e-10)
        assert log_gamma(6.0) == pytest.approx(math.log(120.0), rel=1e-14)

    @pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
    def test_non_positive_argument(self, x):
        with pytest.raises(DomainError):
            log_gamma(x)


class TestIncompleteBeta:

    def test_endpoints(self):
        assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0

    def test_uniform_case(self):
        assert regularized_incomplete_beta(1.0, 1.0, 0.3) == pytest.approx(0.3, abs=1e-15)

    def test_polynomial_case(self):
        # I_x(2, 3) = x^2 (6 - 8x + 3x^2)
        assert regularized_incomplete_beta(2.0, 3.0, 0.5) == pytest.approx(0.6875, abs=1e-14)

    def test_matches_quadrature_of_defining_integral(self):
        rng = np.random.default_rng(41)
        for _ in range(40):
            a, b = rng.uniform(1.0, 8.0, size=2)
            x = float(rng.uniform(0.0, 1.0))
            integral, _ = quad(lambda t: t ** (a - 1.0) * (1.0 - t) ** (b - 1.0), 0.0, x,
                               epsabs=1e-15, epsrel=1e-13, limit=200)
            assert regularized_incomplete_beta(a, b, x) == pytest.approx(integral / beta(a, b), abs=1e-10)

    @pytest.mark.parametrize("a,b,x", [(0.0, 1.0, 0.5), (1.0, -1.0, 0.5), (1.0, 1.0, 1.5), (1.0, 1.0, -0.1)])
    def test_domain(self, a, b, x):
        with pytest.raises(DomainError):
            regularized_incomplete_beta(a, b, x)


class TestBinomialCdf:

    def test_enumerated_value(self):
        assert binomial_cdf(BinomialQuery(n=2, p=0.5, k=1)) == pytest.approx(0.75, abs=1e-15)

    def test_edge_cases_are_exact(self):
        assert binomial_cdf(BinomialQuery(n=5, p=0.0, k=0)) == 1.0
        assert binomial_cdf(BinomialQuery(n=5, p=1.0, k=4)) == 0.0
        assert binomial_cdf(BinomialQuery(n=5, p=0.3, k=-1)) == 0.0
        assert binomial_cdf(BinomialQuery(n=5, p=0.3, k=5)) == 1.0
        assert binomial_cdf(BinomialQuery(n=5, p=1.0, k=5)) == 1.0

    def test_direct_summation_oracle(self):
        for n in range(0, 31):
            for p in np.linspace(0.0, 1.0, 21):
                for k in range(-1, n + 1):
                    assert binomial_cdf(BinomialQuery(n, float(p), k)) == pytest.approx(
                        _direct_binomial_cdf(n, float(p), k), abs=1e-12)

    def test_large_n_matches_scipy(self):
        for n, k in [(100, 30), (500, 260), (2000, 1799)]:
            for p in [0.01, 0.3, 0.5, 0.9]:
                expected = stats.binom.cdf(k, n, p)
                assert binomial_cdf(BinomialQuery(n, p, k)) == pytest.approx(expected, rel=1e-9, abs=1e-14)

    def test_invalid_query(self):
        with pytest.raises(DomainError):
            BinomialQuery(n=-1, p=0.5, k=0)
        with pytest.raises(DomainError):
            BinomialQuery(n=3, p=1.5, k=0)


class TestBinomialCdfMany:

    @pytest.mark.parametrize("n", [1, 7, 64, 65, 300])
    def test_matches_scalar(self, n):
        p = np.linspace(0.0, 1.0, 41)
        for k in [-1, 0, n // 3, n - 1, n]:
            expected = [binomial_cdf(BinomialQuery(n, float(q), k)) for q in p]
            np.testing.assert_allclose(binomial_cdf_many(n, p, k), expected, rtol=1e-10, atol=1e-13)

    def test_keeps_shape(self):
        p = np.full((3, 4), 0.25)
        assert binomial_cdf_many(10, p, 2).shape == (3, 4)

    def test_rejects_invalid_probabilities(self):
        with pytest.raises(DomainError):
            binomial_cdf_many(10, [0.2, 1.2], 3)

    def test_monotone_in_p(self):
        rng = np.random.default_rng(7)
        p = np.linspace(0.0, 1.0, 201)
        for _ in range(200):
            n = int(rng.integers(1, 150))
            k = int(rng.integers(0, n))
            values = binomial_cdf_many(n, p, k)
            assert np.all(np.diff(values) <= 1e-12)


class TestBetaBinomial:

    def test_uniform_case(self):
        assert beta_binomial_pmf(4, 1.0, 1.0, 2) == pytest.approx(0.2, abs=1e-14)
        assert beta_binomial_cdf(4, 1.0, 1.0, 1) == pytest.approx(0.4, abs=1e-14)

    def test_hand_value(self):
        assert beta_binomial_pmf(1, 2.0, 2.0, 1) == pytest.approx(0.5, abs=1e-14)

    def test_outside_support(self):
        assert beta_binomial_pmf(3, 1.0, 1.0, 5) == 0.0
        assert beta_binomial_pmf(3, 1.0, 1.0, -1) == 0.0
        assert beta_binomial_cdf(3, 2.0, 5.0, -1) == 0.0
        assert beta_binomial_cdf(3, 2.0, 5.0, 3) == 1.0

    def test_matches_closed_form(self):
        trials, a, b = 9, 0.25, 4.0
        for k in range(trials + 1):
            expected = math.comb(trials, k) * math.exp(betaln(k + a, trials - k + b) - betaln(a, b))
            assert beta_binomial_pmf(trials, a, b, k) == pytest.approx(expected, rel=1e-10)

    def test_pmf_sums_to_one(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            trials = int(rng.integers(0, 300))
            a, b = np.exp(rng.uniform(np.log(0.0625), np.log(16.0), size=2))
            total = math.fsum(beta_binomial_pmf(trials, a, b, k) for k in range(trials + 1))
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_table(self):
        table = beta_binomial_cdf_table(20, 0.0625, 16.0)
        assert table.shape == (21,)
        assert table[-1] == 1.0
        assert np.all(np.diff(table) >= 0)

    def test_invalid_parameters(self):
        with pytest.raises(DomainError):
            beta_binomial_pmf(3, 0.0, 1.0, 1)
        with pytest.raises(DomainError):
            beta_binomial_cdf_table(-1, 1.0, 1.0)
