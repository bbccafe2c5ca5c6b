"""
Non-conformity functions and score matrices.

l1_score / lp_score / lp_high_dim_score - regression residual losses.
zero_one_score - misclassification indicator.
lac_score - one minus the predicted probability of the label.
cqr_score - signed distance outside a predicted quantile interval.
aps_score - randomized cumulative probability of labels ranked above the label.

Each loss also has a ScoringFunction class declaring its multiplicative factor and
score space lower bound. build_score_matrix evaluates a scorer over a label grid for
every accessible data point, producing the ScoreMatrix used by the unknown-factor
and feature-conditional estimators.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..errors import DataError, DomainError
from ..set_size.factors import FactorSpec

SIMPLEX_TOLERANCE = 1e-9


def _check_simplex(probabilities):
    probabilities = np.asarray(probabilities, dtype=float)
    if probabilities.ndim != 1 or probabilities.size == 0:
        raise DomainError("Predicted probabilities must be a non-empty list")
    if np.any(probabilities < 0) or abs(probabilities.sum() - 1.0) > SIMPLEX_TOLERANCE:
        raise DomainError(f"Predicted probabilities must be non-negative and sum to 1, got {probabilities}")
    return probabilities


def l1_score(predictor, x, y):
    """
    |M(x) - y|
    """
    return abs(predictor(x) - y)


def lp_score(predictor, x, y, p):
    """
    |M(x) - y|^p
    """
    return abs(predictor(x) - y) ** p


def lp_high_dim_score(predictor, x, y, p):
    """
    ||M(x) - y||_p^p for vector labels
    """
    residual = np.asarray(predictor(x), dtype=float) - np.asarray(y, dtype=float)
    return float(np.sum(np.abs(residual) ** p))


def zero_one_score(classifier, x, y):
    """
    1 if the classifier's label differs from y, else 0
    """
    return 0.0 if classifier(x) == y else 1.0


def lac_score(prob_model, x, y):
    """
    1 - M_y(x)

    Args:
        prob_model, callable: Feature to probability list over labels 0..L-1
        x: Feature
        y, int: Label index

    Returns:
        float: Score in [0, 1]
    """
    probabilities = _check_simplex(prob_model(x))
    return 1.0 - float(probabilities[y])


def cqr_score(quantile_pair, x, y):
    """
    max{low(x) - y, y - high(x)}, negative inside the predicted interval

    Args:
        quantile_pair, callable: Feature to (low, high) quantile predictions
        x: Feature
        y, float: Label

    Returns:
        float: The score
    """
    low, high = quantile_pair(x)
    if low > high:
        raise DomainError(f"Quantile predictions are inverted: low={low} > high={high}")
    return max(low - y, y - high)


def aps_score(prob_model, x, y, u):
    """
    u M_y(x) + sum of the probabilities strictly greater than M_y(x)

    Labels tied with y contribute nothing to the sum.

    Args:
        prob_model, callable: Feature to probability list over labels 0..L-1
        x: Feature
        y, int: Label index
        u, float: Randomization in [0, 1]

    Returns:
        float: Score in [0, 1]
    """
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"APS randomization must lie in [0, 1], got {u}")
    probabilities = _check_simplex(prob_model(x))
    own = probabilities[y]
    return float(u * own + probabilities[probabilities > own].sum())


class ScoringFunction(ABC):
    """
    Non-conformity function R(x, y) with its declared factor and score space
    """
    factor = FactorSpec.unknown()
    score_space_min = -math.inf
    randomized = False

    @abstractmethod
    def score(self, x, y, u=None):
        """
        Return R(x, y); u is the per-datum randomization of randomized scorers
        """

    def score_grid(self, x, label_grid, u=None):
        """
        Return R(x, y_j) for every label of a grid
        """
        return np.array([self.score(x, y, u) for y in label_grid], dtype=float)


class L1Scorer(ScoringFunction):
    factor = FactorSpec.l1()
    score_space_min = 0.0

    def __init__(self, predictor):
        self.predictor = predictor

    def score(self, x, y, u=None):
        return l1_score(self.predictor, x, y)

    def score_grid(self, x, label_grid, u=None):
        return np.abs(self.predictor(x) - np.asarray(label_grid, dtype=float))


class LpScorer(ScoringFunction):
    score_space_min = 0.0

    def __init__(self, predictor, p):
        self.predictor = predictor
        self.p = p
        self.factor = FactorSpec.lp(p)

    def score(self, x, y, u=None):
        return lp_score(self.predictor, x, y, self.p)

    def score_grid(self, x, label_grid, u=None):
        return np.abs(self.predictor(x) - np.asarray(label_grid, dtype=float)) ** self.p


class LpHighDimScorer(ScoringFunction):
    score_space_min = 0.0

    def __init__(self, predictor, p, m):
        self.predictor = predictor
        self.p = p
        self.factor = FactorSpec.lp_high_dim(p, m)

    def score(self, x, y, u=None):
        return lp_high_dim_score(self.predictor, x, y, self.p)


class ZeroOneScorer(ScoringFunction):
    score_space_min = 0.0

    def __init__(self, classifier, num_labels):
        self.classifier = classifier
        self.factor = FactorSpec.zero_one(num_labels)

    def score(self, x, y, u=None):
        return zero_one_score(self.classifier, x, y)


class LacScorer(ScoringFunction):
    score_space_min = 0.0

    def __init__(self, prob_model):
        self.prob_model = prob_model

    def score(self, x, y, u=None):
        return lac_score(self.prob_model, x, y)


class CqrScorer(ScoringFunction):

    def __init__(self, quantile_pair):
        self.quantile_pair = quantile_pair

    def score(self, x, y, u=None):
        return cqr_score(self.quantile_pair, x, y)


class ApsScorer(ScoringFunction):
    score_space_min = 0.0
    randomized = True

    def __init__(self, prob_model):
        self.prob_model = prob_model

    def score(self, x, y, u=None):
        if u is None:
            raise DomainError("APS scores need an explicit randomization u")
        return aps_score(self.prob_model, x, y, u)


def counting_weights(num_labels):
    """
    Counting measure over a discrete label grid
    """
    return np.ones(num_labels)


def trapezoid_weights(label_grid):
    """
    Trapezoid quadrature weights for a strictly increasing continuous label grid

    Args:
        label_grid, array-like: At least 2 label values

    Returns:
        np.ndarray: One weight per grid point
    """
    grid = np.asarray(label_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise DataError("Trapezoid weights need a one-dimensional grid of at least 2 labels")
    spacing = np.diff(grid)
    if np.any(spacing <= 0):
        raise DataError("Label grid must be strictly increasing for trapezoid weights")
    weights = np.zeros_like(grid)
    weights[:-1] += spacing / 2.0
    weights[1:] += spacing / 2.0
    return weights


@dataclass(frozen=True)
class ScoreMatrix:
    """
    Scores of k accessible points over a label grid

    Args:
        scores, np.ndarray: k x G matrix with entries R(X'_i, y_j)
        label_grid, tuple: The G labels
        weights, np.ndarray: Label measure weight per grid label
        marginal, np.ndarray: R(X'_i, Y'_i), the scores at the true labels
    """
    scores: np.ndarray
    label_grid: tuple
    weights: np.ndarray
    marginal: np.ndarray

    def __post_init__(self):
        scores = np.atleast_2d(np.asarray(self.scores, dtype=float))
        weights = np.asarray(self.weights, dtype=float).ravel()
        marginal = np.asarray(self.marginal, dtype=float).ravel()
        if scores.size == 0:
            raise DataError("Score matrix is empty")
        k, num_labels = scores.shape
        if len(self.label_grid) != num_labels or weights.size != num_labels:
            raise DataError(f"Score matrix has {num_labels} columns but {len(self.label_grid)} labels "
                            f"and {weights.size} weights")
        if marginal.size != k:
            raise DataError(f"Score matrix has {k} rows but {marginal.size} marginal scores")
        if np.any(weights < 0):
            raise DataError("Label weights must be non-negative")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "marginal", marginal)
        object.__setattr__(self, "label_grid", tuple(self.label_grid))

    @property
    def k(self):
        return self.scores.shape[0]

    @property
    def total_label_measure(self):
        return float(self.weights.sum())


def build_score_matrix(scorer, features, labels, label_grid, weights=None, rng=None):
    """
    Evaluate a scorer over a label grid for every accessible data point

    Args:
        scorer, ScoringFunction: The non-conformity function
        features, sequence: Accessible features X'_1..X'_k
        labels, sequence: Accessible labels Y'_1..Y'_k
        label_grid, sequence: Labels y_1..y_G to score against
        weights, array-like: Label measure weights (default counting measure)
        rng, np.random.Generator: Source of the per-row u for randomized scorers

    Returns:
        ScoreMatrix: Entries R(X'_i, y_j) and marginal scores R(X'_i, Y'_i)
    """
    features = list(features)
    labels = list(labels)
    label_grid = list(label_grid)
    if len(features) == 0:
        raise DataError("No accessible data points to score")
    if len(features) != len(labels):
        raise DataError(f"Got {len(features)} features but {len(labels)} labels")
    if len(label_grid) == 0:
        raise DataError("Label grid is empty")
    if weights is None:
        weights = counting_weights(len(label_grid))

    if scorer.randomized:
        if rng is None:
            raise DomainError("A seeded generator is required for randomized scorers")
        draws = rng.random(len(features))
    else:
        draws = [None] * len(features)

    rows = []
    marginal = []
    for x, y, u in zip(features, labels, draws):
        rows.append(scorer.score_grid(x, label_grid, u))
        marginal.append(scorer.score(x, y, u))

    return ScoreMatrix(np.vstack(rows), tuple(label_grid), weights, np.array(marginal, dtype=float))
