"""
Scorer fixtures: accessible records turned into a score matrix through a toy predictor.

parse_scorer(text) - scorer name and its exponent from 'l1', 'lp:<p>', 'zero-one', 'lac', 'cqr' or 'aps'.
split_records(features, labels, train_fraction) - leading rows fit the predictor, the rest are accessible.
fit_scorer(name, features, labels, alpha, num_labels) - scorer backed by a predictor fitted to the rows.
load_scorer_matrix(config, rng) - read, fit and score the records named by a RunConfig.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..conformal.predictors import FrequencyProbabilityModel, LeastSquaresLine, MajorityClassifier, QuantileBand
from ..conformal.scorers import (ApsScorer, CqrScorer, L1Scorer, LacScorer, LpScorer, ZeroOneScorer,
                                 build_score_matrix, counting_weights, trapezoid_weights)
from ..errors import DataError, DomainError
from .data_io import read_accessible_data, read_label_grid

logger = logging.getLogger(__name__)

REGRESSION_SCORERS = ("l1", "lp", "cqr")
CLASSIFICATION_SCORERS = ("zero-one", "lac", "aps")


def parse_scorer(text):
    """
    Parse a scorer name

    Args:
        text, str: 'l1', 'lp:<p>', 'zero-one', 'lac', 'cqr' or 'aps'

    Returns:
        tuple: (name, p), p is None except for lp
    """
    name, _, argument = str(text).strip().lower().partition(":")
    if name == "lp":
        try:
            p = float(argument)
        except ValueError as error:
            raise DomainError(f"lp scorer needs an exponent, e.g. lp:2, got {text!r}") from error
        if not p > 0 or math.isinf(p):
            raise DomainError(f"lp exponent must be positive and finite, got {p}")
        return name, p
    if name in REGRESSION_SCORERS + CLASSIFICATION_SCORERS and not argument:
        return name, None
    raise DomainError(f"Unknown scorer {text!r}, expected one of l1, lp:<p>, zero-one, lac, cqr, aps")


def split_records(features, labels, train_fraction):
    """
    Split records in file order

    Returns:
        tuple: (train_features, train_labels, accessible_features, accessible_labels)
    """
    k = len(labels)
    cut = int(math.floor(train_fraction * k))
    if cut < 2 or cut >= k:
        raise DataError(f"{k} records leave {cut} to fit the predictor and {k - cut} accessible, "
                        f"need at least 2 and 1")
    return features[:cut], labels[:cut], features[cut:], labels[cut:]


def _class_labels(labels, num_labels):
    as_int = np.asarray(labels, dtype=float)
    if np.any(as_int != np.round(as_int)) or np.any(as_int < 0):
        raise DataError("Classification labels must be non-negative integers")
    as_int = as_int.astype(int)
    if num_labels is None:
        num_labels = int(as_int.max()) + 1
    if as_int.max() >= num_labels:
        raise DataError(f"Label {as_int.max()} is outside 0..{num_labels - 1}")
    return as_int, num_labels


def _keys(features):
    # Rows become hashable for the label frequency model
    return [tuple(row) for row in np.atleast_2d(features)]


def _single_feature(features):
    features = np.atleast_2d(features)
    if features.shape[1] != 1:
        raise DataError(f"Regression scorers use one feature column, found {features.shape[1]}")
    return features[:, 0]


def fit_scorer(name, features, labels, alpha, num_labels=None):
    """
    Fit a toy predictor and wrap it in the named scorer

    Regression scorers fit a least squares line (widened into a residual quantile
    band for cqr); zero-one predicts the majority class; lac and aps use label
    frequencies per feature row.

    Args:
        name, str: Scorer name accepted by parse_scorer
        features, np.ndarray: Training features, k x d
        labels, np.ndarray: Training labels
        alpha, float: Significance level, sets the cqr band
        num_labels, int: Size of the label space for classification scorers

    Returns:
        ScoringFunction: The fitted scorer
    """
    kind, p = parse_scorer(name)
    if kind in REGRESSION_SCORERS:
        x = _single_feature(features)
        line = LeastSquaresLine.fit(x, labels)
        if kind == "l1":
            return L1Scorer(line)
        if kind == "lp":
            return LpScorer(line, p)
        return CqrScorer(QuantileBand.fit(line, x, labels, alpha))

    classes, num_labels = _class_labels(labels, num_labels)
    if kind == "zero-one":
        return ZeroOneScorer(MajorityClassifier.fit(classes), num_labels)
    model = FrequencyProbabilityModel.fit(_keys(features), classes, num_labels)
    if kind == "lac":
        return LacScorer(model)
    return ApsScorer(model)


@dataclass(frozen=True)
class ScorerFixture:
    """
    Score matrix of the accessible records with the scorer that produced it
    """
    name: str
    scorer: object
    matrix: object
    trained: int


def load_scorer_matrix(config, rng=None):
    """
    Fit the configured scorer and score the accessible records over the label grid

    Args:
        config, RunConfig: Needs data and scorer, plus labels or label_grid for regression
        rng, np.random.Generator: Randomization of aps scores

    Returns:
        ScorerFixture: The fitted scorer and the accessible score matrix
    """
    kind, _ = parse_scorer(config.scorer)
    features, labels = read_accessible_data(config.data)
    train_x, train_y, features, labels = split_records(features, labels, config.train_fraction)

    num_labels = None
    if kind in CLASSIFICATION_SCORERS:
        _, num_labels = _class_labels(np.concatenate([train_y, labels]), config.num_labels)
    scorer = fit_scorer(config.scorer, train_x, train_y, config.alpha, num_labels)

    if kind in REGRESSION_SCORERS:
        if config.labels is not None:
            grid = np.asarray(config.labels, dtype=float)
        elif config.label_grid is not None:
            grid = read_label_grid(config.label_grid)
        else:
            raise DomainError("Regression scorers need a label grid, pass --labels or --label-grid")
        measure = config.label_measure or "trapezoid"
        x = _single_feature(features)
    else:
        labels, _ = _class_labels(labels, num_labels)
        grid = np.arange(num_labels)
        measure = config.label_measure or "counting"
        x = _keys(features)

    weights = trapezoid_weights(grid) if measure == "trapezoid" else counting_weights(len(grid))
    matrix = build_score_matrix(scorer, x, labels, grid, weights=weights, rng=rng)
    logger.info("Scored %d accessible records over %d labels with %s", matrix.k, len(grid), config.scorer)
    return ScorerFixture(config.scorer, scorer, matrix, len(train_y))
