"""
Toy predictors that feed the scorers without any machine learning framework.

ConstantPredictor - always predicts the same value.
LeastSquaresLine - one-dimensional closed form least squares.
MajorityClassifier - always predicts the most frequent training label.
FrequencyProbabilityModel - empirical label frequencies, per feature value when seen.
QuantileBand - a point predictor widened by empirical residual quantiles.
"""

import numpy as np

from ..errors import DataError


class ConstantPredictor:
    def __init__(self, value):
        self.value = value

    def __call__(self, x):
        return self.value


class LeastSquaresLine:
    """
    Closed form fit of y = intercept + slope * x
    """

    def __init__(self, intercept=0.0, slope=0.0):
        self.intercept = intercept
        self.slope = slope

    @classmethod
    def fit(cls, features, labels):
        """
        Fit the line to one-dimensional features

        Args:
            features, array-like: Training features
            labels, array-like: Training labels

        Returns:
            LeastSquaresLine: The fitted line
        """
        x = np.asarray(features, dtype=float)
        y = np.asarray(labels, dtype=float)
        if x.size < 2 or x.size != y.size:
            raise DataError("Least squares needs at least 2 paired points")
        design = np.column_stack([np.ones_like(x), x])
        (intercept, slope), *_ = np.linalg.lstsq(design, y, rcond=None)
        return cls(float(intercept), float(slope))

    def __call__(self, x):
        return self.intercept + self.slope * x


class MajorityClassifier:
    def __init__(self, label):
        self.label = label

    @classmethod
    def fit(cls, labels):
        values, counts = np.unique(np.asarray(labels), return_counts=True)
        if values.size == 0:
            raise DataError("Cannot fit a classifier without labels")
        return cls(values[np.argmax(counts)].item())

    def __call__(self, x):
        return self.label


class FrequencyProbabilityModel:
    """
    Label probabilities from training frequencies

    Features seen during fitting get their own frequencies; unseen features fall
    back to the overall label frequencies.
    """

    def __init__(self, marginal, per_feature):
        self.marginal = marginal
        self.per_feature = per_feature

    @classmethod
    def fit(cls, features, labels, num_labels):
        """
        Count label frequencies

        Args:
            features, sequence: Hashable training features
            labels, sequence: Integer labels in 0..num_labels-1
            num_labels, int: Size of the label space

        Returns:
            FrequencyProbabilityModel: The fitted model
        """
        labels = np.asarray(labels, dtype=int)
        if labels.size == 0:
            raise DataError("Cannot fit a probability model without labels")
        marginal = np.bincount(labels, minlength=num_labels) / labels.size

        per_feature = {}
        for x, y in zip(features, labels):
            per_feature.setdefault(x, np.zeros(num_labels))[y] += 1
        per_feature = {x: counts / counts.sum() for x, counts in per_feature.items()}
        return cls(marginal, per_feature)

    def __call__(self, x):
        return self.per_feature.get(x, self.marginal)


class QuantileBand:
    """
    (low, high) predictions from a point predictor and residual quantiles
    """

    def __init__(self, predictor, low_offset, high_offset):
        self.predictor = predictor
        self.low_offset = low_offset
        self.high_offset = high_offset

    @classmethod
    def fit(cls, predictor, features, labels, alpha):
        """
        Take the alpha/2 and 1 - alpha/2 residual quantiles as the band offsets
        """
        residuals = np.asarray(labels, dtype=float) - np.array([predictor(x) for x in features], dtype=float)
        if residuals.size == 0:
            raise DataError("Cannot fit a quantile band without data")
        low, high = np.quantile(residuals, [alpha / 2.0, 1.0 - alpha / 2.0])
        return cls(predictor, float(low), float(high))

    def __call__(self, x):
        center = self.predictor(x)
        return center + self.low_offset, center + self.high_offset
