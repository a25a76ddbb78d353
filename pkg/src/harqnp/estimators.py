"""Scikit-learn style wrapper: calibrate a randomized threshold at level alpha.

The estimator consumes precomputed statistic values (one column) and binary
outcomes (1 = decodable). ``fit`` chooses ``(c, tau)`` so that exactly a
fraction ``1 - alpha`` of the decodable training samples is accepted in
expectation; ``predict`` then applies the randomized test.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .predictors import RandomizedThreshold, apply_test_batch


def calibrate_threshold(values, alpha):
    """Threshold and randomization giving acceptance ``1 - alpha`` on ``values``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    v = np.sort(np.asarray(values, dtype=float))[::-1]
    if v.size == 0:
        raise ValueError("no decodable samples to calibrate on")
    target = (1.0 - alpha) * v.size
    if target <= 0:
        return RandomizedThreshold(v[0], 0.0)
    # smallest level whose "accept at or above" count reaches the target
    c = v[min(int(np.ceil(target)) - 1, v.size - 1)]
    above = int((v > c).sum())
    tied = int((v == c).sum())
    tau = float(np.clip((target - above) / tied, 0.0, 1.0))
    return RandomizedThreshold(float(c), tau)


class ThresholdPredictor(ClassifierMixin, BaseEstimator):
    """Randomized threshold test on a scalar decodability statistic.

    Parameters
    ----------
    alpha : float
        Target rate of rejecting decodable receptions.
    random_state : int, Generator or None
        Source of the tie-breaking randomization in :meth:`predict`.

    Attributes
    ----------
    threshold_ : RandomizedThreshold
    classes_ : ndarray
    """

    def __init__(self, alpha=0.01, random_state=None):
        self.alpha = alpha
        self.random_state = random_state

    def _values(self, X):
        X = check_array(X, ensure_all_finite=False, ensure_2d=False)
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError("expected a single statistic column")
            X = X[:, 0]
        if np.isnan(X).any() or np.isposinf(X).any():
            raise ValueError("statistic values must be finite or -inf")
        return X

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_all_finite=False, ensure_2d=False)
        values = self._values(X)
        y = np.asarray(y).astype(bool)
        self.classes_ = np.array([0, 1])
        self.threshold_ = calibrate_threshold(values[y], self.alpha)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "threshold_")
        return self._values(X) - self.threshold_.c

    def predict(self, X):
        check_is_fitted(self, "threshold_")
        rng = check_random_state(self.random_state)
        return apply_test_batch(self._values(X), self.threshold_, rng).astype(int)
