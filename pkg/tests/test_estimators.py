import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from harqnp.estimators import ThresholdPredictor, calibrate_threshold


class TestCalibrate:
    def test_exact_level_with_ties(self):
        values = np.array([0, 1, 1, 1, 2, 3], dtype=float)
        th = calibrate_threshold(values, 0.25)
        accept = (values > th.c).mean() + th.tau * (values == th.c).mean()
        assert accept == pytest.approx(0.75)

    def test_extremes(self):
        values = np.arange(5.0)
        assert calibrate_threshold(values, 1.0).tau == 0.0
        th = calibrate_threshold(values, 0.0)
        assert th.c == 0.0 and th.tau == 1.0

    def test_invalid(self):
        with pytest.raises(ValueError):
            calibrate_threshold([1.0], 1.5)
        with pytest.raises(ValueError):
            calibrate_threshold([], 0.1)


class TestThresholdPredictor:
    def data(self, rng, n=4000):
        y = (rng.random(n) < 0.6).astype(int)
        X = (rng.standard_normal(n) + 2 * y)[:, None]
        return X, y

    def test_alpha_level(self, rng):
        X, y = self.data(rng)
        est = ThresholdPredictor(alpha=0.1, random_state=0).fit(X, y)
        pred = est.predict(X)
        assert abs(1 - pred[y == 1].mean() - 0.1) < 0.01
        assert set(np.unique(pred)) <= {0, 1}

    def test_clone_and_params(self):
        est = ThresholdPredictor(alpha=0.05, random_state=3)
        assert clone(est).get_params() == {"alpha": 0.05, "random_state": 3}

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            ThresholdPredictor().predict(np.zeros((2, 1)))

    def test_decision_function(self, rng):
        X, y = self.data(rng)
        est = ThresholdPredictor(alpha=0.2).fit(X, y)
        np.testing.assert_allclose(est.decision_function(X), X[:, 0] - est.threshold_.c)

    def test_neg_inf_accepted(self):
        X = np.array([-np.inf, 0.0, 1.0, 2.0])
        est = ThresholdPredictor(alpha=0.0, random_state=0).fit(X, [1, 1, 1, 0])
        assert est.predict(X).tolist() == [1, 1, 1, 1]

    def test_rejects_nan_and_columns(self):
        with pytest.raises(ValueError):
            ThresholdPredictor().fit(np.array([np.nan, 1.0]), [0, 1])
        with pytest.raises(ValueError):
            ThresholdPredictor().fit(np.zeros((3, 2)), [0, 1, 1])

    def test_reproducible(self, rng):
        X = np.ones((100, 1))
        y = np.ones(100, dtype=int)
        est = ThresholdPredictor(alpha=0.5, random_state=7).fit(X, y)
        assert est.predict(X).tolist() == ThresholdPredictor(alpha=0.5, random_state=7).fit(X, y).predict(X).tolist()
