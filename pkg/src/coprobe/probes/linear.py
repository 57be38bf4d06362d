from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_X_y

from ._base import ColumnStandardizer, ProbeMixin


class LinearProbe(ProbeMixin, RegressorMixin, BaseEstimator):
    """Least squares on standardized, variance-filtered columns.

    Uses the minimum-norm solution when the design is rank deficient.
    """

    probe_kind = "linear"

    def __init__(self, random_state=0):
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        self.scaler_ = ColumnStandardizer()
        Z = self.scaler_.fit_transform(X)
        constant = y.max() == y.min()
        self.intercept_ = float(y[0] if constant else y.mean())
        if Z.shape[1] and not constant:
            self.coef_, *_ = np.linalg.lstsq(Z, y - self.intercept_, rcond=None)
        else:
            self.coef_ = np.zeros(Z.shape[1])
        return self

    def predict(self, X):
        X = self._check_predict_input(X)
        return self.scaler_.transform(X) @ self.coef_ + self.intercept_

    def _export(self):
        return ({"n_features_in": self.n_features_in_, "intercept": self.intercept_},
                {**self.scaler_.state(), "coef": self.coef_})

    def _import(self, meta, arrays):
        self.n_features_in_ = meta["n_features_in"]
        self.intercept_ = meta["intercept"]
        self.scaler_ = ColumnStandardizer.from_state(arrays)
        self.coef_ = arrays["coef"]
