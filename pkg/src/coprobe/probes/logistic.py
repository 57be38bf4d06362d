from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_X_y

from ._base import ColumnStandardizer, ProbeMixin, classes_to_json, encode_labels


def _softmax(logits):
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _objective(theta, Z, Y, C):
    """Mean multinomial cross-entropy plus ||W||^2 / (2 C n), and its gradient."""
    n, p = Z.shape
    k = Y.shape[1]
    W = theta[:p * k].reshape(p, k)
    b = theta[p * k:]
    logits = Z @ W + b
    shift = logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits - shift).sum(axis=1, keepdims=True)) + shift
    loss = float(np.sum(Y * (log_norm - logits))) / n + float(np.sum(W * W)) / (2 * C * n)
    d = (np.exp(logits - log_norm) - Y) / n
    gW = Z.T @ d + W / (C * n)
    return loss, np.concatenate([gW.ravel(), d.sum(axis=0)])


class LogisticProbe(ProbeMixin, ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression on standardized, variance-filtered columns.

    L2 strength follows the usual ``C`` convention (``C * sum(loss) + ||W||^2 / 2``).
    """

    probe_kind = "logistic"

    def __init__(self, C=1.0, max_iter=1000, tol=1e-10, random_state=0):
        self.C = C
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.classes_, codes = encode_labels(y)
        self.scaler_ = ColumnStandardizer()
        Z = self.scaler_.fit_transform(X)
        k = len(self.classes_)
        p = Z.shape[1]
        if k == 1:
            self.coef_, self.intercept_ = np.zeros((p, 1)), np.zeros(1)
            return self
        Y = np.eye(k)[codes]
        res = minimize(_objective, np.zeros(p * k + k), args=(Z, Y, self.C), jac=True,
                       method="L-BFGS-B",
                       options={"maxiter": self.max_iter, "gtol": self.tol, "ftol": 1e-15})
        self.n_iter_ = int(res.nit)
        self.coef_ = res.x[:p * k].reshape(p, k)
        self.intercept_ = res.x[p * k:]
        return self

    def decision_function(self, X):
        X = self._check_predict_input(X)
        return self.scaler_.transform(X) @ self.coef_ + self.intercept_

    def predict_proba(self, X):
        return _softmax(self.decision_function(X))

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def _export(self):
        meta = {"n_features_in": self.n_features_in_,
                "classes": classes_to_json(self.classes_)}
        return meta, {**self.scaler_.state(), "coef": self.coef_, "intercept": self.intercept_}

    def _import(self, meta, arrays):
        self.n_features_in_ = meta["n_features_in"]
        self.classes_ = np.array(meta["classes"])
        self.scaler_ = ColumnStandardizer.from_state(arrays)
        self.coef_ = arrays["coef"]
        self.intercept_ = arrays["intercept"]
