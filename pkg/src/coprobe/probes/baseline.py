from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_X_y

from ._base import ProbeMixin, classes_to_json, encode_labels


class MostFrequentProbe(ProbeMixin, ClassifierMixin, BaseEstimator):
    """Always predicts the modal training label (smallest label on count ties)."""

    probe_kind = "most_frequent"

    def __init__(self, random_state=0):
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, ensure_all_finite=False)
        self.n_features_in_ = X.shape[1]
        self.classes_, codes = encode_labels(y)
        self.counts_ = np.bincount(codes, minlength=len(self.classes_))
        self.mode_index_ = int(np.argmax(self.counts_))
        return self

    def predict_proba(self, X):
        X = self._check_predict_input(X)
        out = np.zeros((X.shape[0], len(self.classes_)))
        out[:, self.mode_index_] = 1.0
        return out

    def predict(self, X):
        X = self._check_predict_input(X)
        return np.repeat(self.classes_[self.mode_index_:self.mode_index_ + 1], X.shape[0])

    def _export(self):
        return ({"n_features_in": self.n_features_in_, "classes": classes_to_json(self.classes_),
                 "mode_index": self.mode_index_}, {"counts": self.counts_})

    def _import(self, meta, arrays):
        self.n_features_in_ = meta["n_features_in"]
        self.classes_ = np.array(meta["classes"])
        self.mode_index_ = meta["mode_index"]
        self.counts_ = arrays["counts"]
