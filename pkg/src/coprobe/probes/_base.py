from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted


class ColumnStandardizer:
    """Drop constant columns, then z-score the rest with training statistics."""

    def fit(self, X):
        X = np.asarray(X, dtype=np.float64)
        keep = X.max(axis=0) > X.min(axis=0) if X.shape[0] else np.zeros(X.shape[1], bool)
        self.keep_ = keep
        kept = X[:, keep]
        self.mean_ = kept.mean(axis=0)
        scale = kept.std(axis=0)
        scale[scale == 0] = 1.0
        self.scale_ = scale
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64)[:, self.keep_] - self.mean_) / self.scale_

    def fit_transform(self, X):
        return self.fit(X).transform(X)

    def state(self) -> dict:
        return {"keep": self.keep_.astype(np.uint8), "mean": self.mean_, "scale": self.scale_}

    @classmethod
    def from_state(cls, arrays) -> "ColumnStandardizer":
        obj = cls()
        obj.keep_ = arrays["keep"].astype(bool)
        obj.mean_ = arrays["mean"]
        obj.scale_ = arrays["scale"]
        return obj


class ProbeMixin:
    """Shared input checks and the hooks used by :mod:`coprobe.probes.serialization`.

    Subclasses set ``probe_kind`` and implement ``_export`` / ``_import``.
    """

    probe_kind: str = ""

    def _check_predict_input(self, X):
        check_is_fitted(self)
        X = check_array(X, dtype=np.float64, ensure_min_samples=0)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"is expecting {self.n_features_in_} features as input")
        return X

    def _export(self) -> tuple[dict, dict]:
        raise NotImplementedError

    def _import(self, meta: dict, arrays: dict) -> None:
        raise NotImplementedError


def encode_labels(y):
    classes, codes = np.unique(np.asarray(y), return_inverse=True)
    return classes, codes.astype(np.int64)


def classes_to_json(classes) -> list:
    return [c.item() if hasattr(c, "item") else c for c in classes]
