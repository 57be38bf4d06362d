"""Collapse per-token activations into one fixed-length vector per instance."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin


class PoolingStrategy(str, Enum):
    mean = "mean"
    max = "max"
    last = "last"


@dataclass(frozen=True, eq=False)
class PooledEmbedding:
    instance_name: str
    representation: str
    strategy: PoolingStrategy
    vector: np.ndarray  # (dim,) float64


def pool_array(data, strategy) -> np.ndarray:
    """Pool a (tokens, dim) array. ``last`` is the end-of-sequence row."""
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
        raise ValueError(f"cannot pool an empty or non-2-D matrix of shape {data.shape}")
    strategy = PoolingStrategy(strategy)
    if strategy is PoolingStrategy.mean:
        return data.mean(axis=0, dtype=np.float64)
    if strategy is PoolingStrategy.max:
        return data.max(axis=0).astype(np.float64)
    return data[-1].astype(np.float64)


def pool(m, strategy) -> PooledEmbedding:
    """Pool an :class:`~coprobe.llmio.ActivationMatrix`."""
    vec = pool_array(m.data, strategy)
    return PooledEmbedding(m.instance_name, m.representation, PoolingStrategy(strategy), vec)


class ActivationPooler(TransformerMixin, BaseEstimator):
    """Stateless transformer: a sequence of activation matrices -> (n, dim) array.

    Accepts ``ActivationMatrix`` objects or plain 2-D arrays.
    """

    def __init__(self, strategy="mean"):
        self.strategy = strategy

    def fit(self, X, y=None):
        PoolingStrategy(self.strategy)
        return self

    def transform(self, X):
        rows = [pool_array(getattr(m, "data", m), self.strategy) for m in X]
        if not rows:
            return np.empty((0, 0))
        dims = {r.shape[0] for r in rows}
        if len(dims) != 1:
            raise ValueError(f"activation dims differ within a batch: {sorted(dims)}")
        return np.vstack(rows)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags
