"""Probe families for feature decoding (regressors) and algorithm selection (classifiers).

Every probe is a scikit-learn estimator, so it drops into pipelines,
``clone`` and model-selection utilities unchanged.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .baseline import MostFrequentProbe
from .gbdt import GBDTClassifier, GBDTRegressor
from .linear import LinearProbe
from .logistic import LogisticProbe
from .mlp import MLPProbeClassifier, MLPProbeRegressor
from .serialization import ModelFormatError, dumps, loads

REGRESSOR_KINDS = ("linear", "mlp", "gbdt")
CLASSIFIER_KINDS = ("most_frequent", "logistic", "mlp", "gbdt")


@dataclass
class MLPConfig:
    hidden_width: int = 128
    epochs: int = 200
    learning_rate: float = 1e-3
    batch_size: int = 64
    validation_fraction: float = 0.1
    patience: int = 20


@dataclass
class GBDTConfig:
    n_trees: int = 200
    max_depth: int = 6
    learning_rate: float = 0.1
    min_leaf: int = 20
    max_bins: int = 255


@dataclass
class TrainConfig:
    seed: int = 0
    mlp: MLPConfig = field(default_factory=MLPConfig)
    gbdt: GBDTConfig = field(default_factory=GBDTConfig)
    logistic_c: float = 1.0

    def __post_init__(self):
        if isinstance(self.mlp, dict):
            self.mlp = MLPConfig(**self.mlp)
        if isinstance(self.gbdt, dict):
            self.gbdt = GBDTConfig(**self.gbdt)
        for name, v in {**asdict(self.mlp), **asdict(self.gbdt),
                        "logistic_c": self.logistic_c}.items():
            if name == "validation_fraction":
                if not 0 <= v < 1:
                    raise ValueError("validation_fraction must lie in [0, 1)")
            elif not v > 0:
                raise ValueError(f"{name} must be positive, got {v!r}")


def make_regressor(kind: str, cfg: TrainConfig | None = None):
    cfg = cfg or TrainConfig()
    if kind == "linear":
        return LinearProbe(random_state=cfg.seed)
    if kind == "mlp":
        return MLPProbeRegressor(random_state=cfg.seed, **asdict(cfg.mlp))
    if kind == "gbdt":
        return GBDTRegressor(random_state=cfg.seed, **asdict(cfg.gbdt))
    raise ValueError(f"unknown regressor kind {kind!r}; expected one of {REGRESSOR_KINDS}")


def make_classifier(kind: str, cfg: TrainConfig | None = None):
    cfg = cfg or TrainConfig()
    if kind == "most_frequent":
        return MostFrequentProbe(random_state=cfg.seed)
    if kind == "logistic":
        return LogisticProbe(C=cfg.logistic_c, random_state=cfg.seed)
    if kind == "mlp":
        return MLPProbeClassifier(random_state=cfg.seed, **asdict(cfg.mlp))
    if kind == "gbdt":
        return GBDTClassifier(random_state=cfg.seed, **asdict(cfg.gbdt))
    raise ValueError(f"unknown classifier kind {kind!r}; expected one of {CLASSIFIER_KINDS}")


def train_regressor(kind, X, y, cfg: TrainConfig | None = None):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] < 2:
        raise ValueError("a regressor probe needs at least 2 samples")
    return make_regressor(kind, cfg).fit(X, y)


def predict_regressor(model, X):
    return model.predict(X)


def train_classifier(kind, X, labels, cfg: TrainConfig | None = None):
    return make_classifier(kind, cfg).fit(X, labels)


def predict_classifier(model, X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        return model.classes_[:0]
    return model.predict(X)


__all__ = [
    "REGRESSOR_KINDS", "CLASSIFIER_KINDS", "MLPConfig", "GBDTConfig", "TrainConfig",
    "LinearProbe", "MLPProbeRegressor", "GBDTRegressor", "MostFrequentProbe", "LogisticProbe",
    "MLPProbeClassifier", "GBDTClassifier", "make_regressor", "make_classifier",
    "train_regressor", "predict_regressor", "train_classifier", "predict_classifier",
    "dumps", "loads", "ModelFormatError",
]
