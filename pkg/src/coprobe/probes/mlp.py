"""One-hidden-layer ReLU perceptron probes trained with Adam."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_X_y

from ._base import ColumnStandardizer, ProbeMixin, classes_to_json, encode_labels

PARAM_NAMES = ("W1", "b1", "W2", "b2")


def init_params(n_in, hidden, n_out, rng) -> dict:
    # PyTorch nn.Linear default: U(-1/sqrt(fan_in), 1/sqrt(fan_in))
    b_in = 1.0 / np.sqrt(max(n_in, 1))
    b_h = 1.0 / np.sqrt(hidden)
    return {
        "W1": rng.uniform(-b_in, b_in, (n_in, hidden)),
        "b1": rng.uniform(-b_in, b_in, hidden),
        "W2": rng.uniform(-b_h, b_h, (hidden, n_out)),
        "b2": rng.uniform(-b_h, b_h, n_out),
    }


def forward(params, Z):
    pre = Z @ params["W1"] + params["b1"]
    hid = np.maximum(pre, 0.0)
    return pre, hid, hid @ params["W2"] + params["b2"]


def _softmax(logits):
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(params, Z, target, task):
    """Mean loss and its gradient w.r.t. every parameter.

    ``task="regression"``: target is (n,), loss is 0.5*mean squared error.
    ``task="classification"``: target holds class codes, loss is softmax
    cross-entropy.
    """
    n = Z.shape[0]
    pre, hid, out = forward(params, Z)
    if task == "regression":
        resid = out[:, 0] - target
        loss = 0.5 * float(np.mean(resid ** 2))
        d_out = (resid / n)[:, None]
    else:
        prob = _softmax(out)
        loss = -float(np.mean(np.log(prob[np.arange(n), target] + 1e-300)))
        d_out = prob
        d_out[np.arange(n), target] -= 1.0
        d_out /= n
    d_hid = (d_out @ params["W2"].T) * (pre > 0)
    grads = {
        "W2": hid.T @ d_out,
        "b2": d_out.sum(axis=0),
        "W1": Z.T @ d_hid,
        "b1": d_hid.sum(axis=0),
    }
    return loss, grads


def _train(Z, target, task, n_out, est):
    rng = np.random.default_rng(est.random_state)
    params = init_params(Z.shape[1], est.hidden_width, n_out, rng)
    n = Z.shape[0]
    n_val = int(round(n * est.validation_fraction))
    if n_val >= 1 and n - n_val >= 1 and est.validation_fraction > 0:
        perm = rng.permutation(n)
        val, tr = perm[:n_val], perm[n_val:]
    else:
        val, tr = None, np.arange(n)

    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(p) for k, p in params.items()}
    b1, b2, eps = 0.9, 0.999, 1e-8
    step = 0
    best, best_params, stale = np.inf, None, 0
    history = []
    for _ in range(est.epochs):
        order = tr[rng.permutation(len(tr))]
        for start in range(0, len(order), est.batch_size):
            batch = order[start:start + est.batch_size]
            _, grads = loss_and_grad(params, Z[batch], target[batch], task)
            step += 1
            for k in PARAM_NAMES:
                m[k] = b1 * m[k] + (1 - b1) * grads[k]
                v[k] = b2 * v[k] + (1 - b2) * grads[k] ** 2
                mhat = m[k] / (1 - b1 ** step)
                vhat = v[k] / (1 - b2 ** step)
                params[k] = params[k] - est.learning_rate * mhat / (np.sqrt(vhat) + eps)
        if val is None:
            continue
        val_loss, _ = loss_and_grad(params, Z[val], target[val], task)
        history.append(val_loss)
        if val_loss < best:
            best, best_params, stale = val_loss, {k: p.copy() for k, p in params.items()}, 0
        else:
            stale += 1
            if stale >= est.patience:
                break
    return (best_params if best_params is not None else params), history


class _MLPBase(ProbeMixin, BaseEstimator):
    def __init__(self, hidden_width=128, epochs=200, learning_rate=1e-3, batch_size=64,
                 validation_fraction=0.1, patience=20, random_state=0):
        self.hidden_width = hidden_width
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.random_state = random_state

    def _params_state(self):
        if self.params_ is None:
            return {}
        return {k: self.params_[k] for k in PARAM_NAMES}

    def _params_from(self, arrays):
        if "W1" not in arrays:
            return None
        return {k: arrays[k] for k in PARAM_NAMES}


class MLPProbeRegressor(RegressorMixin, _MLPBase):
    """D -> hidden (ReLU) -> 1. Targets are z-scored internally."""

    probe_kind = "mlp"

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        self.scaler_ = ColumnStandardizer()
        Z = self.scaler_.fit_transform(X)
        self.y_mean_ = float(y[0] if y.max() == y.min() else y.mean())
        self.y_scale_ = float(y.std())
        self.params_ = None
        self.validation_loss_ = []
        if y.max() > y.min():
            t = (y - self.y_mean_) / self.y_scale_
            self.params_, self.validation_loss_ = _train(Z, t, "regression", 1, self)
        return self

    def predict(self, X):
        X = self._check_predict_input(X)
        if self.params_ is None:
            return np.full(X.shape[0], self.y_mean_)
        _, _, out = forward(self.params_, self.scaler_.transform(X))
        return out[:, 0] * self.y_scale_ + self.y_mean_

    def _export(self):
        meta = {"n_features_in": self.n_features_in_, "y_mean": self.y_mean_,
                "y_scale": self.y_scale_}
        return meta, {**self.scaler_.state(), **self._params_state()}

    def _import(self, meta, arrays):
        self.n_features_in_ = meta["n_features_in"]
        self.y_mean_, self.y_scale_ = meta["y_mean"], meta["y_scale"]
        self.scaler_ = ColumnStandardizer.from_state(arrays)
        self.params_ = self._params_from(arrays)


class MLPProbeClassifier(ClassifierMixin, _MLPBase):
    """D -> hidden (ReLU) -> K softmax. A single training class gives a constant model."""

    probe_kind = "mlp"

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.classes_, codes = encode_labels(y)
        self.scaler_ = ColumnStandardizer()
        Z = self.scaler_.fit_transform(X)
        self.params_ = None
        self.validation_loss_ = []
        if len(self.classes_) > 1:
            self.params_, self.validation_loss_ = _train(
                Z, codes, "classification", len(self.classes_), self)
        return self

    def predict_proba(self, X):
        X = self._check_predict_input(X)
        if self.params_ is None:
            return np.ones((X.shape[0], 1))
        _, _, out = forward(self.params_, self.scaler_.transform(X))
        return _softmax(out)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def _export(self):
        meta = {"n_features_in": self.n_features_in_,
                "classes": classes_to_json(self.classes_)}
        return meta, {**self.scaler_.state(), **self._params_state()}

    def _import(self, meta, arrays):
        self.n_features_in_ = meta["n_features_in"]
        self.classes_ = np.array(meta["classes"])
        self.scaler_ = ColumnStandardizer.from_state(arrays)
        self.params_ = self._params_from(arrays)
