"""Histogram gradient-boosted regression trees.

Features are quantised into at most ``max_bins`` bins once per fit; split
search then works on per-node gradient histograms, LightGBM style. Trees
are grown depth-wise to ``max_depth`` with at least ``min_leaf`` samples
per leaf. Leaves take the shrunken Newton step ``-lr * G / (H + l2)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_X_y

from ._base import ProbeMixin, classes_to_json, encode_labels

_MIN_CHILD_HESSIAN = 1e-3


def fit_bins(X, max_bins):
    """Per-column split thresholds; a value goes left of threshold t when x <= t."""
    thresholds = []
    for col in X.T:
        u = np.unique(col)
        if len(u) <= max_bins:
            thr = (u[:-1] + u[1:]) / 2.0
        else:
            qs = np.quantile(col, np.linspace(0, 1, max_bins + 1)[1:-1])
            thr = np.unique(qs)
        thresholds.append(thr)
    return thresholds


def apply_bins(X, thresholds):
    out = np.empty(X.shape, dtype=np.int32)
    for j, thr in enumerate(thresholds):
        out[:, j] = np.searchsorted(thr, X[:, j], side="left")
    return out


class _TreeBuilder:
    def __init__(self, bins, thresholds, n_bins, max_depth, min_leaf, l2, learning_rate):
        self.bins = bins
        self.thresholds = thresholds
        self.n_bins = n_bins
        self.n_features = bins.shape[1]
        self.offsets = np.arange(self.n_features) * n_bins
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.l2 = l2
        self.lr = learning_rate

    def build(self, grad, hess):
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        self._grow(np.arange(len(grad)), grad, hess, 0)
        return (np.array(self.feature, dtype=np.int64), np.array(self.threshold),
                np.array(self.left, dtype=np.int64), np.array(self.right, dtype=np.int64),
                np.array(self.value))

    def _new_node(self):
        for lst, v in ((self.feature, -1), (self.threshold, 0.0), (self.left, -1),
                       (self.right, -1), (self.value, 0.0)):
            lst.append(v)
        return len(self.feature) - 1

    def _best_split(self, idx, g, h):
        nb, nf = self.n_bins, self.n_features
        flat = (self.bins[idx] + self.offsets).ravel()
        size = nf * nb
        G_hist = np.bincount(flat, weights=np.repeat(g, nf), minlength=size).reshape(nf, nb)
        H_hist = np.bincount(flat, weights=np.repeat(h, nf), minlength=size).reshape(nf, nb)
        C_hist = np.bincount(flat, minlength=size).reshape(nf, nb)
        GL, HL, CL = G_hist.cumsum(1), H_hist.cumsum(1), C_hist.cumsum(1)
        G, H, C = g.sum(), h.sum(), len(idx)
        GR, HR, CR = G - GL, H - HL, C - CL
        ok = ((CL >= self.min_leaf) & (CR >= self.min_leaf)
              & (HL >= _MIN_CHILD_HESSIAN) & (HR >= _MIN_CHILD_HESSIAN))
        if not ok.any():
            return None
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = GL ** 2 / (HL + self.l2) + GR ** 2 / (HR + self.l2) - G ** 2 / (H + self.l2)
        gain = np.where(ok, gain, -np.inf)
        best = int(np.argmax(gain))
        if not gain.flat[best] > 0:
            return None
        return divmod(best, nb)

    def _grow(self, idx, grad, hess, depth):
        node = self._new_node()
        g, h = grad[idx], hess[idx]
        split = None
        if depth < self.max_depth and len(idx) >= 2 * self.min_leaf:
            split = self._best_split(idx, g, h)
        if split is None:
            self.value[node] = -self.lr * g.sum() / max(h.sum() + self.l2, _MIN_CHILD_HESSIAN)
            return node
        f, b = split
        go_left = self.bins[idx, f] <= b
        self.feature[node] = f
        self.threshold[node] = float(self.thresholds[f][b])
        self.left[node] = self._grow(idx[go_left], grad, hess, depth + 1)
        self.right[node] = self._grow(idx[~go_left], grad, hess, depth + 1)
        return node


def predict_tree(tree, X):
    feature, threshold, left, right, value = tree
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        rows = np.nonzero(active)[0]
        cur = node[rows]
        go_left = X[rows, feature[cur]] <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
        active = feature[node] >= 0
    return value[node]


def _boost(X, y, est, loss):
    """Fit one additive tree ensemble; returns (init, trees, per-round training loss)."""
    thresholds = fit_bins(X, est.max_bins)
    n_bins = max(len(t) for t in thresholds) + 1 if thresholds else 1
    bins = apply_bins(X, thresholds)
    builder = _TreeBuilder(bins, thresholds, n_bins, est.max_depth, est.min_leaf,
                           est.l2_regularization, est.learning_rate)
    if loss == "squared":
        init = float(y.mean())
    else:
        p = np.clip(y.mean(), 1e-12, 1 - 1e-12)
        init = float(np.log(p / (1 - p)))
    raw = np.full(len(y), init)
    trees, history = [], []
    for _ in range(est.n_trees):
        if loss == "squared":
            grad, hess = raw - y, np.ones_like(raw)
        else:
            prob = 1.0 / (1.0 + np.exp(-raw))
            grad, hess = prob - y, prob * (1 - prob)
        tree = builder.build(grad, hess)
        trees.append(tree)
        raw = raw + predict_tree(tree, X)
        if loss == "squared":
            history.append(float(np.mean((y - raw) ** 2)))
        else:
            history.append(float(np.mean(np.logaddexp(0, raw) - y * raw)))
    return init, trees, history


def _trees_to_arrays(prefix, trees):
    if not trees:
        return {}
    sizes = np.array([len(t[0]) for t in trees], dtype=np.int64)
    return {
        f"{prefix}sizes": sizes,
        f"{prefix}feature": np.concatenate([t[0] for t in trees]),
        f"{prefix}threshold": np.concatenate([t[1] for t in trees]),
        f"{prefix}left": np.concatenate([t[2] for t in trees]),
        f"{prefix}right": np.concatenate([t[3] for t in trees]),
        f"{prefix}value": np.concatenate([t[4] for t in trees]),
    }


def _trees_from_arrays(prefix, arrays):
    if f"{prefix}sizes" not in arrays:
        return []
    bounds = np.concatenate([[0], np.cumsum(arrays[f"{prefix}sizes"])])
    return [tuple(arrays[f"{prefix}{k}"][a:b]
                  for k in ("feature", "threshold", "left", "right", "value"))
            for a, b in zip(bounds[:-1], bounds[1:])]


class _GBDTBase(ProbeMixin, BaseEstimator):
    probe_kind = "gbdt"

    def __init__(self, n_trees=200, max_depth=6, learning_rate=0.1, min_leaf=20,
                 max_bins=255, l2_regularization=0.0, random_state=0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_leaf = min_leaf
        self.max_bins = max_bins
        self.l2_regularization = l2_regularization
        self.random_state = random_state

    def _drop_constant(self, X):
        self.keep_ = X.max(axis=0) > X.min(axis=0)
        return X[:, self.keep_]


class GBDTRegressor(RegressorMixin, _GBDTBase):
    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        Xk = self._drop_constant(X)
        if y.max() == y.min():
            self.init_, self.trees_, self.train_loss_ = float(y[0]), [], []
        else:
            self.init_, self.trees_, self.train_loss_ = _boost(Xk, y, self, "squared")
        return self

    def predict(self, X):
        X = self._check_predict_input(X)[:, self.keep_]
        out = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            out += predict_tree(tree, X)
        return out

    def _export(self):
        return ({"n_features_in": self.n_features_in_, "init": self.init_,
                 "train_loss": self.train_loss_},
                {"keep": self.keep_.astype(np.uint8), **_trees_to_arrays("t_", self.trees_)})

    def _import(self, meta, arrays):
        self.n_features_in_ = meta["n_features_in"]
        self.init_ = meta["init"]
        self.train_loss_ = meta["train_loss"]
        self.keep_ = arrays["keep"].astype(bool)
        self.trees_ = _trees_from_arrays("t_", arrays)


class GBDTClassifier(ClassifierMixin, _GBDTBase):
    """Binary logistic boosting; one-vs-rest boosters when there are more than 2 classes."""

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.classes_, codes = encode_labels(y)
        Xk = self._drop_constant(X)
        k = len(self.classes_)
        targets = [] if k == 1 else [codes == 1] if k == 2 else [codes == c for c in range(k)]
        self.boosters_ = []
        self.train_loss_ = []
        for t in targets:
            init, trees, hist = _boost(Xk, t.astype(np.float64), self, "logistic")
            self.boosters_.append((init, trees))
            self.train_loss_.append(hist)
        return self

    def decision_function(self, X):
        X = self._check_predict_input(X)[:, self.keep_]
        scores = np.empty((X.shape[0], len(self.boosters_)))
        for j, (init, trees) in enumerate(self.boosters_):
            col = np.full(X.shape[0], init)
            for tree in trees:
                col += predict_tree(tree, X)
            scores[:, j] = col
        return scores

    def predict_proba(self, X):
        if not self.boosters_:
            X = self._check_predict_input(X)
            return np.ones((X.shape[0], 1))
        s = 1.0 / (1.0 + np.exp(-self.decision_function(X)))
        if len(self.boosters_) == 1:
            return np.column_stack([1 - s[:, 0], s[:, 0]])
        return s / s.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def _export(self):
        arrays = {"keep": self.keep_.astype(np.uint8)}
        inits = []
        for j, (init, trees) in enumerate(self.boosters_):
            inits.append(init)
            arrays.update(_trees_to_arrays(f"b{j}_", trees))
        meta = {"n_features_in": self.n_features_in_, "classes": classes_to_json(self.classes_),
                "inits": inits, "train_loss": self.train_loss_}
        return meta, arrays

    def _import(self, meta, arrays):
        self.n_features_in_ = meta["n_features_in"]
        self.classes_ = np.array(meta["classes"])
        self.train_loss_ = meta["train_loss"]
        self.keep_ = arrays["keep"].astype(bool)
        self.boosters_ = [(init, _trees_from_arrays(f"b{j}_", arrays))
                          for j, init in enumerate(meta["inits"])]
