"""Handcrafted ground-truth features, grouped into extraction tiers.

Tier rule: a value written verbatim in the instance file is ``direct``; a
count, extremum or single looked-up datum is ``low_effort``; anything that
aggregates or derives (means, ratios, degree statistics) is ``high_effort``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .instances import (BinPackingInstance, GraphInstance, JobShopInstance,
                        KnapsackInstance, ProblemKind)


class ValueType(str, Enum):
    integer = "integer"
    real = "real"


class Complexity(str, Enum):
    direct = "direct"
    low_effort = "low_effort"
    high_effort = "high_effort"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    description: str
    value_type: ValueType
    complexity: Complexity


@dataclass(frozen=True)
class FeatureVector:
    instance_name: str
    values: dict  # feature name -> int | float | None


_I, _R = ValueType.integer, ValueType.real
_D, _L, _H = Complexity.direct, Complexity.low_effort, Complexity.high_effort

_CATALOG = {
    ProblemKind.GCP: (
        FeatureSpec("feat_nodes", "The total number of nodes in the graph.", _I, _D),
        FeatureSpec("feat_edges", "The total number of edges in the graph.", _I, _D),
        FeatureSpec("feat_degree_1", "The degree of node 1 in the graph, representing the "
                    "number of connections per node.", _I, _H),
        FeatureSpec("feat_density", "The density of the graph, calculated as the ratio of 2 "
                    "times the number of edges to the number of nodes times the number of "
                    "nodes minus 1.", _R, _H),
        FeatureSpec("feat_ratio_1", "The ratio of the number of nodes to the number of edges "
                    "in the graph.", _R, _H),
        FeatureSpec("feat_ratio_2", "The ratio of the number of edges to the number of nodes "
                    "in the graph.", _R, _H),
        FeatureSpec("feat_degree_mean", "The average degree of the nodes in the graph, "
                    "representing the mean number of connections per node.", _R, _H),
        FeatureSpec("feat_degree_max", "The maximum degree of the nodes in the graph, "
                    "indicating the highest number of connections any node has.", _I, _H),
        FeatureSpec("feat_degree_min", "The minimum degree of the nodes in the graph, "
                    "indicating the lowest number of connections any node has.", _I, _H),
    ),
    ProblemKind.BPP: (
        FeatureSpec("feat_capacity", "The capacity of each bin.", _I, _D),
        FeatureSpec("feat_items", "The total number of items to be packed.", _I, _D),
        FeatureSpec("feat_weight_max", "The maximum weight among all items.", _I, _L),
        FeatureSpec("feat_weight_min", "The minimum weight among all items.", _I, _L),
        FeatureSpec("feat_weight_mean", "The average weight of the items.", _R, _H),
    ),
    ProblemKind.JSSP: (
        FeatureSpec("feat_jobs", "The total number of jobs.", _I, _D),
        FeatureSpec("feat_machines", "The total number of machines.", _I, _D),
        FeatureSpec("feat_operations", "The total number of operations over all jobs.", _I, _L),
        FeatureSpec("feat_duration_max", "The maximum processing time of any operation.", _I, _L),
        FeatureSpec("feat_duration_min", "The minimum processing time of any operation.", _I, _L),
        FeatureSpec("feat_duration_mean", "The average processing time of the operations.",
                    _R, _H),
    ),
    ProblemKind.KP: (
        FeatureSpec("feat_capacity", "The capacity of the knapsack.", _I, _D),
        FeatureSpec("feat_weight_max", "The maximum weight among all items.", _I, _L),
        FeatureSpec("feat_weight_min", "The minimum weight among all items.", _I, _L),
        FeatureSpec("feat_profit_max", "The maximum profit among all items.", _I, _L),
        FeatureSpec("feat_profit_min", "The minimum profit among all items.", _I, _L),
        FeatureSpec("feat_weight_1", "The weight of the first item.", _I, _L),
        FeatureSpec("feat_profit_1", "The profit of the first item.", _I, _L),
        FeatureSpec("feat_efficiency_1", "The efficiency of the first item, computed as its "
                    "profit divided by its weight.", _R, _L),
        FeatureSpec("feat_weight_mean", "The average weight of the items.", _R, _H),
        FeatureSpec("feat_profit_mean", "The average profit of the items.", _R, _H),
        FeatureSpec("feat_efficiency_mean", "The average efficiency of the items, where the "
                    "efficiency of an item is its profit divided by its weight.", _R, _H),
    ),
}


def feature_catalog(kind) -> list[FeatureSpec]:
    return list(_CATALOG[ProblemKind(kind)])


def _mean(values) -> float:
    return float(np.mean(np.asarray(values, dtype=np.float64)))


def _graph_features(g: GraphInstance) -> dict:
    n, m = g.num_nodes, g.num_edges
    deg = np.zeros(n + 1, dtype=np.int64)
    if m:
        e = np.asarray(g.edges)
        np.add.at(deg, e[:, 0], 1)
        np.add.at(deg, e[:, 1], 1)
    deg = deg[1:]
    return {
        "feat_nodes": n,
        "feat_edges": m,
        "feat_degree_1": int(deg[0]),
        "feat_density": 2 * m / (n * (n - 1)) if n > 1 else None,
        "feat_ratio_1": n / m if m else None,
        "feat_ratio_2": m / n,
        "feat_degree_mean": _mean(deg),
        "feat_degree_max": int(deg.max()),
        "feat_degree_min": int(deg.min()),
    }


def _bpp_features(b: BinPackingInstance) -> dict:
    return {
        "feat_capacity": b.capacity,
        "feat_items": len(b.weights),
        "feat_weight_max": max(b.weights),
        "feat_weight_min": min(b.weights),
        "feat_weight_mean": _mean(b.weights),
    }


def _jssp_features(j: JobShopInstance) -> dict:
    durations = [d for job in j.operations for _, d in job]
    return {
        "feat_jobs": j.num_jobs,
        "feat_machines": j.num_machines,
        "feat_operations": len(durations),
        "feat_duration_max": max(durations),
        "feat_duration_min": min(durations),
        "feat_duration_mean": _mean(durations),
    }


def _kp_features(k: KnapsackInstance) -> dict:
    w = np.array([it[0] for it in k.items], dtype=np.float64)
    p = np.array([it[1] for it in k.items], dtype=np.float64)
    w1, p1 = k.items[0]
    return {
        "feat_capacity": k.capacity,
        "feat_weight_max": int(w.max()),
        "feat_weight_min": int(w.min()),
        "feat_profit_max": int(p.max()),
        "feat_profit_min": int(p.min()),
        "feat_weight_1": w1,
        "feat_profit_1": p1,
        "feat_efficiency_1": p1 / w1,
        "feat_weight_mean": float(w.mean()),
        "feat_profit_mean": float(p.mean()),
        "feat_efficiency_mean": float((p / w).mean()),
    }


_EXTRACTORS = {
    ProblemKind.GCP: _graph_features,
    ProblemKind.BPP: _bpp_features,
    ProblemKind.JSSP: _jssp_features,
    ProblemKind.KP: _kp_features,
}


def extract_features(instance) -> FeatureVector:
    """Compute every catalog feature of ``instance``; undefined values are ``None``."""
    values = _EXTRACTORS[instance.kind](instance)
    return FeatureVector(instance.name, values)


def features_to_matrix(vectors, kind) -> np.ndarray:
    names = [s.name for s in feature_catalog(kind)]
    out = np.full((len(vectors), len(names)), np.nan)
    for i, fv in enumerate(vectors):
        for j, name in enumerate(names):
            v = fv.values[name]
            if v is not None:
                out[i, j] = v
    return out


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Transformer mapping a sequence of instances to the feature matrix.

    ``kind=None`` takes the problem kind from the first fitted instance.
    Undefined values become NaN so the output composes with imputers.
    """

    def __init__(self, kind=None):
        self.kind = kind

    def fit(self, X, y=None):
        X = list(X)
        if self.kind is not None:
            self.kind_ = ProblemKind(self.kind)
        elif X:
            self.kind_ = X[0].kind
        else:
            raise ValueError("cannot infer the problem kind from an empty sequence")
        self.feature_names_out_ = np.array([s.name for s in feature_catalog(self.kind_)],
                                           dtype=object)
        self.n_features_out_ = len(self.feature_names_out_)
        return self

    def transform(self, X):
        check_is_fitted(self)
        X = list(X)
        bad = [i.name for i in X if i.kind is not self.kind_]
        if bad:
            raise ValueError(f"expected {self.kind_.value} instances, got others: {bad[:3]}")
        return features_to_matrix([extract_features(inst) for inst in X], self.kind_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self)
        return self.feature_names_out_.copy()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def features_to_csv(vectors, kind) -> str:
    """Instance x feature matrix; undefined values are empty cells."""
    names = [s.name for s in feature_catalog(kind)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", *names])
    for fv in vectors:
        w.writerow([fv.instance_name, *(_fmt(fv.values[n]) for n in names)])
    return buf.getvalue()


def read_feature_csv(text: str) -> tuple[list[str], list[str], np.ndarray]:
    """Read an instance x feature CSV (ground truth or ISA). Empty cells become NaN.

    Returns ``(instance_names, column_names, matrix)``.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or rows[0][0].strip().lower() != "instance":
        raise ValueError("feature CSV must start with an 'instance' column")
    cols = [c.strip() for c in rows[0][1:]]
    names, data = [], []
    for lineno, r in enumerate(rows[1:], 2):
        if len(r) != len(cols) + 1:
            raise ValueError(f"row {lineno}: expected {len(cols)} values")
        names.append(r[0].strip())
        data.append([float(c) if c.strip() else np.nan for c in r[1:]])
    return names, cols, np.array(data, dtype=np.float64).reshape(len(names), len(cols))
