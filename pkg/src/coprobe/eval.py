"""Metrics, winner sets, and powerset-stratified data splits."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .features import ValueType

DEFAULT_TIE_TOLERANCE = 1e-9
ZERO_TOLERANCE = 1e-9


@dataclass(frozen=True)
class WinnerSet:
    instance_name: str
    algorithms: frozenset

    def __post_init__(self):
        if not self.algorithms:
            raise ValueError(f"empty winner set for {self.instance_name}")


def winning_set(row, sense="minimize", tolerance=DEFAULT_TIE_TOLERANCE,
                instance_name="") -> WinnerSet:
    """Algorithms whose objective is within relative ``tolerance`` of the best.

    ``row`` maps algorithm -> objective value.
    """
    if not row:
        raise ValueError("empty performance row")
    vals = {a: float(v) for a, v in row.items()}
    if not all(math.isfinite(v) for v in vals.values()):
        raise ValueError(f"non-finite objective value in {row!r}")
    best = min(vals.values()) if sense == "minimize" else max(vals.values())
    tied = frozenset(a for a, v in vals.items()
                     if abs(v - best) <= tolerance * max(abs(v), abs(best)))
    return WinnerSet(instance_name, tied)


def winner_sets(table, tolerance=DEFAULT_TIE_TOLERANCE) -> dict[str, WinnerSet]:
    return {name: winning_set(table.row(name), table.objective_sense, tolerance, name)
            for name in sorted(table.rows)}


def _pairs(pred, truth):
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} predictions, {len(truth)} truths")
    return list(zip(pred, truth))


def _missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def mae(pred, truth) -> float:
    """Mean absolute error over pairs where both sides are defined."""
    pairs = [(p, t) for p, t in _pairs(pred, truth) if not (_missing(p) or _missing(t))]
    if not pairs:
        raise ValueError("no defined (prediction, truth) pairs")
    return float(np.mean([abs(float(p) - float(t)) for p, t in pairs]))


def _equal(p, t, value_type) -> bool:
    if value_type is ValueType.integer and float(t).is_integer():
        return float(p) == float(t)
    if t == 0:
        return abs(p) <= ZERO_TOLERANCE
    return abs(p - t) <= 1e-9 * abs(t)


def _within(p, t, frac) -> bool:
    if t == 0:
        return abs(p) <= ZERO_TOLERANCE
    return abs(p - t) <= frac * abs(t)


def match_rates(pred, truth, value_type=ValueType.real) -> dict[str, float]:
    """Equals / within-1% / within-5% / null rates.

    Null predictions count in every denominator and never match. Pairs with
    an undefined truth are dropped first.
    """
    value_type = ValueType(value_type)
    pairs = [(p, t) for p, t in _pairs(pred, truth) if not _missing(t)]
    n = len(pairs)
    if n == 0:
        return {"equals": None, "within_1pct": None, "within_5pct": None, "null_rate": None}
    eq = w1 = w5 = nulls = 0
    for p, t in pairs:
        if _missing(p):
            nulls += 1
            continue
        p, t = float(p), float(t)
        eq += _equal(p, t, value_type)
        w1 += _within(p, t, 0.01)
        w5 += _within(p, t, 0.05)
    return {"equals": eq / n, "within_1pct": w1 / n, "within_5pct": w5 / n,
            "null_rate": nulls / n}


def set_aware_accuracy(preds, sets) -> float:
    """Fraction of rows whose single prediction lies in that row's winner set."""
    if len(preds) != len(sets):
        raise ValueError("predictions and winner sets differ in length")
    if not preds:
        raise ValueError("no predictions")
    hits = 0
    for p, s in zip(preds, sets):
        s = s.algorithms if isinstance(s, WinnerSet) else s
        if not s:
            raise ValueError("empty winner set")
        hits += p in s
    return hits / len(preds)


def _stratum_id(s) -> str:
    s = s.algorithms if isinstance(s, WinnerSet) else s
    return "|".join(sorted(map(str, s)))


@dataclass(frozen=True)
class SplitAssignment:
    """Holdout (``train``/``test``) or one k-fold round, plus per-instance training labels.

    ``instances``, ``tags`` and ``strata`` are parallel tuples; ``labels``
    holds the single tie-broken label of every instance.
    """

    instances: tuple
    tags: tuple
    strata: tuple
    labels: tuple
    seed: int
    fold: int | None = None

    def indices(self, tag):
        return np.array([i for i, t in enumerate(self.tags) if t == tag], dtype=np.int64)

    @property
    def train_index(self):
        return self.indices("train")

    @property
    def test_index(self):
        return self.indices("test")

    def to_json(self) -> str:
        return json.dumps({"instances": list(self.instances), "tags": list(self.tags),
                           "strata": list(self.strata), "labels": list(self.labels),
                           "seed": self.seed, "fold": self.fold}, sort_keys=True)


def _prepare(winner_sets, seed):
    """Normalise input to (names, stratum ids, tie-broken labels, strata -> positions)."""
    if isinstance(winner_sets, dict):
        names = list(winner_sets)
        sets = [winner_sets[n] for n in names]
    else:
        sets = list(winner_sets)
        names = [getattr(s, "instance_name", "") or str(i) for i, s in enumerate(sets)]
    strata = [_stratum_id(s) for s in sets]
    rng = np.random.default_rng(seed)
    labels = []
    for s in sets:
        options = sorted(map(str, s.algorithms if isinstance(s, WinnerSet) else s))
        labels.append(options[int(rng.integers(len(options)))])
    groups = defaultdict(list)
    for i, st in enumerate(strata):
        groups[st].append(i)
    return names, strata, labels, groups, rng


def stratified_split(winner_sets, ratio=0.7, seed=0) -> SplitAssignment:
    """Train/test split stratified on the winner set of each instance.

    Each stratum sends ``floor(ratio * size + 0.5)`` instances to train;
    singleton strata always go to train.
    """
    if not 0 < ratio < 1:
        raise ValueError("ratio must lie in (0, 1)")
    names, strata, labels, groups, rng = _prepare(winner_sets, seed)
    tags = ["test"] * len(names)
    for st in sorted(groups):
        members = np.array(groups[st])[rng.permutation(len(groups[st]))]
        n_train = len(members) if len(members) == 1 else int(math.floor(ratio * len(members) + 0.5))
        for i in members[:n_train]:
            tags[i] = "train"
    return SplitAssignment(tuple(names), tuple(tags), tuple(strata), tuple(labels), seed)


def stratified_kfold(winner_sets, k=5, seed=0, rare_strata_to_train=False) -> list[SplitAssignment]:
    """k folds stratified on winner sets; every instance is tested exactly once.

    Members of each shuffled stratum are dealt round-robin over the folds,
    continuing where the previous stratum stopped, so per-stratum fold
    counts differ by at most one and fold sizes stay balanced. With
    ``rare_strata_to_train`` strata smaller than ``k`` are never tested.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    names, strata, labels, groups, rng = _prepare(winner_sets, seed)
    if k > len(names):
        raise ValueError(f"k={k} exceeds the number of instances ({len(names)})")
    fold_of = [-1] * len(names)
    cursor = 0
    for st in sorted(groups):
        members = np.array(groups[st])[rng.permutation(len(groups[st]))]
        if rare_strata_to_train and len(members) < k:
            continue
        for i in members:
            fold_of[i] = cursor % k
            cursor += 1
    out = []
    for f in range(k):
        tags = tuple("test" if fold_of[i] == f else "train" for i in range(len(names)))
        out.append(SplitAssignment(tuple(names), tags, tuple(strata), tuple(labels), seed, f))
    return out


class PowersetStratifiedKFold:
    """scikit-learn style splitter over winner sets.

    ``split(X, y)`` takes ``y`` as a sequence of winner sets (any iterables
    of algorithm names) and yields ``(train_index, test_index)`` pairs.
    """

    def __init__(self, n_splits=5, random_state=0):
        self.n_splits = n_splits
        self.random_state = random_state

    def get_n_splits(self, X=None, y=None, groups=None):
        return self.n_splits

    def split(self, X, y, groups=None):
        sets = [frozenset(s) for s in y]
        for fold in stratified_kfold(sets, self.n_splits, self.random_state):
            yield fold.train_index, fold.test_index
