import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coprobe.features import (Complexity, FeatureExtractor, ValueType, extract_features,
                              feature_catalog, features_to_csv, features_to_matrix,
                              read_feature_csv)
from coprobe.instances import (BinPackingInstance, GraphInstance, KnapsackInstance,
                               ProblemKind)
from coprobe.testing import random_instance
from oracles import feature_oracle, rel_close

TIER_COUNTS = {"BPP": (2, 2, 1), "GCP": (2, 0, 7), "JSSP": (2, 3, 1), "KP": (1, 7, 3)}
TYPE_COUNTS = {"BPP": (4, 1), "GCP": (5, 4), "JSSP": (5, 1), "KP": (7, 4)}


@pytest.mark.parametrize("kind", list(ProblemKind))
def test_catalog_shape(kind):
    specs = feature_catalog(kind)
    tiers = tuple(sum(s.complexity is c for s in specs) for c in Complexity)
    types = tuple(sum(s.value_type is t for s in specs) for t in ValueType)
    assert tiers == TIER_COUNTS[kind.value]
    assert types == TYPE_COUNTS[kind.value]
    assert len({s.name for s in specs}) == len(specs)


def test_gcp_catalog_entries():
    specs = {s.name: s for s in feature_catalog("GCP")}
    assert len(specs) == 9
    assert "ratio of 2 times the number of edges to the number of nodes times the number " \
           "of nodes minus 1" in specs["feat_density"].description
    assert specs["feat_density"].value_type is ValueType.real


def test_density_of_100_node_graph():
    rng = np.random.default_rng(5)
    pairs = [(u, v) for u in range(1, 101) for v in range(u + 1, 101)]
    g = GraphInstance("g", 100, tuple(pairs[i] for i in rng.choice(len(pairs), 1902, False)))
    assert extract_features(g).values["feat_density"] == pytest.approx(0.38424242424, rel=1e-9)


def test_k2():
    v = extract_features(GraphInstance("g", 2, ((1, 2),))).values
    assert v["feat_degree_min"] == v["feat_degree_max"] == 1
    assert v["feat_degree_mean"] == 1.0
    assert v["feat_density"] == 1.0


def test_single_knapsack_item():
    v = extract_features(KnapsackInstance("k", 10, ((2, 6),))).values
    assert v["feat_efficiency_1"] == 3.0
    assert v["feat_efficiency_mean"] == 3.0


def test_undefined_values():
    v = extract_features(GraphInstance("g", 1, ())).values
    assert v["feat_ratio_1"] is None
    assert v["feat_density"] is None
    assert v["feat_ratio_2"] == 0.0
    row = features_to_matrix([extract_features(GraphInstance("g", 1, ()))], "GCP")
    assert np.isnan(row).sum() == 2


def test_means_are_real_and_counts_integers():
    v = extract_features(BinPackingInstance("b", 10, (2, 4))).values
    assert isinstance(v["feat_weight_mean"], float) and v["feat_weight_mean"] == 3.0
    assert isinstance(v["feat_items"], int)


@pytest.mark.parametrize("kind", list(ProblemKind))
def test_oracle_equivalence(kind):
    rng = np.random.default_rng(99)
    for _ in range(100):
        inst = random_instance(kind, rng)
        got = extract_features(inst).values
        want = feature_oracle(inst)
        assert set(got) == set(want) == {s.name for s in feature_catalog(kind)}
        for name, w in want.items():
            assert rel_close(got[name], w, 1e-12), (name, got[name], w)
        for s in feature_catalog(kind):
            if s.value_type is ValueType.integer:
                assert isinstance(got[s.name], int)


@pytest.mark.parametrize("kind", list(ProblemKind))
def test_bounds(kind):
    rng = np.random.default_rng(2)
    for _ in range(50):
        v = extract_features(random_instance(kind, rng)).values
        for stem in ("degree", "weight", "duration", "profit"):
            lo, mid, hi = (v.get(f"feat_{stem}_{s}") for s in ("min", "mean", "max"))
            if mid is not None:
                assert lo <= mid <= hi
        if v.get("feat_density") is not None:
            assert 0.0 <= v["feat_density"] <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 15).flatmap(lambda n: st.tuples(
    st.just(n),
    st.sets(st.tuples(st.integers(1, n), st.integers(1, n)).filter(lambda e: e[0] < e[1])),
    st.permutations(range(1, n + 1)))))
def test_relabeling_invariance(case):
    n, edges, perm = case
    g = GraphInstance("g", n, tuple(edges))
    relabel = {i + 1: p for i, p in enumerate(perm)}
    h = GraphInstance("g", n, tuple((relabel[u], relabel[v]) for u, v in edges))
    a, b = extract_features(g).values, extract_features(h).values
    for name in a:
        if name == "feat_degree_1":
            continue
        assert a[name] == b[name] or (a[name] is not None and math.isclose(a[name], b[name]))


def test_csv_export_and_reader():
    vecs = [extract_features(GraphInstance("a", 1, ())),
            extract_features(GraphInstance("b", 3, ((1, 2),)))]
    text = features_to_csv(vecs, "GCP")
    lines = text.splitlines()
    assert lines[0].split(",")[0] == "instance"
    assert ",," in lines[1]
    names, cols, mat = read_feature_csv(text)
    assert names == ["a", "b"]
    assert cols == [s.name for s in feature_catalog("GCP")]
    np.testing.assert_array_equal(np.isnan(mat), np.isnan(features_to_matrix(vecs, "GCP")))


def test_feature_extractor_transformer():
    insts = [BinPackingInstance("b", 10, (3, 7)), BinPackingInstance("c", 9, (9,))]
    fx = FeatureExtractor().fit(insts)
    X = fx.transform(insts)
    assert X.shape == (2, 5)
    assert list(fx.get_feature_names_out()) == [s.name for s in feature_catalog("BPP")]
    assert X[0, 4] == 5.0
