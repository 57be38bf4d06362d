"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (also collected into the
terminal summary). Run standalone with ``python tests/test_acceptance.py``.
"""

import csv
import hashlib
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from coprobe import pipeline
from coprobe.cli import main
from coprobe.config import load_config
from coprobe.eval import WinnerSet, set_aware_accuracy, stratified_kfold, stratified_split
from coprobe.features import extract_features
from coprobe.instances import InstanceFormatError, ProblemKind, parse_instance
from coprobe.pooling import pool_array
from coprobe.probes import (GBDTRegressor, MLPConfig, TrainConfig, predict_classifier,
                            predict_regressor, train_classifier, train_regressor)
from coprobe.probes.mlp import init_params, loss_and_grad
from coprobe.render import render_standard
from coprobe.report import load_report
from coprobe.testing import count_index_mutations, random_instance, write_demo_workspace
from oracles import feature_oracle, naive_argbest, pool_oracle, rel_close, set_aware_oracle


@contextmanager
def criterion(number, title, limit=None):
    """Time the block and record one PASS/FAIL line for it."""
    notes = []
    start = time.perf_counter()
    ok = False
    try:
        yield notes
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        if ok and limit is not None and elapsed >= limit:
            ok = False
            notes.append(f"runtime {elapsed:.1f}s exceeds {limit}s")
        detail = "; ".join(notes)
        line = f"{'PASS' if ok else 'FAIL'} [{number}] {title} ({elapsed:.1f}s){': ' if detail else ''}{detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    if limit is not None:
        assert elapsed < limit, f"criterion {number} took {elapsed:.1f}s, limit {limit}s"


def test_1_feature_oracle_equivalence():
    with criterion(1, "feature oracle equivalence, 500 instances per problem", 10) as notes:
        rng = np.random.default_rng(1)
        compared = 0
        for kind in ProblemKind:
            for i in range(500):
                inst = random_instance(kind, rng, max_elements=30, name=f"r{i}")
                got, want = extract_features(inst).values, feature_oracle(inst)
                assert got.keys() == want.keys()
                for name in want:
                    assert rel_close(got[name], want[name], 1e-12), (kind, name)
                    compared += 1
        notes.append(f"{compared} feature values matched to 1e-12")


def _fuzz_whitespace(kind, text, rng):
    """Same instance, different but valid layout."""
    out = []
    for line in text.splitlines():
        toks = line.split()
        seps = [" " * int(rng.integers(1, 4)) if rng.random() < 0.7 else "\t"
                for _ in toks[1:]]
        s = toks[0] + "".join(sep + t for sep, t in zip(seps, toks[1:]))
        if rng.random() < 0.2:
            s = " " * int(rng.integers(1, 3)) + s + "  "
        out.append(s)
        if kind is ProblemKind.GCP and rng.random() < 0.1:
            out.append("c fuzz comment 1 2 3")
        if rng.random() < 0.05:
            out.append("")
    if kind is ProblemKind.GCP:
        out.insert(0, "c generated")
    eol = "\r\n" if rng.random() < 0.5 else "\n"
    return eol.join(out) + (eol if rng.random() < 0.5 else "")


def test_2_parser_round_trip_and_mutations():
    with criterion(2, "parse/render round-trip and count/index mutations", 30) as notes:
        rng = np.random.default_rng(2)
        mutations = rejected = 0
        for kind in ProblemKind:
            for i in range(1000):
                inst = random_instance(kind, rng, max_elements=30, name=f"f{i}")
                fuzzed = _fuzz_whitespace(kind, render_standard(inst).text, rng)
                first = parse_instance(kind, fuzzed, name=inst.name)
                again = parse_instance(kind, render_standard(first).text, name=inst.name)
                assert first == again == inst
                for _, bad in count_index_mutations(kind, render_standard(inst).text, rng):
                    mutations += 1
                    try:
                        parse_instance(kind, bad)
                    except InstanceFormatError:
                        rejected += 1
        notes.append(f"4000 round-trips; {rejected}/{mutations} mutations rejected")
        assert rejected == mutations


def test_3_pooling_correctness():
    with criterion(3, "pooling matches naive reference on 1000 matrices") as notes:
        rng = np.random.default_rng(3)
        for _ in range(1000):
            t, d = int(rng.integers(1, 65)), int(rng.integers(1, 129))
            x = (rng.standard_normal((t, d)) * rng.uniform(0.1, 100)).astype(np.float32)
            rows = x.astype(np.float64).tolist()
            for s in ("max", "last"):
                assert pool_array(x, s).tolist() == pool_oracle(rows, s)
            ref = np.array(pool_oracle(rows, "mean"))
            got = pool_array(x, "mean")
            assert np.all(np.abs(got - ref) <= 1e-12 * np.maximum(np.abs(ref), 1e-300)
                          + 1e-300 * (ref == 0))
            perm = rng.permutation(t)
            assert np.allclose(pool_array(x[perm], "mean"), got, rtol=1e-12, atol=0)
            assert pool_array(x[perm], "max").tolist() == pool_array(x, "max").tolist()
        case = np.array([[0.0, 1.0], [2.0, 3.0]])
        assert pool_array(case[::-1], "last").tolist() != pool_array(case, "last").tolist()
        notes.append("max/last exact, mean within 1e-12, last is order-sensitive")


def test_4_probe_recovery():
    with criterion(4, "probe recovery", 60) as notes:
        rng = np.random.default_rng(4)
        # planted noiseless linear target
        X = rng.standard_normal((200, 30)) * rng.uniform(0.5, 20, 30)
        w = np.zeros(30)
        w[[2, 7, 19]] = [1.5, -0.25, 4.0]
        y = X @ w + 10.0
        m = train_regressor("linear", X[:140], y[:140])
        rel = np.max(np.abs(predict_regressor(m, X[140:]) - y[140:]) / np.abs(y[140:]))
        assert rel <= 1e-6
        notes.append(f"linear held-out rel err {rel:.1e}")
        # separable two-class labels
        Xc = rng.standard_normal((300, 8))
        labels = np.where(Xc[:, 5] > 0, "P", "N")
        Xc[:, 5] += np.where(labels == "P", 0.3, -0.3)
        # brute-force separator check: the planted coordinate alone separates
        assert np.all((Xc[:, 5] > 0) == (labels == "P"))
        acc = np.mean(predict_classifier(train_classifier("logistic", Xc, labels), Xc) == labels)
        assert acc >= 0.99
        notes.append(f"logistic train acc {acc:.3f}")
        # MLP gradient check
        Z = rng.standard_normal((10, 8))
        worst = 0.0
        for task, n_out, target in (("regression", 1, rng.standard_normal(10)),
                                    ("classification", 3, rng.integers(0, 3, 10))):
            params = init_params(8, 128, n_out, rng)
            _, grads = loss_and_grad(params, Z, target, task)
            for name, p in params.items():
                num = np.zeros_like(p)
                for idx in np.ndindex(p.shape):
                    old = p[idx]
                    p[idx] = old + 1e-4
                    up, _ = loss_and_grad(params, Z, target, task)
                    p[idx] = old - 1e-4
                    down, _ = loss_and_grad(params, Z, target, task)
                    p[idx] = old
                    num[idx] = (up - down) / 2e-4
                denom = max(np.linalg.norm(num) + np.linalg.norm(grads[name]), 1e-12)
                worst = max(worst, np.linalg.norm(num - grads[name]) / denom)
        assert worst <= 1e-5
        notes.append(f"MLP gradient rel diff {worst:.1e}")
        # GBDT monotone training loss
        Xg = rng.standard_normal((500, 6))
        yg = np.sin(Xg[:, 0] * 2) + np.abs(Xg[:, 1]) + 0.2 * rng.standard_normal(500)
        loss = np.array(GBDTRegressor(n_trees=200).fit(Xg, yg).train_loss_)
        assert len(loss) == 200 and np.all(np.diff(loss) <= 0)
        notes.append(f"GBDT MSE {loss[0]:.3f} -> {loss[-1]:.3f} over 200 rounds")


def test_5_set_aware_accuracy_oracle():
    with criterion(5, "set-aware accuracy vs brute force on 10000 cases") as notes:
        rng = np.random.default_rng(5)
        algs = np.array(["A", "B", "C", "D"])
        for _ in range(10_000):
            n = int(rng.integers(1, 20))
            preds = list(rng.choice(algs, n))
            sets = [set(rng.choice(algs, int(rng.integers(1, 5)), replace=False))
                    for _ in range(n)]
            assert set_aware_accuracy(preds, sets) == set_aware_oracle(preds, sets)
        full = set(algs.tolist())
        assert set_aware_accuracy(list(rng.choice(algs, 50)), [full] * 50) == 1.0
        row = {a: 3.0 for a in algs}
        assert naive_argbest(row, "minimize") == full
        notes.append("10000/10000 exact; all-tied case scores 1.0")


def test_6_split_laws(tmp_path, monkeypatch):
    with criterion(6, "split laws over 100 seeds and fold reuse") as notes:
        rng = np.random.default_rng(6)
        algs = ["A", "B", "C"]
        for seed in range(100):
            n = int(rng.integers(10, 120))
            ws = {f"i{j}": WinnerSet(f"i{j}", frozenset(rng.choice(algs, int(rng.integers(1, 4)),
                                                                    replace=False)))
                  for j in range(n)}
            s = stratified_split(ws, 0.7, seed)
            assert s.to_json() == stratified_split(ws, 0.7, seed).to_json()
            for st in set(s.strata):
                idx = [i for i, x in enumerate(s.strata) if x == st]
                assert abs(sum(s.tags[i] == "train" for i in idx) - 0.7 * len(idx)) <= 1
            folds = stratified_kfold(ws, 5, seed)
            assert [f.to_json() for f in folds] == [f.to_json() for f in stratified_kfold(ws, 5, seed)]
            tests = [set(f.test_index.tolist()) for f in folds]
            assert sum(map(len, tests)) == n and set().union(*tests) == set(range(n))
            for st in set(folds[0].strata):
                counts = [sum(folds[0].strata[i] == st for i in t) for t in tests]
                assert max(counts) - min(counts) <= 1
        notes.append("partition, per-stratum balance and determinism hold for 100 seeds")

        # fold reuse: record what every classifier is trained and tested on
        seen = {}
        real = pipeline.make_classifier

        def spy(kind, cfg=None):
            est = real(kind, cfg)
            fit, predict = est.fit, est.predict

            def fit_(X, y):
                seen.setdefault("fit", []).append((kind, np.asarray(y).tobytes()))
                return fit(X, y)

            def predict_(X):
                seen.setdefault("test_rows", []).append((kind, X.shape[0]))
                return predict(X)
            est.fit, est.predict = fit_, predict_
            return est

        monkeypatch.setattr(pipeline, "make_classifier", spy)
        cfg = load_config(write_demo_workspace(tmp_path, n_instances=30, problems=["KP"],
                                               config_overrides={
                                                   "representations": ["standard"],
                                                   "train": {"mlp": {"epochs": 5},
                                                             "gbdt": {"n_trees": 5}}}))
        pipeline.run_algorithm_selection(cfg)
        by_kind = {}
        for kind, labels in seen["fit"]:
            by_kind.setdefault(kind, []).append(labels)
        runs = list(by_kind.values())
        assert all(r == runs[0] for r in runs)
        notes.append(f"{len(runs)} classifiers x {len(runs[0])} fits saw byte-identical folds")


@pytest.fixture(scope="module")
def mock_workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    return root, write_demo_workspace(root, n_instances=100, seed=0)


def test_7_mock_direct_querying(mock_workspace):
    root, cfg_path = mock_workspace
    with criterion(7, "mock direct querying, direct tier on standard", 120) as notes:
        assert main(["query", "-c", str(cfg_path)]) == 0
        report_dir = root / "out" / "reports"
        rep = load_report(report_dir / "direct.json")
        for kind in ProblemKind:
            vals = [r["value"] for r in rep.records
                    if r["problem"] == kind.value and r["representation"] == "standard"
                    and r["tier"] == "direct" and r["metric"] == "equals"]
            assert vals == [1.0], (kind, vals)
        header = next(csv.reader(open(report_dir / "direct_pivot.csv")))
        metric_cols = [h for h in header if "/" in h]
        assert len(metric_cols) == 12
        assert [c.split("/")[1] for c in metric_cols[:4]] == ["mae", "equals", "within_1pct",
                                                              "within_5pct"]
        notes.append("Equals = 1.00 for BPP, GCP, JSSP, KP; pivot has 12 metric columns")


def test_8_mock_probing_and_selection(mock_workspace):
    root, cfg_path = mock_workspace
    with criterion(8, "mock probing and algorithm selection", 300) as notes:
        assert main(["probe", "-c", str(cfg_path)]) == 0
        assert main(["select", "-c", str(cfg_path)]) == 0
        report_dir = root / "out" / "reports"
        probing = load_report(report_dir / "probing.json")
        within = [r["value"] for r in probing.records if r["model"] == "linear"
                  and r["metric"] == "within_1pct" and r["value"] is not None]
        assert within and min(within) >= 0.95
        notes.append(f"linear within-1% min {min(within):.3f} over {len(within)} cells")
        sel = load_report(report_dir / "selection.json")
        acc = {(r["problem"], r["representation"], r["pooling"], r["model"]): r["value"]
               for r in sel.records if r["source"] == "llm"}
        worst_cell = 1.0
        for kind in ProblemKind:
            cells = [k[:3] for k in acc if k[0] == kind.value and k[3] == "most_frequent"]
            for model in ("gbdt", "logistic"):
                margins = [acc[(*c, model)] - acc[(*c, "most_frequent")] for c in cells]
                worst_cell = min(worst_cell, min(margins))
                assert np.mean(margins) >= 0.15, (kind, model, np.mean(margins))
                notes.append(f"{kind.value} {model} +{np.mean(margins):.3f}")
        notes.append(f"smallest single-cell margin {worst_cell:+.3f}")


def _digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(Path(directory).iterdir()) if p.is_file()}


def test_9_determinism(tmp_path):
    with criterion(9, "two full mock runs give byte-identical reports") as notes:
        digests = []
        for run in ("a", "b"):
            cfg_path = write_demo_workspace(tmp_path / run, n_instances=30, seed=0,
                                            config_overrides={"train": {"mlp": {"epochs": 50}}})
            for cmd in ("query", "probe", "select"):
                assert main([cmd, "-c", str(cfg_path)]) == 0
            digests.append(_digest(tmp_path / run / "out" / "reports"))
        assert digests[0] == digests[1]
        notes.append(f"{len(digests[0])} report files identical")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
