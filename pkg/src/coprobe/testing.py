"""Fixture generators for tests and the desk-scale demo workspace.

Not a benchmark generator: instances are small and random, and the demo
performance tables follow a planted threshold rule so that selection
accuracy has a known ceiling.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np
import yaml

from .features import extract_features, feature_catalog
from .instances import (BinPackingInstance, GraphInstance, JobShopInstance, KnapsackInstance,
                        ProblemKind)
from .render import render_standard

FILE_SUFFIX = {ProblemKind.GCP: "col", ProblemKind.BPP: "bpp", ProblemKind.JSSP: "jsp",
               ProblemKind.KP: "kp"}


def random_instance(kind, rng, max_elements=30, name="inst", connected_degree=False):
    """A valid random instance with at most ``max_elements`` nodes/items/operations.

    ``connected_degree`` guarantees every graph node has degree >= 1.
    """
    kind = ProblemKind(kind)
    if kind is ProblemKind.GCP:
        lo = 2 if connected_degree else 1
        n = int(rng.integers(lo, max_elements + 1))
        p = rng.uniform(0.05, 0.9)
        edges = {(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)
                 if rng.random() < p}
        if connected_degree:
            touched = {x for e in edges for x in e}
            for u in range(1, n + 1):
                if u not in touched:
                    v = int(rng.integers(1, n))
                    v = v + 1 if v >= u else v
                    edges.add((min(u, v), max(u, v)))
                    touched.update((u, v))
        return GraphInstance(name, n, tuple(sorted(edges)))
    if kind is ProblemKind.BPP:
        cap = int(rng.integers(1, 200))
        k = int(rng.integers(1, max_elements + 1))
        return BinPackingInstance(name, cap, tuple(int(w) for w in rng.integers(1, cap + 1, k)))
    if kind is ProblemKind.JSSP:
        jobs = int(rng.integers(1, max(2, max_elements // 2) + 1))
        machines = int(rng.integers(1, max(1, max_elements // jobs) + 1))
        ops = tuple(tuple((int(m), int(rng.integers(1, 100)))
                          for m in rng.permutation(machines)) for _ in range(jobs))
        return JobShopInstance(name, jobs, machines, ops)
    n = int(rng.integers(1, max_elements + 1))
    items = tuple((int(rng.integers(1, 100)), int(rng.integers(1, 100))) for _ in range(n))
    return KnapsackInstance(name, int(rng.integers(1, 1000)), items)


def count_index_mutations(kind, text, rng):
    """Single-token mutations of ``text`` that must make it unparsable.

    Yields ``(description, mutated_text)``. Count mutations change one digit
    of a declared count; index mutations push one index out of range.
    """
    kind = ProblemKind(kind)
    lines = text.split("\n")
    head = lines[0].split()

    def with_line(i, toks):
        new = list(lines)
        new[i] = " ".join(toks)
        return "\n".join(new)

    def digit_change(tok):
        pos = int(rng.integers(len(tok)))
        choices = [d for d in "0123456789" if d != tok[pos]]
        return tok[:pos] + choices[int(rng.integers(len(choices)))] + tok[pos + 1:]

    body = [i for i, l in enumerate(lines[1:], 1) if l.strip()]
    if kind is ProblemKind.GCP:
        n = int(head[2])
        yield "edge count", with_line(0, [head[0], head[1], head[2], digit_change(head[3])])
        if body:
            i = body[int(rng.integers(len(body)))]
            toks = lines[i].split()
            toks[1 + int(rng.integers(2))] = str(n + 1 + int(rng.integers(3)))
            yield "node index above range", with_line(i, toks)
            toks = lines[i].split()
            toks[1 + int(rng.integers(2))] = "0"
            yield "node index zero", with_line(i, toks)
    else:
        count_pos = 0
        yield "declared count", with_line(0, [digit_change(head[0]) if j == count_pos else t
                                              for j, t in enumerate(head)])
        if kind is ProblemKind.JSSP:
            m = int(head[1])
            yield "machine count", with_line(0, [head[0], digit_change(head[1])])
            i = body[int(rng.integers(len(body)))]
            toks = lines[i].split()
            toks[2 * int(rng.integers(m))] = str(m + int(rng.integers(3)))
            yield "machine index out of range", with_line(i, toks)
        elif kind is ProblemKind.BPP:
            cap = int(head[1])
            i = body[int(rng.integers(len(body)))]
            yield "weight above capacity", with_line(i, [str(cap + 1 + int(rng.integers(5)))])


# -- demo workspace --------------------------------------------------------------------

_PORTFOLIOS = {
    ProblemKind.GCP: (("DSATUR", "MAXIS"), "feat_density", "minimize"),
    ProblemKind.BPP: (("FFD", "BFD"), "feat_weight_mean", "minimize"),
    ProblemKind.JSSP: (("SPT", "LPT", "MWKR"), "feat_duration_mean", "minimize"),
    ProblemKind.KP: (("GREEDY", "DP", "GA"), "feat_efficiency_mean", "maximize"),
}


def planted_performance_table(instances, kind, rng, tie_fraction=0.1) -> str:
    """CSV whose winner is decided by a median threshold on one planted feature.

    Above the median the first algorithm wins, otherwise the second; a
    fraction of instances get an exact two-way tie. Any further algorithms
    always lose.
    """
    kind = ProblemKind(kind)
    algs, feat, sense = _PORTFOLIOS[kind]
    vals = np.array([extract_features(i).values[feat] for i in instances], dtype=float)
    thr = float(np.median(vals))
    good, bad = (10.0, 12.0) if sense == "minimize" else (12.0, 10.0)
    worst = 15.0 if sense == "minimize" else 5.0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", *algs])
    for inst, v in zip(instances, vals):
        row = [worst] * len(algs)
        if rng.random() < tie_fraction:
            row[0] = row[1] = good
        elif v > thr:
            row[0], row[1] = good, bad
        else:
            row[0], row[1] = bad, good
        w.writerow([inst.name, *row])
    return buf.getvalue()


def isa_feature_csv(instances, kind, rng, n_noise=3) -> str:
    """Opaque ISA-style descriptors: log-transformed truths plus noise columns."""
    names = [s.name for s in feature_catalog(kind)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance", *[f"isa_{j}" for j in range(len(names) + n_noise)]])
    for inst in instances:
        fv = extract_features(inst).values
        vals = [np.log1p(abs(fv[n])) if fv[n] is not None else "" for n in names]
        vals += list(rng.standard_normal(n_noise))
        w.writerow([inst.name, *[v if v == "" else repr(float(v)) for v in vals]])
    return buf.getvalue()


def write_demo_workspace(root, n_instances=60, seed=0, problems=tuple(ProblemKind),
                         max_elements=30, config_overrides=None) -> Path:
    """Create instances, planted performance tables, ISA CSVs and ``config.yaml``.

    Returns the config path.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    cfg = {"output_dir": "out", "seed": seed,
           "provider": {"kind": "mock", "concurrency": 4,
                        "mock": {"dim": 32, "max_tokens": 16}},
           "problems": {}}
    for kind in map(ProblemKind, problems):
        inst_dir = root / "instances" / kind.value
        inst_dir.mkdir(parents=True, exist_ok=True)
        instances = []
        for i in range(n_instances):
            inst = random_instance(kind, rng, max_elements, f"{kind.value.lower()}_{i:04d}",
                                   connected_degree=True)
            if kind is ProblemKind.GCP and inst.num_nodes < 3:
                inst = GraphInstance(inst.name, 3, ((1, 2), (1, 3), (2, 3)))
            instances.append(inst)
            (inst_dir / f"{inst.name}.{FILE_SUFFIX[kind]}").write_text(
                render_standard(inst).text, encoding="utf-8")
        _, _, sense = _PORTFOLIOS[kind]
        perf = root / "performance" / f"{kind.value}.csv"
        perf.parent.mkdir(parents=True, exist_ok=True)
        perf.write_text(planted_performance_table(instances, kind, rng), encoding="utf-8")
        isa = root / "isa" / f"{kind.value}.csv"
        isa.parent.mkdir(parents=True, exist_ok=True)
        isa.write_text(isa_feature_csv(instances, kind, rng), encoding="utf-8")
        cfg["problems"][kind.value] = {
            "instances": f"instances/{kind.value}",
            "performance": f"performance/{kind.value}.csv",
            "objective_sense": sense,
            "isa_features": f"isa/{kind.value}.csv",
        }
    cfg.update(config_overrides or {})
    path = root / "config.yaml"
    path.write_text(yaml.safe_dump(cfg, sort_keys=False), encoding="utf-8")
    return path
