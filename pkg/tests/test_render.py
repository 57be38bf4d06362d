import re

import numpy as np
import pytest

from coprobe.instances import (BinPackingInstance, GraphInstance, JobShopInstance,
                               KnapsackInstance, ProblemKind, parse_instance)
from coprobe.render import (Representation, export_rendering, render, render_code_like,
                            render_natural_language, render_standard)
from coprobe.testing import random_instance


def test_standard_examples():
    g = GraphInstance("g", 3, ((1, 2), (2, 3)))
    assert render_standard(g).text == "p edge 3 2\ne 1 2\ne 2 3\n"
    assert render_standard(BinPackingInstance("b", 10, (3, 7))).text == "2 10\n3\n7\n"


def test_standard_sorts_edges():
    g = GraphInstance("g", 4, ((3, 4), (2, 1), (1, 3)))
    assert render_standard(g).text == "p edge 4 3\ne 1 2\ne 1 3\ne 3 4\n"


def test_big_graph_header():
    rng = np.random.default_rng(0)
    pairs = [(u, v) for u in range(1, 101) for v in range(u + 1, 101)]
    idx = rng.choice(len(pairs), 1902, replace=False)
    g = GraphInstance("g", 100, tuple(pairs[i] for i in idx))
    assert render_standard(g).text.startswith("p edge 100 1902\n")
    nl = render_natural_language(g).text
    assert "The graph has 100 nodes and 1902 edges." in nl


def test_natural_language_graph():
    text = render_natural_language(GraphInstance("g", 2, ((1, 2),))).text
    assert text.startswith("The instance is named g. The graph has 2 nodes and 1 edges.")
    assert text.count("There is an edge between node 1 and node 2.") == 1
    assert text.count("There is an edge") == 1


def test_natural_language_knapsack_template():
    text = render_natural_language(KnapsackInstance("k", 10, ((3, 5),))).text
    expected = ("The instance is named k. There are 1 items and the knapsack capacity is 10. "
                "Item 1 has weight 3 and profit 5.\n")
    assert text == expected


def test_code_like_graph_order():
    text = render_code_like(GraphInstance("g", 3, ((1, 2), (2, 3)))).text
    assert "n = 3;" in text and "num_edges = 2;" in text
    order = [text.index(s) for s in ("int: n =", "set of int: V", "int: num_edges",
                                     "array[1..num_edges, 1..2] of V: E")]
    assert order == sorted(order)
    assert "E = [| 1, 2 | 2, 3 |];" in text


def test_code_like_jobshop():
    j = JobShopInstance("j", 2, 2, (((0, 5), (1, 3)), ((1, 2), (0, 4))))
    text = render_code_like(j).text
    assert "n_jobs = 2;" in text
    assert "duration = [| 5, 3 | 2, 4 |];" in text
    assert "machine = [| 0, 1 | 1, 0 |];" in text


def test_edgeless_graph_renders():
    g = GraphInstance("g", 3, ())
    assert "E = [| |];" in render_code_like(g).text
    assert render_standard(g).text == "p edge 3 0\n"


def test_token_hint_and_export(tmp_path):
    r = render(BinPackingInstance("b", 10, (3, 7)), "natural_language")
    assert r.token_hint == int(len(r.text.split()) * 1.3)
    path = export_rendering(r, tmp_path)
    assert path.name == "b.natural_language.txt"
    assert path.read_text(encoding="utf-8") == r.text


@pytest.mark.parametrize("kind", list(ProblemKind))
@pytest.mark.parametrize("rep", list(Representation))
def test_deterministic(kind, rep):
    inst = random_instance(kind, np.random.default_rng(1))
    assert render(inst, rep).text == render(inst, rep).text
    assert render(inst, rep).text.strip()


# -- faithfulness: re-extract every datum with a scanner written for this test ----------

def _ints(s):
    return [int(x) for x in re.findall(r"-?\d+", s)]


def _data(inst):
    """Schema slots -> values, straight from the dataclass."""
    if isinstance(inst, GraphInstance):
        return {"n": [inst.num_nodes], "m": [inst.num_edges],
                "edges": [x for e in inst.edges for x in e]}
    if isinstance(inst, BinPackingInstance):
        return {"n": [len(inst.weights)], "capacity": [inst.capacity],
                "weight": list(inst.weights)}
    if isinstance(inst, JobShopInstance):
        return {"jobs": [inst.num_jobs], "machines": [inst.num_machines],
                "machine": [m for job in inst.operations for m, _ in job],
                "duration": [d for job in inst.operations for _, d in job]}
    return {"n": [len(inst.items)], "capacity": [inst.capacity],
            "weight": [w for w, _ in inst.items], "profit": [p for _, p in inst.items]}


def _scan_code_like(text):
    out = {}
    for name, value in re.findall(r"(\w+) = ([^;]+);", text):
        if ".." in value:
            continue
        out[name] = _ints(value)
    return out


def _scan_natural(inst, text):
    body = text.split(".", 1)[1]  # drop the name sentence
    if isinstance(inst, GraphInstance):
        head = re.search(r"has (\d+) nodes and (\d+) edges", body)
        edges = re.findall(r"between node (\d+) and node (\d+)", body)
        return {"n": [int(head[1])], "m": [int(head[2])],
                "edges": [int(x) for e in edges for x in e]}
    if isinstance(inst, BinPackingInstance):
        head = re.search(r"There are (\d+) items and the bin capacity is (\d+)", body)
        return {"n": [int(head[1])], "capacity": [int(head[2])],
                "weight": _ints(" ".join(re.findall(r"has weight (\d+)", body)))}
    if isinstance(inst, JobShopInstance):
        head = re.search(r"There are (\d+) jobs and (\d+) machines", body)
        ops = re.findall(r"runs on machine (\d+) for (\d+) time units", body)
        return {"jobs": [int(head[1])], "machines": [int(head[2])],
                "machine": [int(m) for m, _ in ops], "duration": [int(d) for _, d in ops]}
    head = re.search(r"There are (\d+) items and the knapsack capacity is (\d+)", body)
    items = re.findall(r"has weight (\d+) and profit (\d+)", body)
    return {"n": [int(head[1])], "capacity": [int(head[2])],
            "weight": [int(w) for w, _ in items], "profit": [int(p) for _, p in items]}


_CODE_SLOTS = {
    "GraphInstance": {"n": "n", "num_edges": "m", "E": "edges"},
    "BinPackingInstance": {"n": "n", "capacity": "capacity", "weight": "weight"},
    "JobShopInstance": {"n_jobs": "jobs", "n_machines": "machines", "machine": "machine",
                        "duration": "duration"},
    "KnapsackInstance": {"n": "n", "capacity": "capacity", "weight": "weight",
                         "profit": "profit"},
}


@pytest.mark.parametrize("kind", list(ProblemKind))
def test_every_datum_appears_once_per_slot(kind):
    rng = np.random.default_rng(11)
    for _ in range(40):
        inst = random_instance(kind, rng)
        expected = _data(inst)
        scanned = _scan_code_like(render_code_like(inst).text)
        slots = _CODE_SLOTS[type(inst).__name__]
        assert set(scanned) == set(slots)
        assert {slots[k]: v for k, v in scanned.items()} == expected
        assert _scan_natural(inst, render_natural_language(inst).text) == expected
        assert parse_instance(kind, render_standard(inst).text, inst.name) == inst
