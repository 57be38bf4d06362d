"""Benchmark instance types, parsers and performance-table ingestion.

Four problem kinds are supported. Graph colouring uses DIMACS; the other
three use the community layouts below:

* BPP  -- ``<num_items> <capacity>`` then one weight per line
* JSSP -- ``<jobs> <machines>`` then one line of ``machine duration`` pairs per job
* KP   -- ``<num_items> <capacity>`` then ``<profit> <weight>`` per line
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Union


class ProblemKind(str, Enum):
    BPP = "BPP"
    GCP = "GCP"
    JSSP = "JSSP"
    KP = "KP"

    @property
    def full_name(self) -> str:
        return _FULL_NAMES[self]


_FULL_NAMES = {
    ProblemKind.BPP: "Bin Packing Problem",
    ProblemKind.GCP: "Graph Coloring Problem",
    ProblemKind.JSSP: "Job Shop Scheduling Problem",
    ProblemKind.KP: "Knapsack Problem",
}


class InstanceFormatError(ValueError):
    """Raised when an instance file violates its grammar or invariants."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class PerformanceTableError(ValueError):
    pass


@dataclass(frozen=True)
class GraphInstance:
    name: str
    num_nodes: int
    edges: tuple[tuple[int, int], ...]  # (u, v) with u < v, sorted

    kind = ProblemKind.GCP

    def __post_init__(self):
        if self.num_nodes < 1:
            raise ValueError("num_nodes must be positive")
        norm = sorted({(min(u, v), max(u, v)) for u, v in self.edges})
        if len(norm) != len(self.edges):
            raise ValueError("duplicate edges")
        for u, v in norm:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if u < 1 or v > self.num_nodes:
                raise ValueError(f"edge ({u}, {v}) out of range")
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class BinPackingInstance:
    name: str
    capacity: int
    weights: tuple[int, ...]

    kind = ProblemKind.BPP

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        if self.capacity < 1:
            raise ValueError("capacity must be positive")
        if not self.weights:
            raise ValueError("at least one item is required")
        for w in self.weights:
            if w < 1 or w > self.capacity:
                raise ValueError(f"weight {w} outside [1, {self.capacity}]")


@dataclass(frozen=True)
class JobShopInstance:
    name: str
    num_jobs: int
    num_machines: int
    operations: tuple[tuple[tuple[int, int], ...], ...]  # per job: (machine, duration)

    kind = ProblemKind.JSSP

    def __post_init__(self):
        ops = tuple(tuple((int(m), int(d)) for m, d in job) for job in self.operations)
        object.__setattr__(self, "operations", ops)
        if self.num_jobs < 1 or self.num_machines < 1:
            raise ValueError("jobs and machines must be positive")
        if len(ops) != self.num_jobs:
            raise ValueError("operations must list every job")
        for job in ops:
            if len(job) != self.num_machines:
                raise ValueError("each job needs exactly num_machines operations")
            for m, d in job:
                if not 0 <= m < self.num_machines:
                    raise ValueError(f"machine {m} out of range")
                if d < 1:
                    raise ValueError("durations must be positive")


@dataclass(frozen=True)
class KnapsackInstance:
    name: str
    capacity: int
    items: tuple[tuple[int, int], ...]  # (weight, profit)

    kind = ProblemKind.KP

    def __post_init__(self):
        items = tuple((int(w), int(p)) for w, p in self.items)
        object.__setattr__(self, "items", items)
        if self.capacity < 1:
            raise ValueError("capacity must be positive")
        if not items:
            raise ValueError("at least one item is required")
        for w, p in items:
            if w < 1 or p < 1:
                raise ValueError("weights and profits must be positive")


Instance = Union[GraphInstance, BinPackingInstance, JobShopInstance, KnapsackInstance]


def _lines(text: str) -> list[tuple[int, list[str]]]:
    """Split into (1-based line number, tokens), skipping blank lines."""
    out = []
    for i, raw in enumerate(text.replace("\r\n", "\n").replace("\r", "\n").split("\n"), 1):
        toks = raw.split()
        if toks:
            out.append((i, toks))
    return out


def _int(tok: str, line: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InstanceFormatError(f"{what} is not an integer: {tok!r}", line) from None


def _parse_gcp(lines, name):
    header = None
    edges: dict[tuple[int, int], int] = {}
    for ln, toks in lines:
        tag = toks[0]
        if tag.startswith("c"):
            continue
        if tag == "p":
            if header is not None:
                raise InstanceFormatError("second problem line", ln)
            if len(toks) != 4:
                raise InstanceFormatError("problem line must be 'p FORMAT NODES EDGES'", ln)
            n = _int(toks[2], ln, "NODES")
            m = _int(toks[3], ln, "EDGES")
            if n < 1 or m < 0:
                raise InstanceFormatError("NODES must be positive and EDGES non-negative", ln)
            header = (ln, n, m)
        elif tag == "e":
            if header is None:
                raise InstanceFormatError("edge line before problem line", ln)
            if len(toks) != 3:
                raise InstanceFormatError("edge line must be 'e u v'", ln)
            u, v = _int(toks[1], ln, "u"), _int(toks[2], ln, "v")
            n = header[1]
            if not (1 <= u <= n and 1 <= v <= n):
                raise InstanceFormatError(f"node index out of range [1, {n}]", ln)
            if u == v:
                raise InstanceFormatError(f"self-loop on node {u}", ln)
            key = (min(u, v), max(u, v))
            if key in edges:
                raise InstanceFormatError(
                    f"duplicate edge {key} (first on line {edges[key]})", ln)
            edges[key] = ln
        else:
            raise InstanceFormatError(f"unknown line type {tag!r}", ln)
    if header is None:
        raise InstanceFormatError("missing problem line", lines[-1][0])
    hl, n, m = header
    if len(edges) != m:
        raise InstanceFormatError(f"header declares {m} edges, found {len(edges)}", hl)
    return GraphInstance(name, n, tuple(edges))


def _header_pair(lines, what):
    ln, toks = lines[0]
    if len(toks) != 2:
        raise InstanceFormatError(f"header must be '{what}'", ln)
    a, b = (_int(t, ln, "header field") for t in toks)
    if a < 1 or b < 1:
        raise InstanceFormatError("header values must be positive", ln)
    return ln, a, b


def _parse_bpp(lines, name):
    hl, n, cap = _header_pair(lines, "<num_items> <capacity>")
    body = lines[1:]
    if len(body) != n:
        raise InstanceFormatError(f"header declares {n} items, found {len(body)}", hl)
    weights = []
    for ln, toks in body:
        if len(toks) != 1:
            raise InstanceFormatError("expected one weight per line", ln)
        w = _int(toks[0], ln, "weight")
        if not 1 <= w <= cap:
            raise InstanceFormatError(f"weight {w} outside [1, {cap}]", ln)
        weights.append(w)
    return BinPackingInstance(name, cap, tuple(weights))


def _parse_jssp(lines, name):
    hl, jobs, machines = _header_pair(lines, "<jobs> <machines>")
    body = lines[1:]
    if len(body) != jobs:
        raise InstanceFormatError(f"header declares {jobs} jobs, found {len(body)}", hl)
    ops = []
    for ln, toks in body:
        if len(toks) != 2 * machines:
            raise InstanceFormatError(
                f"expected {machines} 'machine duration' pairs, found {len(toks)} tokens", ln)
        job = []
        for k in range(machines):
            m = _int(toks[2 * k], ln, "machine")
            d = _int(toks[2 * k + 1], ln, "duration")
            if not 0 <= m < machines:
                raise InstanceFormatError(f"machine index {m} outside [0, {machines})", ln)
            if d < 1:
                raise InstanceFormatError("duration must be positive", ln)
            job.append((m, d))
        ops.append(tuple(job))
    return JobShopInstance(name, jobs, machines, tuple(ops))


def _parse_kp(lines, name):
    hl, n, cap = _header_pair(lines, "<num_items> <capacity>")
    body = lines[1:]
    if len(body) != n:
        raise InstanceFormatError(f"header declares {n} items, found {len(body)}", hl)
    items = []
    for ln, toks in body:
        if len(toks) != 2:
            raise InstanceFormatError("expected '<profit> <weight>'", ln)
        p = _int(toks[0], ln, "profit")
        w = _int(toks[1], ln, "weight")
        if p < 1 or w < 1:
            raise InstanceFormatError("profit and weight must be positive", ln)
        items.append((w, p))
    return KnapsackInstance(name, cap, tuple(items))


_PARSERS = {
    ProblemKind.GCP: _parse_gcp,
    ProblemKind.BPP: _parse_bpp,
    ProblemKind.JSSP: _parse_jssp,
    ProblemKind.KP: _parse_kp,
}


def parse_instance(kind, text: str, name: str = "instance") -> Instance:
    """Parse ``text`` in the standard grammar of ``kind``.

    Raises :class:`InstanceFormatError` carrying the offending line number.
    """
    kind = ProblemKind(kind)
    lines = _lines(text)
    if kind is ProblemKind.GCP:
        # Comment-only files are as empty as blank ones.
        if not [l for l in lines if not l[1][0].startswith("c")]:
            raise InstanceFormatError("empty input", 1)
    elif not lines:
        raise InstanceFormatError("empty input", 1)
    return _PARSERS[kind](lines, name)


def load_instance(kind, path) -> Instance:
    from pathlib import Path

    path = Path(path)
    return parse_instance(kind, path.read_text(encoding="utf-8"), name=path.name.split(".")[0])


@dataclass(frozen=True)
class PerformanceTable:
    problem: ProblemKind
    algorithms: tuple[str, ...]
    rows: dict  # instance name -> tuple of objective values
    objective_sense: str = "minimize"

    def __post_init__(self):
        if self.objective_sense not in ("minimize", "maximize"):
            raise PerformanceTableError(f"unknown objective sense {self.objective_sense!r}")
        if len(self.algorithms) < 2:
            raise PerformanceTableError("a portfolio needs at least 2 algorithms")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise PerformanceTableError("algorithm identifiers must be unique")
        for name, vals in self.rows.items():
            if len(vals) != len(self.algorithms):
                raise PerformanceTableError(f"row {name!r} has {len(vals)} values")

    def row(self, name: str) -> dict[str, float]:
        return dict(zip(self.algorithms, self.rows[name]))


def load_performance_table(text: str, problem=ProblemKind.GCP,
                           objective_sense: str = "minimize") -> PerformanceTable:
    """Read a comma-delimited table whose header is ``instance,<alg1>,<alg2>,...``."""
    reader = csv.reader(io.StringIO(text.replace("\r\n", "\n")))
    rows = [r for r in reader if any(c.strip() for c in r)]
    if not rows:
        raise PerformanceTableError("empty performance table")
    header = [c.strip() for c in rows[0]]
    if header[0].lower() != "instance":
        raise PerformanceTableError("first header column must be 'instance'")
    algorithms = tuple(header[1:])
    if len(algorithms) < 2:
        raise PerformanceTableError("a portfolio needs at least 2 algorithms")
    if len(set(algorithms)) != len(algorithms):
        raise PerformanceTableError("algorithm identifiers must be unique")
    data: dict[str, tuple[float, ...]] = {}
    for lineno, r in enumerate(rows[1:], 2):
        if len(r) != len(header):
            raise PerformanceTableError(
                f"row {lineno}: ragged row with {len(r) - 1} values for {len(algorithms)} algorithms")
        name = r[0].strip()
        if name in data:
            raise PerformanceTableError(f"row {lineno}: duplicate instance {name!r}")
        vals = []
        for cell in r[1:]:
            try:
                v = float(cell)
            except ValueError:
                raise PerformanceTableError(f"row {lineno}: non-numeric cell {cell!r}") from None
            if not math.isfinite(v):
                raise PerformanceTableError(f"row {lineno}: non-finite cell {cell!r}")
            vals.append(v)
        data[name] = tuple(vals)
    return PerformanceTable(ProblemKind(problem), algorithms, data, objective_sense)
