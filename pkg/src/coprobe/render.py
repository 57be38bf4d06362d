"""Textual encodings of instances: standard files, prose, and dzn-style code."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .instances import (BinPackingInstance, GraphInstance, JobShopInstance,
                        KnapsackInstance, ProblemKind)


class Representation(str, Enum):
    standard = "standard"
    natural_language = "natural_language"
    code_like = "code_like"


@dataclass(frozen=True)
class Rendering:
    instance_name: str
    representation: Representation
    text: str
    problem: ProblemKind
    token_hint: int | None = None


def _token_hint(text: str) -> int:
    return int(len(text.split()) * 1.3)


def _make(instance, rep, text):
    return Rendering(instance.name, Representation(rep), text, instance.kind, _token_hint(text))


def render_standard(instance) -> Rendering:
    if isinstance(instance, GraphInstance):
        lines = [f"p edge {instance.num_nodes} {instance.num_edges}"]
        lines += [f"e {u} {v}" for u, v in instance.edges]
    elif isinstance(instance, BinPackingInstance):
        lines = [f"{len(instance.weights)} {instance.capacity}"]
        lines += [str(w) for w in instance.weights]
    elif isinstance(instance, JobShopInstance):
        lines = [f"{instance.num_jobs} {instance.num_machines}"]
        lines += [" ".join(f"{m} {d}" for m, d in job) for job in instance.operations]
    elif isinstance(instance, KnapsackInstance):
        lines = [f"{len(instance.items)} {instance.capacity}"]
        lines += [f"{p} {w}" for w, p in instance.items]
    else:
        raise TypeError(f"not an instance: {type(instance).__name__}")
    return _make(instance, Representation.standard, "\n".join(lines) + "\n")


def render_natural_language(instance) -> Rendering:
    sentences = [f"The instance is named {instance.name}."]
    if isinstance(instance, GraphInstance):
        sentences.append(
            f"The graph has {instance.num_nodes} nodes and {instance.num_edges} edges.")
        sentences += [f"There is an edge between node {u} and node {v}."
                      for u, v in instance.edges]
    elif isinstance(instance, BinPackingInstance):
        sentences.append(f"There are {len(instance.weights)} items "
                         f"and the bin capacity is {instance.capacity}.")
        sentences += [f"Item {i} has weight {w}." for i, w in enumerate(instance.weights, 1)]
    elif isinstance(instance, JobShopInstance):
        sentences.append(f"There are {instance.num_jobs} jobs "
                         f"and {instance.num_machines} machines.")
        for j, job in enumerate(instance.operations, 1):
            sentences += [f"Operation {k} of job {j} runs on machine {m} for {d} time units."
                          for k, (m, d) in enumerate(job, 1)]
    elif isinstance(instance, KnapsackInstance):
        sentences.append(f"There are {len(instance.items)} items "
                         f"and the knapsack capacity is {instance.capacity}.")
        sentences += [f"Item {i} has weight {w} and profit {p}."
                      for i, (w, p) in enumerate(instance.items, 1)]
    else:
        raise TypeError(f"not an instance: {type(instance).__name__}")
    return _make(instance, Representation.natural_language, " ".join(sentences) + "\n")


def _dzn_1d(values) -> str:
    return "[" + ", ".join(str(v) for v in values) + "]"


def _dzn_2d(rows) -> str:
    if not rows:
        return "[| |]"
    return "[| " + " | ".join(", ".join(str(v) for v in r) for r in rows) + " |]"


def render_code_like(instance) -> Rendering:
    if isinstance(instance, GraphInstance):
        lines = [
            f"int: n = {instance.num_nodes};",
            "set of int: V = 1..n;",
            f"int: num_edges = {instance.num_edges};",
            f"array[1..num_edges, 1..2] of V: E = {_dzn_2d(instance.edges)};",
        ]
    elif isinstance(instance, BinPackingInstance):
        lines = [
            f"int: n = {len(instance.weights)};",
            f"int: capacity = {instance.capacity};",
            f"array[1..n] of int: weight = {_dzn_1d(instance.weights)};",
        ]
    elif isinstance(instance, JobShopInstance):
        lines = [
            f"int: n_jobs = {instance.num_jobs};",
            f"int: n_machines = {instance.num_machines};",
            "array[1..n_jobs, 1..n_machines] of int: machine = "
            f"{_dzn_2d([[m for m, _ in job] for job in instance.operations])};",
            "array[1..n_jobs, 1..n_machines] of int: duration = "
            f"{_dzn_2d([[d for _, d in job] for job in instance.operations])};",
        ]
    elif isinstance(instance, KnapsackInstance):
        lines = [
            f"int: n = {len(instance.items)};",
            f"int: capacity = {instance.capacity};",
            f"array[1..n] of int: profit = {_dzn_1d(p for _, p in instance.items)};",
            f"array[1..n] of int: weight = {_dzn_1d(w for w, _ in instance.items)};",
        ]
    else:
        raise TypeError(f"not an instance: {type(instance).__name__}")
    return _make(instance, Representation.code_like, "\n".join(lines) + "\n")


_RENDERERS = {
    Representation.standard: render_standard,
    Representation.natural_language: render_natural_language,
    Representation.code_like: render_code_like,
}


def render(instance, representation) -> Rendering:
    return _RENDERERS[Representation(representation)](instance)


def export_rendering(rendering: Rendering, directory) -> Path:
    """Write ``<instance>.<representation>.txt`` under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{rendering.instance_name}.{rendering.representation.value}.txt"
    path.write_text(rendering.text, encoding="utf-8")
    return path
