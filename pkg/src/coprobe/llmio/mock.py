"""Deterministic stand-in for the LLM service.

Direct queries are answered by reading the prompt: header values are pulled
out with regular expressions, other features are computed from a parsed
``standard`` instance and then perturbed. Hidden states carry each
instance's z-scored ground-truth vector in the first F coordinates of every
token; the remaining coordinates are seeded Gaussian noise.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading

import numpy as np

from ..features import Complexity, ValueType, extract_features, feature_catalog
from ..instances import InstanceFormatError, ProblemKind, parse_instance

_PROBLEM_RE = re.compile(r"combinatorial optimization problem: (.+?)\.\n")
_FEATURE_RE = re.compile(r"- Feature name: (\S+)")
_INSTANCE_RE = re.compile(r'The instance is provided here: """\n(.*?)\n"""', re.S)
_BY_FULL_NAME = {k.full_name: k for k in ProblemKind}

# (problem, representation) -> feature -> regex whose group 1 is the value
_DIRECT = {
    (ProblemKind.GCP, "standard"): {
        "feat_nodes": r"^p\s+\S+\s+(\d+)\s+\d+", "feat_edges": r"^p\s+\S+\s+\d+\s+(\d+)"},
    (ProblemKind.GCP, "natural_language"): {
        "feat_nodes": r"The graph has (\d+) nodes", "feat_edges": r"nodes and (\d+) edges"},
    (ProblemKind.GCP, "code_like"): {
        "feat_nodes": r"int: n = (\d+);", "feat_edges": r"int: num_edges = (\d+);"},
    (ProblemKind.BPP, "standard"): {
        "feat_items": r"\A\s*(\d+)\s+\d+", "feat_capacity": r"\A\s*\d+\s+(\d+)"},
    (ProblemKind.BPP, "natural_language"): {
        "feat_items": r"There are (\d+) items", "feat_capacity": r"bin capacity is (\d+)"},
    (ProblemKind.BPP, "code_like"): {
        "feat_items": r"int: n = (\d+);", "feat_capacity": r"int: capacity = (\d+);"},
    (ProblemKind.JSSP, "standard"): {
        "feat_jobs": r"\A\s*(\d+)\s+\d+", "feat_machines": r"\A\s*\d+\s+(\d+)"},
    (ProblemKind.JSSP, "natural_language"): {
        "feat_jobs": r"There are (\d+) jobs", "feat_machines": r"jobs and (\d+) machines"},
    (ProblemKind.JSSP, "code_like"): {
        "feat_jobs": r"int: n_jobs = (\d+);", "feat_machines": r"int: n_machines = (\d+);"},
    (ProblemKind.KP, "standard"): {"feat_capacity": r"\A\s*\d+\s+(\d+)"},
    (ProblemKind.KP, "natural_language"): {"feat_capacity": r"knapsack capacity is (\d+)"},
    (ProblemKind.KP, "code_like"): {"feat_capacity": r"int: capacity = (\d+);"},
}


def _detect_representation(text: str) -> str:
    if text.startswith("The instance is named"):
        return "natural_language"
    if text.startswith("int:"):
        return "code_like"
    return "standard"


def _seed_from(*parts) -> int:
    h = hashlib.sha256("\0".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "little")


class MockProvider:
    """Offline provider with known answers; see module docstring.

    ``truth`` maps ``(problem, instance_name)`` to a FeatureVector and
    ``scales`` maps problem to per-feature ``(mean, std)`` arrays; both are
    filled by :meth:`from_instances`.
    """

    identity = "mock"

    def __init__(self, truth=None, scales=None, dim=32, seed=0, max_tokens=32, plant=True,
                 error_scale=0.05, always_null=False):
        self.truth = truth or {}
        self.scales = scales or {}
        self.dim = dim
        self.seed = seed
        self.max_tokens = max_tokens
        self.plant = plant
        self.error_scale = error_scale
        self.always_null = always_null
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_instances(cls, instances, **kwargs):
        truth, by_kind = {}, {}
        for inst in instances:
            fv = extract_features(inst)
            truth[(inst.kind, inst.name)] = fv
            by_kind.setdefault(inst.kind, []).append(fv)
        scales = {}
        for kind, fvs in by_kind.items():
            names = [s.name for s in feature_catalog(kind)]
            mat = np.array([[np.nan if fv.values[n] is None else fv.values[n] for n in names]
                            for fv in fvs], dtype=np.float64)
            with np.errstate(all="ignore"):
                mean = np.nan_to_num(np.nanmean(mat, axis=0))
                std = np.nan_to_num(np.nanstd(mat, axis=0))
            std[std == 0] = 1.0
            scales[kind] = (mean, std)
        return cls(truth=truth, scales=scales, **kwargs)

    def _count(self):
        with self._lock:
            self.calls += 1

    # -- generation ---------------------------------------------------------
    def complete(self, prompt: str, schema: str) -> str:
        self._count()
        if self.always_null:
            return json.dumps({"value": None})
        kind = _BY_FULL_NAME[_PROBLEM_RE.search(prompt).group(1)]
        feature = _FEATURE_RE.search(prompt).group(1)
        text = _INSTANCE_RE.search(prompt).group(1) + "\n"
        spec = {s.name: s for s in feature_catalog(kind)}[feature]
        rep = _detect_representation(text)
        if spec.complexity is Complexity.direct:
            m = re.search(_DIRECT[(kind, rep)][feature], text, re.M)
            return json.dumps({"value": int(m.group(1)) if m else None})
        if rep != "standard":
            return json.dumps({"value": None})
        try:
            truth = extract_features(parse_instance(kind, text)).values[feature]
        except InstanceFormatError:
            return json.dumps({"value": None})
        if truth is None:
            return json.dumps({"value": None})
        rng = np.random.default_rng(_seed_from(self.seed, prompt))
        guess = truth * (1.0 + rng.uniform(-self.error_scale, self.error_scale))
        if spec.value_type is ValueType.integer:
            return json.dumps({"value": int(round(guess))})
        return json.dumps({"value": float(guess)})

    # -- hidden states ------------------------------------------------------
    def hidden_states(self, rendering) -> np.ndarray:
        self._count()
        kind = ProblemKind(rendering.problem)
        rep = getattr(rendering.representation, "value", rendering.representation)
        t = int(min(max(rendering.token_hint or 1, 1), self.max_tokens))
        rng = np.random.default_rng(_seed_from(self.seed, kind.value, rep,
                                               rendering.instance_name))
        data = rng.standard_normal((t, self.dim))
        if self.plant:
            fv = self.truth[(kind, rendering.instance_name)]
            names = [s.name for s in feature_catalog(kind)]
            if len(names) > self.dim:
                raise ValueError(f"dim {self.dim} cannot hold {len(names)} planted features")
            mean, std = self.scales[kind]
            raw = np.array([np.nan if fv.values[n] is None else fv.values[n] for n in names])
            z = np.nan_to_num((raw - mean) / std)
            data[:, :len(names)] = z
        return data.astype("<f4")
