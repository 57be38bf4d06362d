"""The three experiments: direct querying, feature probing, algorithm selection.

Each ``run_*`` function takes a :class:`~coprobe.config.RunConfig` and
returns a :class:`MetricsReport`. Failures are recorded per cell; a run
always completes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .eval import mae, match_rates, set_aware_accuracy, stratified_kfold, winner_sets
from .features import (Complexity, extract_features, feature_catalog, features_to_matrix,
                       read_feature_csv)
from .instances import ProblemKind, load_instance, load_performance_table
from .llmio import (MockProvider, QueryJournal, QueryLimits, build_feature_prompt,
                    build_value_schema, fetch_activations, provider_from_env, query_batch)
from .pooling import pool_array
from .probes import make_classifier, make_regressor
from .render import render

log = logging.getLogger(__name__)

TIERS = tuple(c.value for c in Complexity)
RATE_METRICS = ("equals", "within_1pct", "within_5pct")
RECORD_FIELDS = ("experiment", "problem", "source", "representation", "pooling", "model",
                 "tier", "metric", "value")


@dataclass
class MetricsReport:
    experiment: str
    records: list = field(default_factory=list)  # one per configured cell
    details: list = field(default_factory=list)  # per feature / per fold
    comparison: list = field(default_factory=list)  # direct-query rows for probing tables
    failed_cells: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, value, **keys):
        rec = {f: "" for f in RECORD_FIELDS}
        rec.update(experiment=self.experiment, **keys)
        rec["value"] = _clean(value)
        self.records.append(rec)

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "records": self.records,
                "details": self.details, "comparison": self.comparison,
                "failed_cells": self.failed_cells, "meta": self.meta}

    @classmethod
    def from_dict(cls, d) -> "MetricsReport":
        return cls(d["experiment"], d["records"], d.get("details", []),
                   d.get("comparison", []), d.get("failed_cells", []), d.get("meta", {}))

    @property
    def ok(self) -> bool:
        return not self.failed_cells


def _clean(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _mean_or_none(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


# -- data loading --------------------------------------------------------------

@dataclass
class Dataset:
    kind: ProblemKind
    instances: list
    truths: list  # FeatureVector per instance

    @property
    def names(self):
        return [i.name for i in self.instances]


def load_dataset(cfg: RunConfig, kind: ProblemKind) -> Dataset:
    pc = cfg.problems[kind]
    paths = sorted(p for p in pc.instances.glob(pc.pattern) if p.is_file())
    if not paths:
        raise FileNotFoundError(f"no instance files under {pc.instances}")
    instances = sorted((load_instance(kind, p) for p in paths), key=lambda i: i.name)
    names = [i.name for i in instances]
    if len(set(names)) != len(names):
        raise ValueError(f"{kind.value}: duplicate instance names in {pc.instances}")
    return Dataset(kind, instances, [extract_features(i) for i in instances])


def load_all(cfg: RunConfig) -> dict:
    return {kind: load_dataset(cfg, kind) for kind in cfg.problems}


def make_provider(cfg: RunConfig, datasets: dict):
    p = cfg.provider
    if p.kind == "mock":
        instances = [i for ds in datasets.values() for i in ds.instances]
        return MockProvider.from_instances(
            instances, dim=p.mock_dim, seed=cfg.seed, max_tokens=p.mock_max_tokens,
            plant=p.mock_plant, error_scale=p.mock_error_scale, always_null=p.mock_always_null)
    if p.kind == "http":
        return provider_from_env(p.endpoint, p.model, p.api_key_env, p.timeout)
    return None


def _limits(cfg: RunConfig) -> QueryLimits:
    p = cfg.provider
    return QueryLimits(retries=p.retries, timeout=p.timeout, backoff_base=p.backoff_base,
                       concurrency=p.concurrency)


# -- direct querying -------------------------------------------------------------

def run_direct_querying(cfg: RunConfig, provider=None, datasets=None) -> MetricsReport:
    datasets = datasets or load_all(cfg)
    provider = provider if provider is not None else make_provider(cfg, datasets)
    if provider is None:
        raise ValueError("direct querying needs a generation provider (mock or http)")
    report = MetricsReport("direct")
    journal = QueryJournal(cfg.journal_path)

    jobs = []  # (kind, rep, spec, truths, prompts)
    prompts, schemas = [], []
    for kind, ds in datasets.items():
        for rep in cfg.representations:
            renderings = [render(inst, rep) for inst in ds.instances]
            for spec in feature_catalog(kind):
                start = len(prompts)
                schema = build_value_schema(spec.value_type)
                for r in renderings:
                    prompts.append(build_feature_prompt(kind, spec, r))
                    schemas.append(schema)
                jobs.append((kind, rep, spec, [t.values[spec.name] for t in ds.truths],
                             slice(start, len(prompts))))
    results = query_batch(provider, prompts, schemas, _limits(cfg), journal)

    per_cell = {}
    counts = {"value": 0, "null": 0, "parse_failure": 0, "transport_failure": 0}
    for kind, rep, spec, truth, sl in jobs:
        res = results[sl]
        for r in res:
            counts[r.status] += 1
        preds = [r.value for r in res]
        defined = [(p, t) for p, t in zip(preds, truth) if p is not None and t is not None]
        rates = match_rates(preds, truth, spec.value_type)
        row = {
            "problem": kind.value, "representation": rep, "feature": spec.name,
            "tier": spec.complexity.value,
            "mae": mae(*zip(*defined)) if defined else None,
            **rates,
            "n": len(res),
            "parse_failures": sum(r.status == "parse_failure" for r in res),
            "transport_failures": sum(r.status == "transport_failure" for r in res),
        }
        report.details.append(row)
        per_cell.setdefault((kind.value, rep, spec.complexity.value), []).append(row)
        if res and all(r.status == "transport_failure" for r in res):
            report.failed_cells.append(f"direct/{kind.value}/{rep}/{spec.name}")

    for kind in datasets:
        for rep in cfg.representations:
            for tier in TIERS:
                rows = per_cell.get((kind.value, rep, tier), [])
                for metric in ("mae", *RATE_METRICS, "null_rate"):
                    report.add(_mean_or_none(r[metric] for r in rows), problem=kind.value,
                               representation=rep, model="direct_querying", tier=tier,
                               metric=metric)
    report.meta = {"queries": len(prompts), "status_counts": counts}
    return report


# -- activations -------------------------------------------------------------------

class PooledCache:
    """Pooled activation matrices per (problem, representation), loaded lazily."""

    def __init__(self, cfg: RunConfig, provider):
        self.cfg = cfg
        self.provider = provider
        self._store = {}
        self.dim = cfg.provider.dim

    def get(self, ds: Dataset, rep: str) -> dict:
        key = (ds.kind, rep)
        if key not in self._store:
            pooled = {s: [] for s in self.cfg.pooling}
            for inst in ds.instances:
                m = fetch_activations(self.provider, render(inst, rep),
                                      cache_dir=self.cfg.activation_root,
                                      expected_dim=self.dim, limits=_limits(self.cfg))
                self.dim = m.dim
                for s in self.cfg.pooling:
                    pooled[s].append(pool_array(m.data, s))
            self._store[key] = {s: np.vstack(v) for s, v in pooled.items()}
        return self._store[key]


def _holdout(n, ratio, seed):
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(ratio * n + 0.5))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


# -- feature probing -----------------------------------------------------------------

def run_feature_probing(cfg: RunConfig, provider=None, datasets=None,
                        direct_report: MetricsReport | None = None,
                        pooled: PooledCache | None = None) -> MetricsReport:
    datasets = datasets or load_all(cfg)
    if pooled is None:
        if provider is None and cfg.provider.kind != "offline":
            provider = make_provider(cfg, datasets)
        pooled = PooledCache(cfg, provider)
    report = MetricsReport("probing")
    cells = {}
    for kind, ds in datasets.items():
        specs = feature_catalog(kind)
        Y = features_to_matrix(ds.truths, kind)
        for rep in cfg.representations:
            try:
                mats = pooled.get(ds, rep)
            except Exception as exc:
                log.error("activations for %s/%s unavailable: %s", kind.value, rep, exc)
                for pool_name in cfg.pooling:
                    for model in cfg.regressors:
                        report.failed_cells.append(f"probing/{kind.value}/{rep}/{pool_name}/{model}")
                continue
            for r in range(cfg.replicates):
                tr, te = _holdout(len(ds.instances), cfg.split_ratio, cfg.seed + r)
                for pool_name in cfg.pooling:
                    X = mats[pool_name]
                    for model in cfg.regressors:
                        for j, spec in enumerate(specs):
                            row = _probe_one(cfg, model, X, Y[:, j], tr, te, spec)
                            key = (kind.value, rep, pool_name, model, spec.complexity.value)
                            if row is None:
                                report.failed_cells.append(
                                    f"probing/{kind.value}/{rep}/{pool_name}/{model}/{spec.name}")
                                continue
                            row.update(problem=kind.value, representation=rep,
                                       pooling=pool_name, model=model, feature=spec.name,
                                       tier=spec.complexity.value, replicate=r)
                            report.details.append(row)
                            cells.setdefault(key, []).append(row)
    for kind in datasets:
        for rep in cfg.representations:
            for pool_name in cfg.pooling:
                for model in cfg.regressors:
                    for tier in TIERS:
                        rows = cells.get((kind.value, rep, pool_name, model, tier), [])
                        for metric in ("mae", *RATE_METRICS):
                            report.add(_mean_or_none(x[metric] for x in rows),
                                       problem=kind.value, representation=rep,
                                       pooling=pool_name, model=model, tier=tier, metric=metric)
    if direct_report is not None:
        report.comparison = [dict(r) for r in direct_report.records
                             if r["metric"] == "mae" and r["problem"] in
                             {k.value for k in datasets}
                             and r["representation"] in cfg.representations]
    report.meta = {"dim": pooled.dim, "instances": {k.value: len(d.instances)
                                                     for k, d in datasets.items()}}
    return report


def _probe_one(cfg, model, X, y, tr, te, spec):
    tr = tr[~np.isnan(y[tr])]
    te = te[~np.isnan(y[te])]
    if len(tr) < 2 or len(te) < 1:
        return None
    try:
        est = make_regressor(model, cfg.train).fit(X[tr], y[tr])
        pred = est.predict(X[te])
    except Exception as exc:
        log.error("probe %s on %s failed: %s", model, spec.name, exc)
        return None
    truth = y[te].tolist()
    return {"mae": mae(pred.tolist(), truth), **match_rates(pred.tolist(), truth, spec.value_type),
            "n_train": int(len(tr)), "n_test": int(len(te))}


# -- algorithm selection ---------------------------------------------------------------

def _impute(Xtr, Xte):
    """Fill NaN with training-column means (0 where a column is all NaN)."""
    with np.errstate(all="ignore"):
        means = np.nanmean(Xtr, axis=0) if Xtr.size else np.zeros(Xtr.shape[1])
    means = np.where(np.isnan(means), 0.0, means)
    return (np.where(np.isnan(Xtr), means, Xtr), np.where(np.isnan(Xte), means, Xte))


def _selection_inputs(cfg, kind, ds, names, pooled):
    """Yield (source, representation, pooling, matrix aligned to ``names`` or error)."""
    pos = {n: i for i, n in enumerate(ds.names)}
    rows = [pos[n] for n in names]
    for source in cfg.selection_sources:
        if source == "llm":
            for rep in cfg.representations:
                try:
                    mats = pooled.get(ds, rep)
                except Exception as exc:
                    for p in cfg.pooling:
                        yield source, rep, p, exc
                    continue
                for p in cfg.pooling:
                    yield source, rep, p, mats[p][rows]
        elif source == "handcrafted":
            yield source, "", "", features_to_matrix(ds.truths, kind)[rows]
        else:
            path = cfg.problems[kind].isa_features
            if path is None or not path.exists():
                yield source, "", "", FileNotFoundError(f"no ISA feature file for {kind.value}")
                continue
            isa_names, _, M = read_feature_csv(path.read_text(encoding="utf-8"))
            ipos = {n: i for i, n in enumerate(isa_names)}
            missing = [n for n in names if n not in ipos]
            if missing:
                yield source, "", "", KeyError(f"ISA features missing for {missing[:3]}")
                continue
            yield source, "", "", M[[ipos[n] for n in names]]


def run_algorithm_selection(cfg: RunConfig, provider=None, datasets=None,
                            pooled: PooledCache | None = None) -> MetricsReport:
    datasets = datasets or load_all(cfg)
    if pooled is None and "llm" in cfg.selection_sources:
        if provider is None and cfg.provider.kind != "offline":
            provider = make_provider(cfg, datasets)
        pooled = PooledCache(cfg, provider)
    report = MetricsReport("selection")
    fold_json = {}
    for kind, ds in datasets.items():
        pc = cfg.problems[kind]
        if pc.performance is None:
            report.failed_cells.append(f"selection/{kind.value}/no-performance-table")
            continue
        table = load_performance_table(pc.performance.read_text(encoding="utf-8"), kind,
                                       pc.objective_sense)
        wsets = winner_sets(table, cfg.tie_tolerance)
        names = [n for n in ds.names if n in wsets]
        if len(names) < cfg.k:
            report.failed_cells.append(f"selection/{kind.value}/too-few-instances")
            continue
        sets = {n: wsets[n] for n in names}
        replicates = [stratified_kfold(sets, cfg.k, cfg.seed + r) for r in range(cfg.replicates)]
        fold_json[kind.value] = [[f.to_json() for f in folds] for folds in replicates]

        for source, rep, pool_name, X in _selection_inputs(cfg, kind, ds, names, pooled):
            for clf in cfg.classifiers:
                cell = dict(problem=kind.value, source=source, representation=rep,
                            pooling=pool_name, model=clf)
                if isinstance(X, Exception):
                    report.failed_cells.append("selection/" + "/".join(
                        v for v in cell.values() if v))
                    report.add(None, metric="accuracy", **cell)
                    continue
                accs = []
                for r, folds in enumerate(replicates):
                    for fold in folds:
                        tr, te = fold.train_index, fold.test_index
                        Xtr, Xte = _impute(X[tr], X[te])
                        labels = np.array(fold.labels)[tr]
                        try:
                            est = make_classifier(clf, cfg.train).fit(Xtr, labels)
                            pred = est.predict(Xte).tolist()
                            acc = set_aware_accuracy(pred, [sets[names[i]] for i in te])
                        except Exception as exc:
                            log.error("classifier %s failed: %s", clf, exc)
                            acc = None
                        accs.append(acc)
                        report.details.append({**cell, "replicate": r, "fold": fold.fold,
                                               "n_train": int(len(tr)), "n_test": int(len(te)),
                                               "accuracy": acc})
                if all(a is None for a in accs):
                    report.failed_cells.append("selection/" + "/".join(
                        v for v in cell.values() if v))
                report.add(_mean_or_none(accs), metric="accuracy", **cell)
    report.meta = {"folds": fold_json, "k": cfg.k, "replicates": cfg.replicates}
    return report
