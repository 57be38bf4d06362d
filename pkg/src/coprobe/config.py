"""Run configuration: one YAML/JSON file plus environment overrides for secrets.

The keys are listed in the README.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .instances import ProblemKind
from .pooling import PoolingStrategy
from .probes import CLASSIFIER_KINDS, REGRESSOR_KINDS, TrainConfig
from .render import Representation

SELECTION_SOURCES = ("llm", "handcrafted", "isa")


class ConfigError(ValueError):
    pass


@dataclass
class ProblemConfig:
    instances: Path
    performance: Path | None = None
    objective_sense: str = "minimize"
    isa_features: Path | None = None
    pattern: str = "*"


@dataclass
class ProviderConfig:
    kind: str = "mock"  # mock | http | offline
    endpoint: str | None = None
    model: str = "default"
    api_key_env: str = "COPROBE_API_KEY"
    dim: int | None = None
    concurrency: int = 8
    retries: int = 3
    timeout: float = 60.0
    backoff_base: float = 0.5
    # mock-only knobs
    mock_dim: int = 32
    mock_max_tokens: int = 32
    mock_plant: bool = True
    mock_error_scale: float = 0.05
    mock_always_null: bool = False


@dataclass
class RunConfig:
    problems: dict  # ProblemKind -> ProblemConfig
    output_dir: Path = Path("out")
    representations: tuple = tuple(Representation)
    pooling: tuple = tuple(PoolingStrategy)
    regressors: tuple = REGRESSOR_KINDS
    classifiers: tuple = CLASSIFIER_KINDS
    selection_sources: tuple = SELECTION_SOURCES
    seed: int = 0
    replicates: int = 1
    split_ratio: float = 0.7
    k: int = 5
    tie_tolerance: float = 1e-9
    activations_dir: Path | None = None
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    plots: bool = True

    @property
    def journal_path(self) -> Path:
        return self.output_dir / "queries.jsonl"

    @property
    def activation_root(self) -> Path:
        return self.activations_dir or self.output_dir / "activations"


def _choices(values, allowed, what):
    values = tuple(values)
    bad = [v for v in values if v not in allowed]
    if bad:
        raise ConfigError(f"unknown {what}: {bad}; allowed: {list(allowed)}")
    if not values:
        raise ConfigError(f"at least one {what} is required")
    return values


def config_from_dict(raw: dict, base_dir=".") -> RunConfig:
    """Validate a parsed config mapping; relative paths resolve against ``base_dir``."""
    base = Path(base_dir)

    def path(v):
        if v is None:
            return None
        p = Path(os.path.expandvars(str(v)))
        return p if p.is_absolute() else base / p

    raw = dict(raw or {})
    if not raw.get("problems"):
        raise ConfigError("config must list at least one problem under 'problems'")
    problems = {}
    for key, pc in raw.pop("problems").items():
        try:
            kind = ProblemKind(key)
        except ValueError:
            raise ConfigError(f"unknown problem {key!r}") from None
        pc = dict(pc)
        if "instances" not in pc:
            raise ConfigError(f"problem {key}: 'instances' directory is required")
        sense = pc.get("objective_sense", "minimize")
        if sense not in ("minimize", "maximize"):
            raise ConfigError(f"problem {key}: objective_sense must be minimize or maximize")
        problems[kind] = ProblemConfig(path(pc["instances"]), path(pc.get("performance")),
                                       sense, path(pc.get("isa_features")),
                                       pc.get("pattern", "*"))
    split = dict(raw.pop("split", {}) or {})
    prov = dict(raw.pop("provider", {}) or {})
    mock = prov.pop("mock", {}) or {}
    prov.update({f"mock_{k}": v for k, v in mock.items()})
    try:
        provider = ProviderConfig(**prov)
        train = TrainConfig(**(raw.pop("train", {}) or {}))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(f"train: {exc}") from None
    if provider.kind not in ("mock", "http", "offline"):
        raise ConfigError(f"provider.kind must be mock, http or offline, not {provider.kind!r}")
    if provider.kind == "http" and not (provider.endpoint or os.environ.get("COPROBE_ENDPOINT")):
        raise ConfigError("provider.kind=http needs provider.endpoint or COPROBE_ENDPOINT")
    if provider.concurrency < 1 or provider.retries < 0:
        raise ConfigError("provider.concurrency must be >= 1 and retries >= 0")

    cfg = RunConfig(
        problems=problems,
        output_dir=path(raw.pop("output_dir", "out")),
        representations=_choices(raw.pop("representations", [r.value for r in Representation]),
                                 [r.value for r in Representation], "representation"),
        pooling=_choices(raw.pop("pooling", [p.value for p in PoolingStrategy]),
                         [p.value for p in PoolingStrategy], "pooling strategy"),
        regressors=_choices(raw.pop("regressors", REGRESSOR_KINDS), REGRESSOR_KINDS,
                            "regressor"),
        classifiers=_choices(raw.pop("classifiers", CLASSIFIER_KINDS), CLASSIFIER_KINDS,
                             "classifier"),
        selection_sources=_choices(raw.pop("selection_sources", SELECTION_SOURCES),
                                   SELECTION_SOURCES, "selection source"),
        seed=int(raw.pop("seed", 0)),
        replicates=int(raw.pop("replicates", 1)),
        split_ratio=float(split.pop("ratio", 0.7)),
        k=int(split.pop("k", 5)),
        tie_tolerance=float(split.pop("tie_tolerance", 1e-9)),
        activations_dir=path(raw.pop("activations_dir", None)),
        provider=provider,
        train=train,
        plots=bool(raw.pop("plots", True)),
    )
    if split:
        raise ConfigError(f"unknown split keys: {sorted(split)}")
    if raw:
        raise ConfigError(f"unknown config keys: {sorted(raw)}")
    if not 0 < cfg.split_ratio < 1:
        raise ConfigError("split.ratio must lie in (0, 1)")
    if cfg.k < 2:
        raise ConfigError("split.k must be at least 2")
    if cfg.replicates < 1:
        raise ConfigError("replicates must be at least 1")
    if cfg.tie_tolerance < 0:
        raise ConfigError("split.tie_tolerance must be non-negative")
    return cfg


def load_config(path, overrides: dict | None = None) -> RunConfig:
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    env_endpoint = os.environ.get("COPROBE_ENDPOINT")
    if env_endpoint:
        raw.setdefault("provider", {})
        raw["provider"] = dict(raw["provider"] or {}, endpoint=env_endpoint)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "endpoint":
            raw["provider"] = dict(raw.get("provider") or {}, endpoint=value, kind="http")
        else:
            raw[key] = value
    return config_from_dict(raw, base_dir=path.parent)
