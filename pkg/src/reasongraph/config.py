"""Run configuration: YAML/JSON file -> validated ``RunConfig``."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .clustering import ScoringWeights
from .edges import EstimatorConfig
from .errors import ConfigError

BACKENDS = ("live", "fixture", "mock")
EMBEDDING_PROVIDERS = ("hashing", "openai")


@dataclass(frozen=True)
class LLMSettings:
    backend: str = "mock"
    endpoint: str | None = None
    model: str | None = None
    api_key_env: str | None = None
    max_concurrency: int = 4
    temperature_range: tuple[float, float] = (0.3, 0.7)
    fixture_dir: str | None = None
    record_dir: str | None = None
    max_retries: int = 3
    backoff_base: float = 1.0
    rate_per_second: float | None = None
    max_prompt_chars: int | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"llm.backend must be one of {BACKENDS}, got {self.backend!r}")
        lo, hi = self.temperature_range
        if not 0 <= lo <= hi <= 2:
            raise ConfigError("llm.temperature_range must satisfy 0 <= lo <= hi <= 2")
        object.__setattr__(self, "temperature_range", (float(lo), float(hi)))
        if self.max_concurrency < 1 or self.max_retries < 0 or self.backoff_base < 0:
            raise ConfigError("llm.max_concurrency >= 1, max_retries >= 0, backoff_base >= 0 required")
        if self.backend == "live" and not (self.endpoint and self.model):
            raise ConfigError("live backend needs llm.endpoint and llm.model")


@dataclass(frozen=True)
class EmbeddingSettings:
    provider: str = "hashing"
    dim: int = 256
    cache_dir: str | None = None
    api_key_env: str | None = None
    endpoint: str | None = None
    model: str | None = None

    def __post_init__(self):
        if self.provider not in EMBEDDING_PROVIDERS:
            raise ConfigError(f"embedding.provider must be one of {EMBEDDING_PROVIDERS}")
        if self.dim < 2:
            raise ConfigError("embedding.dim must be at least 2")
        if self.provider == "openai" and not (self.endpoint and self.model):
            raise ConfigError("openai embedding provider needs embedding.endpoint and embedding.model")


@dataclass(frozen=True)
class ClusterSettings:
    B: int = 5
    weights: ScoringWeights = field(default_factory=ScoringWeights)
    resample_cap: int = 3

    def __post_init__(self):
        if self.B < 1:
            raise ConfigError("cluster.B must be at least 1")
        if self.resample_cap < 0:
            raise ConfigError("cluster.resample_cap must be nonnegative")


@dataclass(frozen=True)
class RunConfig:
    llm: LLMSettings = field(default_factory=LLMSettings)
    embedding: EmbeddingSettings = field(default_factory=EmbeddingSettings)
    cluster: ClusterSettings = field(default_factory=ClusterSettings)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    seed: int = 0
    parallel: int = 1
    delimiter: str = "\n\n"
    inputs: tuple[str, ...] = ()
    out: str | None = None

    def __post_init__(self):
        if self.parallel < 1:
            raise ConfigError("parallel must be at least 1")
        if not self.delimiter:
            raise ConfigError("delimiter must be nonempty")

    def with_overrides(self, **kw) -> "RunConfig":
        llm_kw = {k[4:]: v for k, v in kw.items() if k.startswith("llm_") and v is not None}
        top = {k: v for k, v in kw.items() if not k.startswith("llm_") and v is not None}
        cfg = self
        if llm_kw:
            cfg = replace(cfg, llm=replace(cfg.llm, **llm_kw))
        return replace(cfg, **top) if top else cfg

    def fingerprint(self) -> str:
        """Hash of every setting that can change outputs.

        Paths and pure scheduling knobs (parallelism, rate limits, backoff)
        are excluded.
        """
        d = asdict(self)
        for key in ("fixture_dir", "record_dir", "max_concurrency", "rate_per_second", "backoff_base"):
            d["llm"].pop(key)
        d["embedding"].pop("cache_dir")
        for key in ("inputs", "out", "parallel"):
            d.pop(key)
        canon = json.dumps(d, sort_keys=True, default=list)
        return hashlib.sha256(canon.encode()).hexdigest()


def _section(cls, data, name: str, base_dir: Path | None, path_keys=()):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {name}: {', '.join(sorted(unknown))}")
    data = dict(data)
    for key in path_keys:
        if data.get(key) and base_dir is not None:
            data[key] = str((base_dir / data[key]).resolve())
    if "temperature_range" in data:
        data["temperature_range"] = tuple(data["temperature_range"])
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def config_from_dict(data: dict, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")

    cluster_data = dict(data.get("cluster") or {})
    if "weights" in cluster_data:
        w = cluster_data["weights"]
        try:
            if isinstance(w, dict):
                cluster_data["weights"] = ScoringWeights(**w)
            else:
                cluster_data["weights"] = ScoringWeights(*w)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"cluster.weights: {exc}") from None

    kw = {
        "llm": _section(LLMSettings, data.get("llm"), "llm", base_dir, ("fixture_dir", "record_dir")),
        "embedding": _section(EmbeddingSettings, data.get("embedding"), "embedding", base_dir, ("cache_dir",)),
        "cluster": _section(ClusterSettings, cluster_data, "cluster", base_dir),
        "estimator": _section(EstimatorConfig, data.get("estimator"), "estimator", base_dir),
    }
    for key in ("seed", "parallel", "delimiter", "out"):
        if key in data:
            kw[key] = data[key]
    if "inputs" in data:
        inputs = data["inputs"]
        if isinstance(inputs, str):
            inputs = [inputs]
        kw["inputs"] = tuple(str((base_dir / p).resolve()) if base_dir else p for p in inputs)
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return config_from_dict(data or {}, base_dir=path.parent)
