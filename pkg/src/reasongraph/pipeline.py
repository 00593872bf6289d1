"""End-to-end wiring: trace -> units -> steps -> reasoning graph -> files."""

from __future__ import annotations

import hashlib
import json
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .analysis import MetricRow
from .clustering import EnsembleResult, run_ensemble
from .config import EmbeddingSettings, LLMSettings, RunConfig
from .edges import ReasoningGraph, estimate_edges
from .embedding import CachedEmbedder, HashingEmbedder, MemoEmbedder, OpenAIEmbeddingProvider, embedder_id
from .errors import ConfigError, ReasonGraphError
from .graph import metrics
from .graphio import dumps_json, graph_to_dict, to_dot
from .llm.backends import FixtureBackend, LiveBackend, RecordingBackend
from .llm.gateway import Gateway
from .llm.mock import heuristic_backend
from .traces import ReasoningTrace, ReasoningUnit, segment_units

log = logging.getLogger(__name__)


def make_gateway(settings: LLMSettings, sleep=time.sleep) -> Gateway:
    if settings.backend == "fixture":
        if not settings.fixture_dir:
            raise ConfigError("fixture backend needs llm.fixture_dir")
        backend = FixtureBackend(settings.fixture_dir)
    elif settings.backend == "live":
        backend = LiveBackend(settings.endpoint, settings.model, settings.api_key_env)
    else:
        backend = heuristic_backend()
    if settings.record_dir:
        backend = RecordingBackend(backend, settings.record_dir)
    return Gateway(
        backend,
        max_retries=settings.max_retries,
        backoff_base=settings.backoff_base,
        max_concurrency=settings.max_concurrency,
        rate_per_second=settings.rate_per_second,
        max_prompt_chars=settings.max_prompt_chars,
        sleep=sleep,
    )


def make_embedder(settings: EmbeddingSettings):
    if settings.provider == "openai":
        inner = OpenAIEmbeddingProvider(settings.endpoint, settings.model, settings.api_key_env)
    else:
        inner = HashingEmbedder(settings.dim)
    if settings.cache_dir:
        inner = CachedEmbedder(inner, settings.cache_dir)
    return MemoEmbedder(inner)


def trace_seed(run_seed: int, trace_id: str) -> int:
    digest = hashlib.sha256(f"{run_seed}:{trace_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def safe_name(trace_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", trace_id) or "_"


@dataclass
class TraceResult:
    trace: ReasoningTrace
    units: list[ReasoningUnit]
    ensemble: EnsembleResult
    graph: ReasoningGraph


def build_trace_graph(trace: ReasoningTrace, gateway: Gateway, embedder, config: RunConfig) -> TraceResult:
    units = segment_units(trace, config.delimiter)
    seed = trace_seed(config.seed, trace.trace_id)
    ensemble = run_ensemble(
        units,
        config.cluster.B,
        gateway,
        embedder,
        config.cluster.weights,
        seed=seed,
        resample_cap=config.cluster.resample_cap,
        temperature_range=config.llm.temperature_range,
        delimiter=config.delimiter,
    )
    raw = estimate_edges(
        ensemble.selected.steps,
        gateway,
        config.estimator,
        seed=seed,
        temperature_range=config.llm.temperature_range,
        trace_id=trace.trace_id,
    )
    chosen = ensemble.selected
    provenance = {
        "trace_id": trace.trace_id,
        "task_id": trace.task_id,
        "model_id": trace.model_id,
        "prompt_regime": trace.prompt_regime.value,
        "shot_count": trace.shot_count,
        "correct": trace.correct,
        "token_count": trace.token_count,
        "unit_count": len(units),
        "clustering": {
            "composite": chosen.scores.composite,
            "phi_ic": chosen.scores.phi_ic,
            "phi_sep": chosen.scores.phi_sep,
            "phi_len": chosen.scores.phi_len,
            "K": chosen.k,
            "B": ensemble.slots_requested,
            "slots_filled": ensemble.slots_filled,
            "weights": ensemble.weights.as_list(),
            "mu_ref": ensemble.mu_ref,
            "embedder": ensemble.embedder,
        },
        **{k: v for k, v in raw.provenance.items() if k != "trace_id"},
    }
    graph = ReasoningGraph(raw.steps, raw.adjacency, raw.weights, raw.estimates, provenance)
    return TraceResult(trace, units, ensemble, graph)


def metric_row(graph: ReasoningGraph) -> MetricRow:
    m = metrics(graph)
    prov = graph.provenance
    return MetricRow(
        trace_id=graph.trace_id,
        model_id=prov.get("model_id", ""),
        prompt_regime=prov.get("prompt_regime", ""),
        shot_count=int(prov.get("shot_count", 0)),
        correct=prov.get("correct"),
        K=m.node_count,
        E=m.edge_count,
        rho_E=m.exploration_density,
        gamma_B=m.branching_ratio,
        gamma_C=m.convergence_ratio,
        linearity=m.linearity,
        support_edges=m.support_edge_count,
        contradict_edges=m.contradict_edge_count,
        tokens=prov.get("token_count"),
    )


def fixture_digest(root: str | Path | None) -> str | None:
    if not root or not Path(root).is_dir():
        return None
    h = hashlib.sha256()
    for path in sorted(Path(root).rglob("*.txt")):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


@dataclass
class BuildSummary:
    succeeded: list[str] = field(default_factory=list)
    failed: list[dict] = field(default_factory=list)
    graph_paths: list[Path] = field(default_factory=list)

    @property
    def all_failed(self) -> bool:
        return not self.succeeded and bool(self.failed)


def run_build(
    traces: Sequence[ReasoningTrace],
    config: RunConfig,
    out_dir: str | Path,
    gateway: Gateway | None = None,
    embedder=None,
) -> BuildSummary:
    """Build graphs for every trace; failures are quarantined to errors.jsonl."""
    out = Path(out_dir)
    (out / "graphs").mkdir(parents=True, exist_ok=True)
    (out / "audit").mkdir(parents=True, exist_ok=True)
    gateway = gateway or make_gateway(config.llm)
    embedder = embedder or make_embedder(config.embedding)

    def work(trace: ReasoningTrace):
        try:
            return build_trace_graph(trace, gateway, embedder, config)
        except ReasonGraphError as exc:
            log.warning("trace %s failed: %s", trace.trace_id, exc)
            return {"trace_id": trace.trace_id, "error": type(exc).__name__, "message": str(exc)}

    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            results = list(pool.map(work, traces))
    else:
        results = [work(t) for t in traces]

    summary = BuildSummary()
    for res in results:
        if isinstance(res, dict):
            summary.failed.append(res)
            continue
        name = safe_name(res.trace.trace_id)
        gpath = out / "graphs" / f"{name}.json"
        gpath.write_text(dumps_json(graph_to_dict(res.graph)), encoding="utf-8")
        (out / "graphs" / f"{name}.dot").write_text(to_dot(res.graph), encoding="utf-8")
        audit = {"trace_id": res.trace.trace_id, **res.ensemble.audit()}
        (out / "audit" / f"{name}.json").write_text(dumps_json(audit), encoding="utf-8")
        summary.succeeded.append(res.trace.trace_id)
        summary.graph_paths.append(gpath)

    errors_path = out / "errors.jsonl"
    if summary.failed:
        errors_path.write_text("".join(json.dumps(f) + "\n" for f in summary.failed), encoding="utf-8")
    elif errors_path.exists():
        errors_path.unlink()

    manifest = {
        "tool": "reasongraph",
        "version": __version__,
        "config_fingerprint": config.fingerprint(),
        "seed": config.seed,
        "backend": gateway.backend_id,
        "embedder": embedder_id(embedder),
        "fixture_digest": fixture_digest(config.llm.fixture_dir) if config.llm.backend == "fixture" else None,
        "traces": len(traces),
        "succeeded": summary.succeeded,
        "failed": [f["trace_id"] for f in summary.failed],
        "telemetry": gateway.telemetry.snapshot(),
    }
    (out / "manifest.json").write_text(dumps_json(manifest), encoding="utf-8")
    return summary
