"""Adaptive estimation of support/contradict edges between reasoning steps.

Whole adjacency matrices are sampled from the LLM repeatedly. Per pair we
keep label counts, the signed confidence w = p(+1) - p(-1) and the pooled
standard error sqrt((p+(1-p+) + p-(1-p-)) / R). Sampling stops once every
pair's SE is at most epsilon (after a minimum of ``r_min`` samples) or R hits
``r_max``. A dual threshold on w then yields the ternary adjacency.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .clustering import DEFAULT_TEMPERATURE_RANGE, ReasoningStep, draw_sample_params
from .errors import KMismatch, MalformedOutput, SamplingExhausted
from .llm.backends import PromptRequest
from .llm.parsing import SemanticsResponse, parse_semantics
from .llm.prompts import render_semantics_prompt, step_pairs


@dataclass(frozen=True)
class EstimatorConfig:
    epsilon: float = 0.05
    r_max: int = 20
    r_min: int = 3
    tau_pos: float = 0.4
    tau_neg: float = 0.3
    batch_size: int = 1

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if not 0 < self.tau_pos <= 1 or not 0 < self.tau_neg <= 1:
            raise ValueError("tau_pos and tau_neg must lie in (0, 1]")
        if self.r_min < 1 or self.r_max < 1 or self.r_min > self.r_max:
            raise ValueError("need 1 <= r_min <= r_max")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EdgeEstimate:
    pair: tuple[int, int]
    counts: dict[int, int]
    samples_seen: int
    p_hat: dict[int, float]
    standard_error: float
    signed_confidence: float

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "counts": {str(lbl): self.counts[lbl] for lbl in (-1, 0, 1)},
            "se": self.standard_error,
            "w": self.signed_confidence,
        }


def pooled_se(p_pos: float, p_neg: float, r: int) -> float:
    return math.sqrt((p_pos * (1.0 - p_pos) + p_neg * (1.0 - p_neg)) / r)


class EdgeTable:
    """Running label counts for every pair i < j of a K-step graph."""

    def __init__(self, k: int):
        self.k = k
        self.pairs = step_pairs(k)
        self._index = {p: n for n, p in enumerate(self.pairs)}
        # columns: contradict, independent, support
        self.counts = np.zeros((len(self.pairs), 3), dtype=np.int64)
        self.samples_seen = 0

    def apply_sample(self, sample: SemanticsResponse | dict) -> "EdgeTable":
        labels = sample.labels if isinstance(sample, SemanticsResponse) else sample
        k = sample.k if isinstance(sample, SemanticsResponse) else None
        if (k is not None and k != self.k) or set(labels) != set(self.pairs):
            raise KMismatch(f"sample does not cover exactly the {len(self.pairs)} pairs of K={self.k}")
        for pair, label in labels.items():
            self.counts[self._index[pair], label + 1] += 1
        self.samples_seen += 1
        return self

    def estimate(self, pair: tuple[int, int]) -> EdgeEstimate:
        row = self.counts[self._index[pair]]
        r = self.samples_seen
        counts = {-1: int(row[0]), 0: int(row[1]), 1: int(row[2])}
        p_hat = {lbl: c / r for lbl, c in counts.items()}
        return EdgeEstimate(
            pair=pair,
            counts=counts,
            samples_seen=r,
            p_hat=p_hat,
            standard_error=pooled_se(p_hat[1], p_hat[-1], r),
            signed_confidence=p_hat[1] - p_hat[-1],
        )

    def estimates(self) -> list[EdgeEstimate]:
        if self.samples_seen == 0:
            return []
        return [self.estimate(p) for p in self.pairs]

    def max_se(self) -> float:
        return max((e.standard_error for e in self.estimates()), default=0.0)


def apply_sample(table: EdgeTable, sample) -> EdgeTable:
    return table.apply_sample(sample)


def should_stop(table: EdgeTable, config: EstimatorConfig) -> bool:
    r = table.samples_seen
    if r >= config.r_max:
        return True
    return r >= config.r_min and table.max_se() <= config.epsilon


def classify(w: float, config: EstimatorConfig) -> int:
    if w >= config.tau_pos:
        return 1
    if w <= -config.tau_neg:
        return -1
    return 0


def consensus(table: EdgeTable, config: EstimatorConfig) -> tuple[np.ndarray, np.ndarray]:
    k = table.k
    adjacency = np.zeros((k, k), dtype=np.int64)
    weights = np.zeros((k, k), dtype=float)
    for est in table.estimates():
        i, j = est.pair
        a = classify(est.signed_confidence, config)
        adjacency[i, j], adjacency[j, i] = a, -a
        # 0.0 - w avoids writing -0.0 for independent pairs
        weights[i, j], weights[j, i] = est.signed_confidence, 0.0 - est.signed_confidence
    return adjacency, weights


@dataclass(frozen=True)
class ReasoningGraph:
    steps: tuple[ReasoningStep, ...]
    adjacency: np.ndarray
    weights: np.ndarray
    estimates: tuple[EdgeEstimate, ...] = ()
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("adjacency", "weights"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return len(self.steps)

    @property
    def trace_id(self) -> str:
        return self.provenance.get("trace_id", "")


def _request_batch(gateway, prompt, params):
    def one(p):
        temperature, seed = p
        return gateway.complete(
            PromptRequest("semantics", prompt, temperature, seed, gateway.backend_id)
        )

    if len(params) > 1 and getattr(gateway, "max_concurrency", 1) > 1:
        with ThreadPoolExecutor(max_workers=min(len(params), gateway.max_concurrency)) as pool:
            return list(pool.map(one, params))
    return [one(p) for p in params]


def estimate_edges(
    steps: Sequence[ReasoningStep],
    gateway,
    config: EstimatorConfig | None = None,
    *,
    seed: int = 0,
    temperature_range=DEFAULT_TEMPERATURE_RANGE,
    trace_id: str = "",
) -> ReasoningGraph:
    """Sample adjacency matrices until the stopping rule fires, then threshold.

    Malformed samples are rejected and do not count toward R. At most
    ``2 * r_max`` requests are made; ``SamplingExhausted`` is raised when the
    first ``r_max`` of them are all rejected. With ``batch_size > 1`` a batch
    may overshoot the point where the stopping rule would have fired; every
    accepted sample in the batch is kept.
    """
    config = config or EstimatorConfig()
    steps = tuple(steps)
    k = len(steps)
    provenance = {"trace_id": trace_id, "estimator": config.to_dict(), "backend": gateway.backend_id}
    table = EdgeTable(k)
    if k < 2:
        zeros = np.zeros((k, k))
        provenance.update(samples=0, rejected=0, attempts=0, stopped_by="trivial")
        return ReasoningGraph(steps, zeros.astype(np.int64), zeros, (), provenance)

    prompt = render_semantics_prompt(steps)
    rng = np.random.default_rng([seed, 1])
    max_attempts = 2 * config.r_max
    attempts = rejected = 0
    stopped_by = "attempt_cap"
    while attempts < max_attempts:
        if table.samples_seen and should_stop(table, config):
            stopped_by = "r_max" if table.samples_seen >= config.r_max else "epsilon"
            break
        n = min(config.batch_size, config.r_max - table.samples_seen, max_attempts - attempts)
        params = [draw_sample_params(rng, temperature_range) for _ in range(n)]
        for raw in _request_batch(gateway, prompt, params):
            try:
                sample = parse_semantics(raw, k)
            except MalformedOutput:
                rejected += 1
                gateway.telemetry.record_rejected("semantics")
                continue
            gateway.telemetry.record_accepted("semantics")
            table.apply_sample(sample)
        attempts += n
        if table.samples_seen == 0 and attempts >= config.r_max:
            raise SamplingExhausted(f"all {attempts} semantics samples were rejected")
    else:
        if table.samples_seen and should_stop(table, config):
            stopped_by = "r_max" if table.samples_seen >= config.r_max else "epsilon"

    adjacency, weights = consensus(table, config)
    provenance.update(
        samples=table.samples_seen,
        rejected=rejected,
        attempts=attempts,
        stopped_by=stopped_by,
        max_se=table.max_se(),
    )
    return ReasoningGraph(steps, adjacency, weights, tuple(table.estimates()), provenance)
