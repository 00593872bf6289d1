"""Ensemble clustering of reasoning units into reasoning steps.

B candidate clusterings are sampled from the LLM at random temperatures,
each is scored by a weighted mix of intra-step coherence, adjacent-step
separation and length regularity, and the best-scoring candidate becomes
the node set of the reasoning graph.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embedding import embedder_id
from .errors import AlignmentFailure, MalformedOutput, NoValidCandidate
from .llm.backends import PromptRequest
from .llm.parsing import ClusteringResponse, parse_clustering
from .llm.prompts import render_clustering_prompt
from .traces import DEFAULT_DELIMITER, ReasoningUnit, count_tokens

DEFAULT_TEMPERATURE_RANGE = (0.3, 0.7)


@dataclass(frozen=True)
class ReasoningStep:
    index: int
    title: str
    content: str
    unit_indices: tuple[int, ...]
    token_count: int

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "title": self.title,
            "content": self.content,
            "unit_indices": list(self.unit_indices),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReasoningStep":
        return cls(
            index=d["index"],
            title=d["title"],
            content=d["content"],
            unit_indices=tuple(d["unit_indices"]),
            token_count=count_tokens(d["content"]),
        )


@dataclass(frozen=True)
class ScoringWeights:
    w_ic: float = 1 / 3
    w_sep: float = 1 / 3
    w_len: float = 1 / 3

    def __post_init__(self):
        ws = (self.w_ic, self.w_sep, self.w_len)
        if any(w < 0 for w in ws):
            raise ValueError("scoring weights must be nonnegative")
        if abs(sum(ws) - 1.0) > 1e-12:
            raise ValueError(f"scoring weights must sum to 1, got {sum(ws)!r}")

    def as_list(self) -> list[float]:
        return [self.w_ic, self.w_sep, self.w_len]


@dataclass(frozen=True)
class SampleSource:
    temperature: float
    seed: int | None
    backend_id: str


@dataclass(frozen=True)
class Scores:
    phi_ic: float
    phi_sep: float
    phi_len: float
    composite: float


@dataclass
class CandidateClustering:
    steps: list[ReasoningStep]
    source_sample: SampleSource | None = None
    scores: Scores | None = None

    @property
    def k(self) -> int:
        return len(self.steps)


def _norm(text: str) -> str:
    return " ".join(text.split())


def align_steps_to_units(
    response: ClusteringResponse,
    units: Sequence[ReasoningUnit],
    delimiter: str = DEFAULT_DELIMITER,
) -> list[ReasoningStep]:
    """Map each returned step onto a contiguous run of units.

    Each step takes the longest run of units, starting where the previous
    step stopped, whose whitespace-collapsed concatenation is a word-aligned
    prefix of the step's collapsed content. The runs must cover every unit.
    Step content is rebuilt from the units themselves.
    """
    if not units:
        raise ValueError("units must be nonempty")
    norm_units = [_norm(u.text) for u in units]
    m = len(units)
    pos = 0
    steps: list[ReasoningStep] = []
    for j, st in enumerate(response.steps):
        target = _norm(st.content)
        run = 0
        acc = ""
        for q in range(pos, m):
            acc = norm_units[q] if q == pos else f"{acc} {norm_units[q]}"
            if target == acc or target.startswith(acc + " "):
                run = q - pos + 1
            else:
                break
        if run == 0:
            raise AlignmentFailure(f"step s{j} does not start at unit u{pos}" if pos < m else
                                   f"step s{j} has no units left to cover")
        idx = tuple(range(pos, pos + run))
        content = delimiter.join(units[i].text for i in idx)
        steps.append(
            ReasoningStep(
                index=j,
                title=st.title,
                content=content,
                unit_indices=idx,
                token_count=sum(units[i].token_count for i in idx),
            )
        )
        pos += run
    if pos != m:
        raise AlignmentFailure(f"steps cover units u0..u{pos - 1} but trace has {m} units")
    return steps


def _stack(embeddings) -> np.ndarray:
    mat = np.asarray([np.asarray(e, dtype=float) for e in embeddings])
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return mat / norms


def phi_intra_coherence(candidate: CandidateClustering, unit_embeddings) -> float:
    """Mean over steps of the mean pairwise unit cosine; singleton steps score 1."""
    mat = _stack(unit_embeddings)
    total = 0.0
    for step in candidate.steps:
        n = len(step.unit_indices)
        if n == 1:
            total += 1.0
            continue
        sub = mat[list(step.unit_indices)]
        sims = np.clip(sub @ sub.T, -1.0, 1.0)
        pair_sum = float(np.triu(sims, k=1).sum())
        total += 2.0 * pair_sum / (n * (n - 1))
    return total / candidate.k


def phi_separation(candidate: CandidateClustering, step_embeddings) -> float:
    """Mean of 1 - cos over adjacent step pairs; 0 for a single step."""
    k = candidate.k
    if k < 2:
        return 0.0
    mat = _stack(step_embeddings)
    adjacent = np.clip(np.einsum("ij,ij->i", mat[:-1], mat[1:]), -1.0, 1.0)
    return float(np.sum(1.0 - adjacent)) / (k - 1)


def compute_mu_ref(n_tokens: int, m_units: int) -> float:
    """Reference tokens per step: N / clamp(ceil(sqrt(M)), 3, 30)."""
    if n_tokens < 1 or m_units < 1:
        raise ValueError("need at least one token and one unit")
    root = math.isqrt(m_units)
    if root * root < m_units:
        root += 1
    k_target = min(max(3, root), 30)
    return n_tokens / k_target


def phi_length_regularity(candidate: CandidateClustering, mu_ref: float) -> float:
    """1 - |mean step length / mu_ref - 1|; deliberately unclamped."""
    if mu_ref <= 0:
        raise ValueError("mu_ref must be positive")
    mean_len = sum(s.token_count for s in candidate.steps) / candidate.k
    return 1.0 - abs(mean_len / mu_ref - 1.0)


def composite_score(phis: Scores | Sequence[float], weights: ScoringWeights) -> float:
    if isinstance(phis, Scores):
        phis = (phis.phi_ic, phis.phi_sep, phis.phi_len)
    ic, sep, ln = phis
    return weights.w_ic * ic + weights.w_sep * sep + weights.w_len * ln


def score_candidate(
    candidate: CandidateClustering,
    unit_embeddings,
    embedder,
    mu_ref: float,
    weights: ScoringWeights,
) -> Scores:
    step_embeddings = embedder.embed_texts([s.content for s in candidate.steps])
    ic = phi_intra_coherence(candidate, unit_embeddings)
    sep = phi_separation(candidate, step_embeddings)
    ln = phi_length_regularity(candidate, mu_ref)
    scores = Scores(ic, sep, ln, composite_score((ic, sep, ln), weights))
    candidate.scores = scores
    return scores


TIE_TOLERANCE = 1e-12


def select_best(candidates: Sequence[CandidateClustering], tie_tol: float = TIE_TOLERANCE) -> int:
    """Argmax composite; ties go to fewer steps, then the earlier sample.

    Scores within ``tie_tol`` of the maximum count as tied, so rounding noise
    in the cosine sums cannot break a genuine tie.
    """
    if not candidates:
        raise NoValidCandidate("no candidates to select from")
    top = max(c.scores.composite for c in candidates)
    tied = [i for i, c in enumerate(candidates) if top - c.scores.composite <= tie_tol]
    return min(tied, key=lambda i: (candidates[i].k, i))


@dataclass(frozen=True)
class AttemptRecord:
    slot: int
    attempt: int
    temperature: float
    seed: int
    accepted: bool
    reason: str | None = None


@dataclass
class EnsembleResult:
    selected: CandidateClustering
    selected_index: int
    candidates: list[CandidateClustering]
    attempts: list[AttemptRecord]
    slots_requested: int
    mu_ref: float
    weights: ScoringWeights
    embedder: str = ""
    candidate_slots: list[int] = field(default_factory=list)

    @property
    def slots_filled(self) -> int:
        return len(self.candidates)

    def audit(self) -> dict:
        records = []
        for a in self.attempts:
            rec = {
                "slot": a.slot,
                "attempt": a.attempt,
                "temperature": a.temperature,
                "seed": a.seed,
                "accepted": a.accepted,
            }
            if a.accepted:
                ci = self.candidate_slots.index(a.slot)
                cand = self.candidates[ci]
                rec.update(
                    {
                        "K_b": cand.k,
                        "phi_ic": cand.scores.phi_ic,
                        "phi_sep": cand.scores.phi_sep,
                        "phi_len": cand.scores.phi_len,
                        "composite": cand.scores.composite,
                        "candidate_index": ci,
                    }
                )
            else:
                rec["reason"] = a.reason
            records.append(rec)
        return {
            "B": self.slots_requested,
            "slots_filled": self.slots_filled,
            "weights": self.weights.as_list(),
            "mu_ref": self.mu_ref,
            "embedder": self.embedder,
            "selected_index": self.selected_index,
            "attempts": records,
        }


def draw_sample_params(rng: np.random.Generator, temperature_range) -> tuple[float, int]:
    lo, hi = temperature_range
    temperature = float(rng.uniform(lo, hi))
    seed = int(rng.integers(0, 2**31 - 1))
    return temperature, seed


def _sample_slot(slot, units, prompt, gateway, seed, resample_cap, temperature_range, delimiter):
    rng = np.random.default_rng([seed, 0, slot])
    records = []
    for attempt in range(resample_cap + 1):
        temperature, req_seed = draw_sample_params(rng, temperature_range)
        request = PromptRequest(
            template_id="clustering",
            rendered_prompt=prompt,
            temperature=temperature,
            seed=req_seed,
            backend_id=gateway.backend_id,
        )
        raw = gateway.complete(request)
        try:
            response = parse_clustering(raw, len(units))
            steps = align_steps_to_units(response, units, delimiter)
        except MalformedOutput as exc:
            gateway.telemetry.record_rejected("clustering")
            records.append(AttemptRecord(slot, attempt, temperature, req_seed, False, str(exc)))
            continue
        gateway.telemetry.record_accepted("clustering")
        records.append(AttemptRecord(slot, attempt, temperature, req_seed, True))
        source = SampleSource(temperature, req_seed, gateway.backend_id)
        return CandidateClustering(steps=steps, source_sample=source), records
    return None, records


def run_ensemble(
    units: Sequence[ReasoningUnit],
    b: int,
    gateway,
    embedder,
    weights: ScoringWeights | None = None,
    *,
    seed: int = 0,
    resample_cap: int = 3,
    temperature_range=DEFAULT_TEMPERATURE_RANGE,
    delimiter: str = DEFAULT_DELIMITER,
) -> EnsembleResult:
    """Sample ``b`` clusterings, score them, and pick the best.

    A slot whose sample is malformed or cannot be aligned is resampled up to
    ``resample_cap`` times and then left empty. Request parameters for every
    slot derive from ``seed`` alone, so results do not depend on how slots
    are scheduled across threads.
    """
    if b < 1:
        raise ValueError("B must be at least 1")
    weights = weights or ScoringWeights()
    prompt = render_clustering_prompt(units)
    args = (units, prompt, gateway, seed, resample_cap, temperature_range, delimiter)
    workers = min(b, getattr(gateway, "max_concurrency", 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda s: _sample_slot(s, *args), range(b)))
    else:
        outcomes = [_sample_slot(s, *args) for s in range(b)]

    attempts = [rec for _, recs in outcomes for rec in recs]
    candidates = [c for c, _ in outcomes if c is not None]
    slots = [s for s, (c, _) in enumerate(outcomes) if c is not None]
    if not candidates:
        raise NoValidCandidate(f"all {b} clustering slots were rejected")

    n_tokens = sum(u.token_count for u in units)
    mu_ref = compute_mu_ref(n_tokens, len(units))
    unit_embeddings = embedder.embed_texts([u.text for u in units])
    for cand in candidates:
        score_candidate(cand, unit_embeddings, embedder, mu_ref, weights)
    best = select_best(candidates)
    return EnsembleResult(
        selected=candidates[best],
        selected_index=best,
        candidates=candidates,
        attempts=attempts,
        slots_requested=b,
        mu_ref=mu_ref,
        weights=weights,
        embedder=embedder_id(embedder),
        candidate_slots=slots,
    )
