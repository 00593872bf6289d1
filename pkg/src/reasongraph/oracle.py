"""Simulators and brute-force reference implementations for validation.

Nothing here imports from the graph metrics or clustering score code it
is used to check: agreement between the two is only evidence if the paths
are independent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .analysis import MetricRow
from .graph import GraphMetrics
from .llm.backends import PromptRequest, ScriptedBackend

_LABEL_WORDS = ("contradict", "independent", "support")


@dataclass(frozen=True)
class EdgeGroundTruth:
    """Per-pair label distribution as (p_support, p_independent, p_contradict)."""

    k: int
    probs: dict[tuple[int, int], tuple[float, float, float]]

    def __post_init__(self):
        for pair, ps in self.probs.items():
            i, j = pair
            if not 0 <= i < j < self.k:
                raise ValueError(f"pair {pair} outside the upper triangle of K={self.k}")
            if any(p < 0 or p > 1 for p in ps) or abs(sum(ps) - 1.0) > 1e-12:
                raise ValueError(f"probabilities for {pair} must lie in [0,1] and sum to 1")
        expected = {(i, j) for i in range(self.k) for j in range(i + 1, self.k)}
        if set(self.probs) != expected:
            raise ValueError("truth must cover every pair i < j")

    @classmethod
    def uniform(cls, k: int, p_pos: float, p_neg: float) -> "EdgeGroundTruth":
        p_zero = 1.0 - p_pos - p_neg
        return cls(k, {(i, j): (p_pos, p_zero, p_neg) for i in range(k) for j in range(i + 1, k)})


class SimulatedSampler:
    """Draws every pair's label independently from the truth, per request."""

    def __init__(self, truth: EdgeGroundTruth, seed: int = 0):
        self.truth = truth
        self.rng = np.random.default_rng(seed)
        self.pairs = sorted(truth.probs)
        # cumulative thresholds over (contradict, independent, support)
        self._cum = np.array(
            [[ps[2], ps[2] + ps[1]] for ps in (truth.probs[p] for p in self.pairs)], dtype=float
        )

    def draw(self) -> dict[tuple[int, int], int]:
        u = self.rng.random(len(self.pairs))
        idx = (u >= self._cum[:, 0]).astype(int) + (u >= self._cum[:, 1]).astype(int)
        return {p: int(c) - 1 for p, c in zip(self.pairs, idx)}

    def __call__(self, request: PromptRequest) -> str:
        labels = self.draw()
        return json.dumps({f"({i},{j})": _LABEL_WORDS[c + 1] for (i, j), c in labels.items()})


def simulate_sampler(truth: EdgeGroundTruth, seed: int = 0) -> ScriptedBackend:
    """Scripted semantics backend that samples labels from ``truth``."""
    sampler = SimulatedSampler(truth, seed)
    backend = ScriptedBackend(sampler, backend_id=f"sim:{seed}")
    backend.sampler = sampler
    return backend


def brute_force_metrics(adjacency) -> GraphMetrics:
    """Graph metrics by explicit enumeration of the edge list."""
    a = [list(map(int, row)) for row in adjacency]
    k = len(a)
    for i in range(k):
        if len(a[i]) != k:
            raise ValueError("adjacency must be square")
        if a[i][i] != 0:
            raise ValueError("nonzero diagonal")
        for j in range(k):
            if a[i][j] not in (-1, 0, 1) or a[j][i] != -a[i][j]:
                raise ValueError("not a ternary antisymmetric matrix")

    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            if a[i][j] != 0:
                edges.append((i, j, a[i][j]))
    out_deg = {v: 0 for v in range(k)}
    in_deg = {v: 0 for v in range(k)}
    for src, dst, _ in edges:
        out_deg[src] += 1
        in_deg[dst] += 1

    branching = sum(1 for v in range(k) if out_deg[v] > 1)
    converging = sum(1 for v in range(k) if in_deg[v] > 1)
    busy = sum(1 for v in range(k) if out_deg[v] + in_deg[v] > 2)
    return GraphMetrics(
        node_count=k,
        edge_count=len(edges),
        exploration_density=len(edges) / (k * (k - 1)) if k >= 2 else None,
        branching_ratio=branching / k if k else 0.0,
        convergence_ratio=converging / k if k else 0.0,
        linearity=1 - busy / k if k else 1.0,
        support_edge_count=sum(1 for e in edges if e[2] == 1),
        contradict_edge_count=sum(1 for e in edges if e[2] == -1),
    )


def random_antisymmetric(k: int, rng: np.random.Generator, p_edge: float | None = None) -> list[list[int]]:
    if p_edge is None:
        p_edge = float(rng.random())
    a = [[0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            if rng.random() < p_edge:
                a[i][j] = 1 if rng.random() < 0.5 else -1
                a[j][i] = -a[i][j]
    return a


def all_antisymmetric(k: int):
    """Every ternary antisymmetric K x K matrix (3 ** (K(K-1)/2) of them)."""
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    for code in range(3 ** len(pairs)):
        a = [[0] * k for _ in range(k)]
        for i, j in pairs:
            code, digit = divmod(code, 3)
            a[i][j] = digit - 1
            a[j][i] = 1 - digit
        yield a


# clustering selection


def _dot(u, v) -> float:
    return sum(x * y for x, y in zip(u, v))


def _cos(u, v) -> float:
    return _dot(u, v) / (math.sqrt(_dot(u, u)) * math.sqrt(_dot(v, v)))


def _k_target(m: int) -> int:
    k = 1
    while k * k < m:
        k += 1
    return min(max(3, k), 30)


def brute_force_scores(groups, unit_texts, weights, embedder, delimiter="\n\n") -> tuple[float, float, float, float]:
    """Score one clustering (a list of unit-index groups) from first principles."""
    unit_vecs = [list(map(float, v)) for v in embedder.embed_texts(list(unit_texts))]
    contents = [delimiter.join(unit_texts[i] for i in g) for g in groups]
    step_vecs = [list(map(float, v)) for v in embedder.embed_texts(contents)]

    coherence = []
    for g in groups:
        if len(g) == 1:
            coherence.append(1.0)
            continue
        sims = [_cos(unit_vecs[u], unit_vecs[v]) for a, u in enumerate(g) for v in g[a + 1 :]]
        coherence.append(2 * sum(sims) / (len(g) * (len(g) - 1)))
    phi_ic = sum(coherence) / len(groups)

    if len(groups) == 1:
        phi_sep = 0.0
    else:
        gaps = [1 - _cos(step_vecs[j], step_vecs[j + 1]) for j in range(len(groups) - 1)]
        phi_sep = sum(gaps) / (len(groups) - 1)

    n_tokens = sum(len(t.split()) for t in unit_texts)
    mu_ref = n_tokens / _k_target(len(unit_texts))
    mean_len = sum(len(c.split()) for c in contents) / len(contents)
    phi_len = 1 - abs(mean_len / mu_ref - 1)

    w_ic, w_sep, w_len = weights
    return phi_ic, phi_sep, phi_len, w_ic * phi_ic + w_sep * phi_sep + w_len * phi_len


def brute_force_select(candidates, units, weights, embedder, tie_tol: float = 1e-12) -> int:
    """Index of the best candidate: highest score, then fewest steps, then earliest.

    ``candidates`` are CandidateClustering objects (only their unit index
    groups are used) or plain lists of index groups.
    """
    texts = [u.text if hasattr(u, "text") else u for u in units]
    w = weights.as_list() if hasattr(weights, "as_list") else list(weights)
    groups_list = []
    for c in candidates:
        if hasattr(c, "steps"):
            groups_list.append([list(s.unit_indices) for s in c.steps])
        else:
            groups_list.append([list(g) for g in c])
    scores = [brute_force_scores(g, texts, w, embedder)[3] for g in groups_list]
    top = max(scores)
    best = None
    for idx, (score, groups) in enumerate(zip(scores, groups_list)):
        if top - score > tie_tol:
            continue
        if best is None or len(groups) < len(groups_list[best]):
            best = idx
    return best


# synthetic corpora


def planted_corpus(n: int = 200, seed: int = 0, noise: float = 0.02, labels: bool = True) -> list[MetricRow]:
    """Rows whose correctness is planted as rho_E above its median plus noise."""
    rng = np.random.default_rng(seed)
    rows = []
    rhos = rng.uniform(0.0, 0.25, size=n)
    median = float(np.median(rhos))
    jitter = rng.normal(0.0, noise, size=n)
    for idx in range(n):
        k = int(rng.integers(4, 20))
        rho = float(rhos[idx])
        correct = bool(rho + jitter[idx] > median) if labels else None
        rows.append(
            MetricRow(
                trace_id=f"syn-{idx:04d}",
                model_id="synthetic",
                prompt_regime="zero_shot",
                shot_count=0,
                correct=correct,
                K=k,
                E=int(round(rho * k * (k - 1))),
                rho_E=rho,
                gamma_B=float(rng.uniform(0, 0.8)),
                gamma_C=float(rng.uniform(0, 0.8)),
                linearity=float(rng.uniform(0.3, 1.0)),
                support_edges=0,
                contradict_edges=0,
                tokens=int(rng.integers(500, 5000)),
            )
        )
    return rows
