"""Oracle battery: cross-check the library against the simulators in ``oracle``.

Run with ``reasongraph validate``. Each check is fast and self-seeded; the
battery is a smoke test of the installed library against first-principles
re-derivations, not a replacement for the test suite.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import correlate_metrics_with_accuracy
from .clustering import (
    CandidateClustering,
    ReasoningStep,
    ScoringWeights,
    compute_mu_ref,
    score_candidate,
    select_best,
)
from .edges import EdgeTable, EstimatorConfig, consensus, estimate_edges
from .embedding import HashingEmbedder
from .graph import metrics
from .llm.gateway import Gateway
from .oracle import (
    EdgeGroundTruth,
    SimulatedSampler,
    all_antisymmetric,
    brute_force_metrics,
    brute_force_select,
    planted_corpus,
    random_antisymmetric,
    simulate_sampler,
)
from .traces import ReasoningUnit, count_tokens


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _metrics_agree() -> tuple[bool, str]:
    rng = np.random.default_rng(1)
    mats = [random_antisymmetric(int(rng.integers(1, 7)), rng) for _ in range(500)]
    for k in range(1, 4):
        mats.extend(all_antisymmetric(k))
    bad = sum(metrics(np.array(a)) != brute_force_metrics(a) for a in mats)
    return bad == 0, f"{len(mats)} matrices, {bad} mismatches"


def _sampler_frequencies() -> tuple[bool, str]:
    sampler = SimulatedSampler(EdgeGroundTruth.uniform(2, 0.6, 0.1), seed=7)
    draws = [sampler.draw()[(0, 1)] for _ in range(10_000)]
    pos, neg = draws.count(1) / len(draws), draws.count(-1) / len(draws)
    ok = abs(pos - 0.6) <= 0.01 and abs(neg - 0.1) <= 0.01
    return ok, f"p+={pos:.4f} p-={neg:.4f}"


def _se_fidelity(runs: int = 300, r: int = 50) -> tuple[bool, str]:
    cfg = EstimatorConfig(epsilon=1e-9, r_max=r, r_min=r)
    steps = [ReasoningStep(i, f"s{i}", f"step {i}", (i,), 2) for i in range(2)]
    worst = 0.0
    for p_pos, p_neg in ((0.6, 0.1), (0.3, 0.3)):
        gateway = Gateway(simulate_sampler(EdgeGroundTruth.uniform(2, p_pos, p_neg), seed=11), max_concurrency=1)
        ws = [
            float(estimate_edges(steps, gateway, cfg, seed=s).weights[0, 1])
            for s in range(runs)
        ]
        full = math.sqrt((p_pos + p_neg - (p_pos - p_neg) ** 2) / r)
        worst = max(worst, abs(float(np.std(ws, ddof=1)) - full) / full)
    # looser than the acceptance bound: fewer runs here
    return worst <= 0.15, f"worst relative error vs full formula {worst:.3f} ({runs} runs)"


def _consensus_thresholds() -> tuple[bool, str]:
    cfg = EstimatorConfig()
    got = []
    # (support count, contradict count, R) giving w = .45, .40, .39, -.30, -.29
    for pos, neg, r in ((9, 0, 20), (8, 0, 20), (39, 0, 100), (0, 3, 10), (0, 29, 100)):
        table = EdgeTable(2)
        for n in range(r):
            label = 1 if n < pos else (-1 if n < pos + neg else 0)
            table.apply_sample({(0, 1): label})
        got.append(int(consensus(table, cfg)[0][0, 1]))
    return got == [1, 1, 0, -1, 0], f"A = {got}"


def _mu_ref_table() -> tuple[bool, str]:
    got = [compute_mu_ref(n, m) for m, n in ((25, 1000), (4, 90), (2000, 60000))]
    return got == [200.0, 30.0, 2000.0], f"mu_ref = {got}"


def _selection_agrees() -> tuple[bool, str]:
    emb = HashingEmbedder()
    weights = ScoringWeights()
    rng = np.random.default_rng(5)
    vocab = "alpha beta gamma delta epsilon zeta eta theta iota kappa".split()
    misses = 0
    for _ in range(10):
        m = int(rng.integers(3, 9))
        texts = [" ".join(rng.choice(vocab, size=int(rng.integers(2, 6)))) for _ in range(m)]
        units = [ReasoningUnit(i, t, count_tokens(t)) for i, t in enumerate(texts)]
        unit_vecs = emb.embed_texts(texts)
        mu_ref = compute_mu_ref(sum(u.token_count for u in units), m)
        cands = []
        for _ in range(4):
            cuts = sorted(rng.choice(np.arange(1, m), size=int(rng.integers(0, m - 1)), replace=False))
            bounds = [0, *map(int, cuts), m]
            steps = []
            for s, (a, b) in enumerate(zip(bounds, bounds[1:])):
                content = "\n\n".join(texts[a:b])
                steps.append(ReasoningStep(s, f"t{s}", content, tuple(range(a, b)), count_tokens(content)))
            cand = CandidateClustering(steps=tuple(steps))
            score_candidate(cand, unit_vecs, emb, mu_ref, weights)
            cands.append(cand)
        misses += select_best(cands) != brute_force_select(cands, units, weights, emb)
    return misses == 0, f"10 candidate sets, {misses} disagreements"


def _correlation_harness() -> tuple[bool, str]:
    rows = planted_corpus(n=200, seed=3)
    res = correlate_metrics_with_accuracy(rows).results["rho_E"]
    return res.r > 0.4 and res.p < 0.01, f"r={res.r:.3f} p={res.p:.2e}"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("metric oracle equivalence", _metrics_agree),
    ("simulated sampler frequencies", _sampler_frequencies),
    ("standard error fidelity", _se_fidelity),
    ("consensus thresholds", _consensus_thresholds),
    ("mu_ref table", _mu_ref_table),
    ("selection vs brute force", _selection_agrees),
    ("planted correlation", _correlation_harness),
]


def run_checks() -> list[CheckResult]:
    results = []
    for name, check in CHECKS:
        start = time.perf_counter()
        try:
            passed, detail = check()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, passed, detail, time.perf_counter() - start))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  time    detail"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {status:<6}  {r.seconds:5.2f}s  {r.detail}")
    return "\n".join(lines)
