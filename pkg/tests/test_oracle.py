import numpy as np
import pytest
from scipy.stats import chi2_contingency

from reasongraph.clustering import ScoringWeights
from reasongraph.embedding import HashingEmbedder
from reasongraph.graph import metrics
from reasongraph.llm.backends import PromptRequest
from reasongraph.llm.parsing import parse_semantics
from reasongraph.oracle import (
    EdgeGroundTruth,
    SimulatedSampler,
    all_antisymmetric,
    brute_force_metrics,
    brute_force_select,
    simulate_sampler,
)
from reasongraph.traces import segment_units


def test_truth_validation():
    with pytest.raises(ValueError):
        EdgeGroundTruth(2, {(0, 1): (0.5, 0.5, 0.5)})
    with pytest.raises(ValueError):
        EdgeGroundTruth(3, {(0, 1): (1.0, 0.0, 0.0)})
    with pytest.raises(ValueError):
        EdgeGroundTruth(2, {(1, 0): (1.0, 0.0, 0.0)})


def test_certain_support():
    backend = simulate_sampler(EdgeGroundTruth.uniform(3, 1.0, 0.0))
    req = PromptRequest("semantics", "p", 0.5, 1)
    for _ in range(20):
        assert set(parse_semantics(backend.complete(req), 3).labels.values()) == {1}


def test_seeded_streams_repeat():
    truth = EdgeGroundTruth.uniform(4, 0.3, 0.3)
    a, b = SimulatedSampler(truth, 5), SimulatedSampler(truth, 5)
    assert [a.draw() for _ in range(50)] == [b.draw() for _ in range(50)]


def test_frequencies_match_truth():
    sampler = SimulatedSampler(EdgeGroundTruth.uniform(2, 0.6, 0.1), seed=0)
    draws = np.array([sampler.draw()[(0, 1)] for _ in range(10_000)])
    assert abs((draws == 1).mean() - 0.6) <= 0.01
    assert abs((draws == -1).mean() - 0.1) <= 0.01


def test_draws_independent_across_pairs_and_rounds():
    sampler = SimulatedSampler(EdgeGroundTruth.uniform(3, 0.4, 0.25), seed=3)
    draws = [sampler.draw() for _ in range(10_000)]
    a = np.array([d[(0, 1)] for d in draws]) + 1
    b = np.array([d[(1, 2)] for d in draws]) + 1

    def table(x, y):
        t = np.zeros((3, 3))
        np.add.at(t, (x, y), 1)
        return t

    assert chi2_contingency(table(a, b)).pvalue > 0.01
    assert chi2_contingency(table(a[:-1], a[1:])).pvalue > 0.01


def test_brute_force_examples():
    chain = [[0, 1, 0, 0], [-1, 0, 1, 0], [0, -1, 0, 1], [0, 0, -1, 0]]
    assert brute_force_metrics(chain) == metrics(np.array(chain))
    zero = brute_force_metrics([[0] * 3 for _ in range(3)])
    assert (zero.edge_count, zero.branching_ratio, zero.convergence_ratio, zero.linearity) == (0, 0.0, 0.0, 1.0)


def test_brute_force_rejects_invalid():
    with pytest.raises(ValueError):
        brute_force_metrics([[0, 1], [1, 0]])


def test_enumeration_sizes():
    assert [sum(1 for _ in all_antisymmetric(k)) for k in range(1, 5)] == [1, 3, 27, 729]


def test_brute_select_higher_score_wins():
    units = segment_units("a b\n\nc d\n\ne f\n\ng h\n\ni j\n\nk l")
    emb = HashingEmbedder()
    w = ScoringWeights(1, 0, 0)
    # singletons score phi_ic = 1; merging unrelated units scores less
    singletons = [[i] for i in range(6)]
    merged = [[0, 1, 2], [3, 4, 5]]
    assert brute_force_select([singletons, merged], units, w, emb) == 0
    assert brute_force_select([merged, singletons], units, w, emb) == 1
    assert brute_force_select([singletons, singletons[:]], units, w, emb) == 0


def test_brute_select_prefers_fewer_steps_on_exact_tie():
    units = segment_units("x\n\nx\n\nx\n\nx\n\nx\n\nx")
    emb = HashingEmbedder()
    four = [[0, 1], [2], [3], [4, 5]]
    six = [[i] for i in range(6)]
    assert brute_force_select([six, four], units, ScoringWeights(1, 0, 0), emb) == 1
