import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reasongraph.edges import ReasoningGraph
from reasongraph.errors import InvalidGraph, UndefinedMetric
from reasongraph.graph import (
    branching_ratio,
    convergence_ratio,
    degrees,
    edge_count,
    exploration_density,
    linearity,
    metrics,
    validate_graph,
)
from reasongraph.oracle import brute_force_metrics

from conftest import make_steps


def adj(k, edges):
    a = np.zeros((k, k), dtype=int)
    for i, j in edges:
        sign = -1 if i > j else 1
        i, j = min(i, j), max(i, j)
        a[i, j], a[j, i] = sign, -sign
    return a


CHAIN = adj(4, [(0, 1), (1, 2), (2, 3)])
STAR = adj(4, [(0, 1), (0, 2), (0, 3)])
INVERSE_STAR = adj(4, [(0, 3), (1, 3), (2, 3)])
FIVE = adj(5, [(0, 2), (1, 2), (2, 3), (2, 4)])
COMPLETE = adj(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])


def test_chain_degrees():
    d = degrees(CHAIN)
    assert [x.out_degree for x in d] == [1, 1, 1, 0]
    assert [x.in_degree for x in d] == [0, 1, 1, 1]


def test_star_degrees():
    d = degrees(STAR)
    assert d[0].out_degree == 3 and all(x.in_degree == 1 for x in d[1:])


def test_five_node_degrees():
    d = degrees(FIVE)[2]
    assert (d.out_degree, d.in_degree, d.total) == (2, 2, 4)


def test_contradict_edges_count_toward_degree():
    a = CHAIN.copy()
    a[1, 2], a[2, 1] = -1, 1
    assert degrees(a) == degrees(CHAIN)
    m = metrics(a)
    assert (m.support_edge_count, m.contradict_edge_count) == (2, 1)


@pytest.mark.parametrize("a, expected", [(CHAIN, 0.25), (np.zeros((4, 4), int), 0.0), (COMPLETE, 0.5)])
def test_density(a, expected):
    assert exploration_density(a) == expected


def test_density_undefined_for_one_node():
    with pytest.raises(UndefinedMetric):
        exploration_density(np.zeros((1, 1), int))


def test_branching():
    assert branching_ratio(CHAIN) == 0.0
    assert branching_ratio(STAR) == 0.25
    assert branching_ratio(FIVE) == 0.2


def test_convergence():
    assert convergence_ratio(CHAIN) == 0.0
    assert convergence_ratio(INVERSE_STAR) == 0.25
    assert convergence_ratio(FIVE) == 0.2


def test_linearity():
    assert linearity(adj(9, [(i, i + 1) for i in range(8)])) == 1.0
    assert linearity(FIVE) == 0.8
    assert linearity(np.zeros((3, 3), int)) == 1.0


def test_metrics_bundle():
    m = metrics(CHAIN)
    assert (m.exploration_density, m.branching_ratio, m.convergence_ratio, m.linearity, m.edge_count) == (
        0.25, 0.0, 0.0, 1.0, 3,
    )
    empty = metrics(np.zeros((3, 3), int))
    assert (empty.exploration_density, empty.branching_ratio, empty.convergence_ratio, empty.linearity) == (0.0, 0, 0, 1)
    single = metrics(np.zeros((1, 1), int))
    assert single.exploration_density is None and single.linearity == 1.0 and single.node_count == 1


def test_metrics_on_reasoning_graph():
    w = CHAIN * 0.5
    g = ReasoningGraph(tuple(make_steps(4)), CHAIN, w, (), {"trace_id": "x"})
    assert metrics(g) == metrics(CHAIN)
    assert edge_count(g) == 3


@pytest.mark.parametrize(
    "a",
    [
        np.zeros((2, 3), int),
        np.array([[0, 2], [-2, 0]]),
        np.array([[1, 0], [0, -1]]),
        np.array([[0, 1], [1, 0]]),
    ],
)
def test_invalid_adjacency(a):
    with pytest.raises(InvalidGraph):
        validate_graph(a)


def test_invalid_weights():
    steps = tuple(make_steps(2))
    bad = [
        np.array([[0.0, 0.5], [0.5, 0.0]]),
        np.array([[0.0, -0.5], [0.5, 0.0]]),
        np.array([[0.0, 1.5], [-1.5, 0.0]]),
    ]
    for w in bad:
        with pytest.raises(InvalidGraph):
            validate_graph(ReasoningGraph(steps, adj(2, [(0, 1)]), w, (), {}))
    with pytest.raises(InvalidGraph):
        validate_graph(ReasoningGraph(steps[:1], adj(2, [(0, 1)]), np.array([[0, 0.5], [-0.5, 0]]), (), {}))


@st.composite
def ternary(draw):
    k = draw(st.integers(0, 7))
    a = np.zeros((k, k), dtype=int)
    for i in range(k):
        for j in range(i + 1, k):
            a[i, j] = draw(st.sampled_from([-1, 0, 1]))
            a[j, i] = -a[i, j]
    return a


@settings(max_examples=200)
@given(ternary())
def test_matches_brute_force(a):
    assert metrics(a) == brute_force_metrics(a.tolist())


@given(ternary())
def test_metric_ranges(a):
    m = metrics(a)
    k = a.shape[0]
    assert 0 <= m.branching_ratio <= 1 and 0 <= m.convergence_ratio <= 1 and 0 <= m.linearity <= 1
    if k >= 2:
        assert 0 <= m.exploration_density <= 0.5
    assert m.support_edge_count + m.contradict_edge_count == m.edge_count


@given(ternary())
def test_sign_blind(a):
    # turning every edge into a support edge leaves the topology metrics alone
    upper = np.abs(np.triu(a, k=1))
    m, all_support = metrics(a), metrics(upper - upper.T)
    for name in ("edge_count", "exploration_density", "branching_ratio", "convergence_ratio", "linearity"):
        assert getattr(m, name) == getattr(all_support, name)
