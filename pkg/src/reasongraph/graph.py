"""Structural metrics of reasoning graphs.

Edges are the unordered pairs i < j with a nonzero relation, oriented from the
earlier step to the later one. Support and contradict edges count alike.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .edges import ReasoningGraph
from .errors import InvalidGraph, UndefinedMetric


@dataclass(frozen=True)
class GraphMetrics:
    node_count: int
    edge_count: int
    exploration_density: float | None
    branching_ratio: float
    convergence_ratio: float
    linearity: float
    support_edge_count: int
    contradict_edge_count: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NodeDegree:
    out_degree: int
    in_degree: int

    @property
    def total(self) -> int:
        return self.out_degree + self.in_degree


def _adjacency(graph) -> np.ndarray:
    a = graph.adjacency if isinstance(graph, ReasoningGraph) else graph
    return np.asarray(a)


def validate_graph(graph) -> np.ndarray:
    """Check the ternary antisymmetric structure; returns the adjacency."""
    a = _adjacency(graph)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidGraph(f"adjacency must be square, got shape {a.shape}")
    if a.size and not np.isin(a, (-1, 0, 1)).all():
        raise InvalidGraph("adjacency entries must be -1, 0 or 1")
    if np.any(np.diag(a) != 0):
        raise InvalidGraph("adjacency diagonal must be zero")
    if not np.array_equal(a.T, -a):
        raise InvalidGraph("adjacency is not antisymmetric")
    if isinstance(graph, ReasoningGraph):
        w = np.asarray(graph.weights, dtype=float)
        if w.shape != a.shape:
            raise InvalidGraph("weights and adjacency differ in shape")
        if np.any(np.diag(w) != 0) or not np.array_equal(w.T, -w):
            raise InvalidGraph("weights must be antisymmetric with zero diagonal")
        if np.any(np.abs(w) > 1):
            raise InvalidGraph("weights must lie in [-1, 1]")
        if np.any((a != 0) & (np.sign(a) != np.sign(w))):
            raise InvalidGraph("adjacency sign disagrees with weight sign")
        if len(graph.steps) != a.shape[0]:
            raise InvalidGraph("step count does not match adjacency size")
    return a.astype(np.int64)


def _degree_arrays(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    upper = np.triu(a != 0, k=1)
    return upper.sum(axis=1), upper.sum(axis=0)


def degrees(graph) -> list[NodeDegree]:
    out_deg, in_deg = _degree_arrays(validate_graph(graph))
    return [NodeDegree(int(o), int(i)) for o, i in zip(out_deg, in_deg)]


def edge_count(graph) -> int:
    return int(np.count_nonzero(np.triu(validate_graph(graph), k=1)))


def exploration_density(graph) -> float:
    a = validate_graph(graph)
    k = a.shape[0]
    if k < 2:
        raise UndefinedMetric("exploration density needs at least two nodes")
    return int(np.count_nonzero(np.triu(a, k=1))) / (k * (k - 1))


def branching_ratio(graph) -> float:
    a = validate_graph(graph)
    k = a.shape[0]
    if k == 0:
        return 0.0
    out_deg, _ = _degree_arrays(a)
    return int(np.count_nonzero(out_deg > 1)) / k


def convergence_ratio(graph) -> float:
    a = validate_graph(graph)
    k = a.shape[0]
    if k == 0:
        return 0.0
    _, in_deg = _degree_arrays(a)
    return int(np.count_nonzero(in_deg > 1)) / k


def linearity(graph) -> float:
    a = validate_graph(graph)
    k = a.shape[0]
    if k == 0:
        return 1.0
    out_deg, in_deg = _degree_arrays(a)
    return 1 - int(np.count_nonzero(out_deg + in_deg > 2)) / k


def metrics(graph) -> GraphMetrics:
    a = validate_graph(graph)
    k = a.shape[0]
    upper = np.triu(a, k=1)
    try:
        density = exploration_density(a)
    except UndefinedMetric:
        density = None
    return GraphMetrics(
        node_count=k,
        edge_count=int(np.count_nonzero(upper)),
        exploration_density=density,
        branching_ratio=branching_ratio(a),
        convergence_ratio=convergence_ratio(a),
        linearity=linearity(a),
        support_edge_count=int(np.count_nonzero(upper == 1)),
        contradict_edge_count=int(np.count_nonzero(upper == -1)),
    )
