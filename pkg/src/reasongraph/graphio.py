"""Reading and writing reasoning graphs as JSON and Graphviz DOT."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .clustering import ReasoningStep
from .edges import EdgeEstimate, ReasoningGraph
from .errors import InvalidGraph


def _plain(obj):
    """Convert numpy scalars/arrays nested in ``obj`` to JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def graph_to_dict(graph: ReasoningGraph) -> dict:
    return {
        "trace_id": graph.trace_id,
        "steps": [s.to_dict() for s in graph.steps],
        "adjacency": [[int(x) for x in row] for row in graph.adjacency.tolist()],
        "weights": [[float(x) for x in row] for row in graph.weights.tolist()],
        "estimates": [e.to_dict() for e in graph.estimates],
        "provenance": _plain(graph.provenance),
    }


def graph_from_dict(d: dict) -> ReasoningGraph:
    try:
        steps = tuple(ReasoningStep.from_dict(s) for s in d["steps"])
        k = len(steps)
        adjacency = np.array(d["adjacency"], dtype=np.int64).reshape(k, k)
        weights = np.array(d["weights"], dtype=float).reshape(k, k)
        estimates = []
        for e in d["estimates"]:
            counts = {int(lbl): int(n) for lbl, n in e["counts"].items()}
            r = sum(counts.values())
            p_hat = {lbl: n / r for lbl, n in counts.items()}
            estimates.append(
                EdgeEstimate(
                    pair=(int(e["pair"][0]), int(e["pair"][1])),
                    counts=counts,
                    samples_seen=r,
                    p_hat=p_hat,
                    standard_error=float(e["se"]),
                    signed_confidence=float(e["w"]),
                )
            )
        provenance = dict(d.get("provenance", {}))
        provenance.setdefault("trace_id", d["trace_id"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidGraph(f"graph JSON does not match the schema: {exc}") from None
    return ReasoningGraph(steps, adjacency, weights, tuple(estimates), provenance)


def dumps_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


def write_graph_json(graph: ReasoningGraph, path: str | Path) -> None:
    Path(path).write_text(dumps_json(graph_to_dict(graph)), encoding="utf-8")


def read_graph_json(path: str | Path) -> ReasoningGraph:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidGraph(f"{path}: not valid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise InvalidGraph(f"{path}: top level must be an object")
    return graph_from_dict(data)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def to_dot(graph: ReasoningGraph) -> str:
    """Render one edge per nonzero pair i < j; support solid, contradict dashed."""
    lines = [f'digraph "{_dot_escape(graph.trace_id or "reasoning")}" {{']
    lines.append("  rankdir=TB;")
    lines.append("  node [shape=box];")
    for step in graph.steps:
        lines.append(f'  s{step.index} [label="s{step.index}: {_dot_escape(step.title)}"];')
    k = graph.k
    for i in range(k):
        for j in range(i + 1, k):
            a = int(graph.adjacency[i, j])
            if a == 0:
                continue
            style = "solid" if a > 0 else "dashed"
            lines.append(f'  s{i} -> s{j} [style={style}, label="{graph.weights[i, j]:.2f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(graph: ReasoningGraph, path: str | Path) -> None:
    Path(path).write_text(to_dot(graph), encoding="utf-8")
