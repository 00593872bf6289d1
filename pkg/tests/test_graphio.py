import json

import numpy as np
import pytest

from reasongraph.edges import EstimatorConfig, estimate_edges
from reasongraph.errors import InvalidGraph
from reasongraph.graphio import (
    graph_from_dict,
    graph_to_dict,
    read_graph_json,
    to_dot,
    write_dot,
    write_graph_json,
)
from reasongraph.llm.gateway import Gateway
from reasongraph.oracle import EdgeGroundTruth, simulate_sampler

from conftest import make_steps


@pytest.fixture
def graph():
    truth = EdgeGroundTruth(3, {(0, 1): (1.0, 0.0, 0.0), (0, 2): (0.0, 0.0, 1.0), (1, 2): (0.0, 1.0, 0.0)})
    gw = Gateway(simulate_sampler(truth), max_concurrency=1)
    return estimate_edges(make_steps(3), gw, EstimatorConfig(), trace_id='t "1"')


def test_roundtrip(graph, tmp_path):
    path = tmp_path / "g.json"
    write_graph_json(graph, path)
    back = read_graph_json(path)
    assert np.array_equal(back.adjacency, graph.adjacency)
    assert np.array_equal(back.weights, graph.weights)
    assert back.steps == graph.steps and back.estimates == graph.estimates
    assert graph_to_dict(back) == graph_to_dict(graph)


def test_json_is_plain(graph):
    text = json.dumps(graph_to_dict(graph))
    d = json.loads(text)
    assert d["adjacency"] == [[0, 1, -1], [-1, 0, 0], [1, 0, 0]]
    assert d["estimates"][0] == {"pair": [0, 1], "counts": {"-1": 0, "0": 0, "1": 3}, "se": 0.0, "w": 1.0}


def test_dot_output(graph, tmp_path):
    dot = to_dot(graph)
    assert dot.startswith('digraph "t \\"1\\"" {')
    assert 's0 -> s1 [style=solid, label="1.00"];' in dot
    assert 's0 -> s2 [style=dashed, label="-1.00"];' in dot
    assert "s1 -> s2" not in dot
    write_dot(graph, tmp_path / "g.dot")
    assert (tmp_path / "g.dot").read_text() == dot


@pytest.mark.parametrize("text", ["[1, 2]", "{not json", '{"steps": []}'])
def test_bad_graph_files(tmp_path, text):
    path = tmp_path / "g.json"
    path.write_text(text)
    with pytest.raises(InvalidGraph):
        read_graph_json(path)


def test_from_dict_bad_shape(graph):
    d = graph_to_dict(graph)
    d["adjacency"] = [[0, 1]]
    with pytest.raises(InvalidGraph):
        graph_from_dict(d)


def test_matches_schema(graph):
    jsonschema = pytest.importorskip("jsonschema")
    from importlib.resources import files

    schema = json.loads(files("reasongraph").joinpath("schemas/graph.schema.json").read_text())
    jsonschema.validate(graph_to_dict(graph), schema)
