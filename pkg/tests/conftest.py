import json

import pytest

from reasongraph.clustering import ReasoningStep
from reasongraph.llm.backends import ScriptedBackend
from reasongraph.llm.gateway import Gateway
from reasongraph.traces import count_tokens


def make_steps(k):
    return [ReasoningStep(i, f"step {i}", f"content of step {i}", (i,), count_tokens(f"content of step {i}")) for i in range(k)]


def label_json(labels):
    """{(i, j): 'support'} -> the JSON text a semantics call would return."""
    return json.dumps({f"({i},{j})": lab for (i, j), lab in labels.items()})


def scripted_gateway(rule, backend_id="scripted", **kw):
    kw.setdefault("max_concurrency", 1)
    kw.setdefault("sleep", lambda s: None)
    return Gateway(ScriptedBackend(rule, backend_id=backend_id), **kw)


@pytest.fixture
def steps3():
    return make_steps(3)


@pytest.fixture
def corpus_file(tmp_path):
    def write(records, name="corpus.jsonl"):
        path = tmp_path / name
        path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
        return path

    return write


def trace_record(trace_id="t1", text="A\n\nB\n\nC", regime="zero_shot", shots=0, correct=True, **extra):
    rec = {
        "trace_id": trace_id,
        "raw_text": text,
        "model_id": "m",
        "prompt_regime": regime,
        "shot_count": shots,
        "task_id": "task",
        "correct": correct,
    }
    rec.update(extra)
    return rec


ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
