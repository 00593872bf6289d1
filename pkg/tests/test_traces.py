import pytest
from hypothesis import given
from hypothesis import strategies as st

from reasongraph.errors import DuplicateTraceId, EmptyTrace, ParseError
from reasongraph.traces import ReasoningTrace, load_corpus, segment_units, write_corpus

from conftest import trace_record


def texts(units):
    return [u.text for u in units]


def test_split_on_blank_lines():
    units = segment_units("A\n\nB\n\nC")
    assert texts(units) == ["A", "B", "C"]
    assert [u.index for u in units] == [0, 1, 2]


def test_empty_middle_segment_dropped():
    # reference: split then filter empties
    raw = "A\n\n\n\nB"
    expected = [p.strip() for p in raw.split("\n\n") if p.strip()]
    assert texts(segment_units(raw)) == expected == ["A", "B"]


def test_no_delimiter_gives_one_unit():
    units = segment_units("X")
    assert texts(units) == ["X"] and len(units) == 1


def test_units_are_trimmed_and_counted():
    units = segment_units("  one two \n\n\tthree  ")
    assert texts(units) == ["one two", "three"]
    assert [u.token_count for u in units] == [2, 1]


@pytest.mark.parametrize("raw", ["", "   ", "\n\n\n\n", " \n\n \t "])
def test_empty_trace(raw):
    with pytest.raises(EmptyTrace):
        segment_units(raw)


def test_custom_delimiter():
    assert texts(segment_units("a|b||c", delimiter="|")) == ["a", "b", "c"]
    with pytest.raises(ValueError):
        segment_units("a", delimiter="")


chunk = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=30)


@given(st.lists(chunk, min_size=1, max_size=8))
def test_resegmenting_is_idempotent(parts):
    raw = "\n\n".join(parts)
    try:
        units = segment_units(raw)
    except EmptyTrace:
        return
    rejoined = "\n\n".join(texts(units))
    assert texts(segment_units(rejoined)) == texts(units)
    for u in units:
        assert "\n\n" not in u.text and u.text == u.text.strip() and u.text


def test_trace_validates_shot_count():
    with pytest.raises(ValueError):
        ReasoningTrace("t", "x", "m", "zero_shot", 1, "task")
    with pytest.raises(ValueError):
        ReasoningTrace("t", "x", "m", "concise", 0, "task")
    t = ReasoningTrace("t", "a b c", "m", "concise", 2, "task")
    assert t.token_count == 3


def test_load_three_traces(corpus_file):
    path = corpus_file([trace_record(f"t{i}") for i in range(3)])
    assert [t.trace_id for t in load_corpus(path)] == ["t0", "t1", "t2"]


def test_duplicate_id_reports_line(corpus_file):
    path = corpus_file([trace_record("t1"), trace_record("t1")])
    with pytest.raises(DuplicateTraceId) as exc:
        load_corpus(path)
    assert exc.value.line == 2


def test_missing_correct_is_none(corpus_file):
    rec = trace_record()
    del rec["correct"]
    (trace,) = load_corpus(corpus_file([rec]))
    assert trace.correct is None


def test_blank_lines_skipped(tmp_path):
    import json

    path = tmp_path / "c.jsonl"
    path.write_text("\n" + json.dumps(trace_record()) + "\n\n", encoding="utf-8")
    assert len(load_corpus(path)) == 1


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda r: r.pop("raw_text"), "missing"),
        (lambda r: r.update(extra=1), "unknown field"),
        (lambda r: r.update(prompt_regime="chatty"), "prompt_regime"),
        (lambda r: r.update(shot_count="2"), "shot_count"),
        (lambda r: r.update(correct="yes"), "correct"),
        (lambda r: r.update(token_count=99), "token_count"),
        (lambda r: r.update(shot_count=1), "shot_count"),
    ],
)
def test_bad_records_name_the_line(corpus_file, mutate, fragment):
    bad = trace_record("t2")
    mutate(bad)
    path = corpus_file([trace_record("t1"), bad])
    with pytest.raises(ParseError) as exc:
        load_corpus(path)
    assert exc.value.line == 2
    assert fragment in str(exc.value) and str(exc.value).startswith("line 2:")


def test_invalid_json_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("{not json\n", encoding="utf-8")
    with pytest.raises(ParseError) as exc:
        load_corpus(path)
    assert exc.value.line == 1


def test_matching_token_count_accepted(corpus_file):
    (t,) = load_corpus(corpus_file([trace_record(text="a b\n\nc", token_count=3)]))
    assert t.token_count == 3


def test_write_then_load_roundtrip(tmp_path):
    traces = [
        ReasoningTrace("a", "x y\n\nz", "m1", "zero_shot", 0, "q1", True),
        ReasoningTrace("b", "p", "m2", "minimal", 1, "q2", None),
    ]
    path = tmp_path / "out.jsonl"
    write_corpus(traces, path)
    assert load_corpus(path) == traces
