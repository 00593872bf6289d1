import json
import math
import random
from dataclasses import replace
from importlib.resources import files

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reasongraph.analysis import (
    CSV_COLUMNS,
    MetricRow,
    aggregate,
    build_report,
    correlate_conditions,
    correlate_metrics_with_accuracy,
    pearson,
    read_metrics_csv,
    render_markdown,
    step_count_distribution,
    write_metrics_csv,
)
from reasongraph.errors import DegenerateInput, ParseError, ReportIOError
from reasongraph.oracle import planted_corpus


def row(tid="t", model="m", regime="zero_shot", shots=0, correct=None, k=3, rho=0.1, tokens=100):
    return MetricRow(tid, model, regime, shots, correct, k, 0, rho, 0.0, 0.0, 1.0, 0, 0, tokens)


def two_pass_r(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


# aggregation


def test_two_point_mean():
    (agg,) = aggregate([row("a", rho=0.1), row("b", rho=0.3)])
    assert agg.means["rho_E"] == pytest.approx(0.2, abs=1e-15)
    assert agg.stds["rho_E"] == pytest.approx(math.sqrt(0.02), abs=1e-15)


def test_accuracy_fraction():
    rows = [row(str(i), correct=c) for i, c in enumerate([True, False, True, True])]
    assert aggregate(rows)[0].accuracy == 0.75


def test_unlabelled_rows_excluded_from_accuracy():
    (agg,) = aggregate([row("a", correct=True), row("b", correct=None)])
    assert agg.accuracy == 1.0 and agg.n_labeled == 1 and agg.n_traces == 2


def test_groups_by_regime():
    aggs = aggregate([row("a"), row("b", regime="concise", shots=1)])
    assert [(a.prompt_regime, a.label) for a in aggs] == [("zero_shot", "Zero-shot"), ("concise", "Concise (1-shot)")]


def test_missing_density_ignored_in_mean():
    (agg,) = aggregate([row("a", k=1, rho=None), row("b", rho=0.4)])
    assert agg.means["rho_E"] == 0.4 and agg.mean_steps == 2.0


rows_strategy = st.lists(
    st.builds(
        row,
        tid=st.uuids().map(str),
        model=st.sampled_from(["m1", "m2"]),
        correct=st.sampled_from([True, False, None]),
        k=st.integers(1, 20),
        rho=st.floats(0, 0.5),
        tokens=st.integers(1, 10_000),
    ),
    min_size=1,
    max_size=30,
)


@settings(max_examples=50)
@given(rows_strategy, st.randoms())
def test_aggregation_ignores_row_order(rows, rnd):
    shuffled = rows[:]
    rnd.shuffle(shuffled)
    assert aggregate(shuffled) == aggregate(rows)


# pearson


def test_pearson_examples():
    assert pearson([1, 2, 3, 4], [1, 2, 3, 4]).r == pytest.approx(1.0, abs=1e-12)
    assert pearson([1, 2, 3, 4], [-1, -2, -3, -4]).r == pytest.approx(-1.0, abs=1e-12)
    assert abs(pearson([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]).r - 0.8) <= 1e-12


def test_pearson_matches_two_pass_reference():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(3, 60))
        x = rng.normal(size=n).tolist()
        y = (0.5 * np.array(x) + rng.normal(size=n)).tolist()
        assert abs(pearson(x, y).r - two_pass_r(x, y)) <= 1e-12


def test_pearson_p_value_matches_t_test():
    x, y = [1, 2, 3, 4, 5], [2, 1, 4, 3, 5]
    # r = 0.8, t = r sqrt(n-2) / sqrt(1-r^2) = 0.8 * sqrt(3) / 0.6
    from scipy.stats import t as student_t

    t = 0.8 * math.sqrt(3) / 0.6
    assert pearson(x, y).p == pytest.approx(2 * student_t.sf(t, 3), rel=1e-9)


def test_pearson_degenerate():
    with pytest.raises(DegenerateInput):
        pearson([1, 1, 1], [1, 2, 3])
    assert pearson([1, 2], [3, 4]).p is None


# correlations


def test_planted_association_detected():
    rep = correlate_metrics_with_accuracy(planted_corpus(200, seed=1))
    assert rep.results["rho_E"].r > 0 and rep.results["rho_E"].p < 0.05


def test_shuffled_labels_calibrated():
    rows = planted_corpus(200, seed=2)
    rnd = random.Random(0)
    hits = 0
    for _ in range(100):
        labels = [r.correct for r in rows]
        rnd.shuffle(labels)
        rep = correlate_metrics_with_accuracy([replace(r, correct=c) for r, c in zip(rows, labels)])
        hits += rep.results["rho_E"].p < 0.05
    assert 0 <= hits <= 15


def test_constant_labels_degenerate():
    with pytest.raises(DegenerateInput):
        correlate_metrics_with_accuracy([row(str(i), correct=True, rho=i / 10) for i in range(5)])
    with pytest.raises(DegenerateInput):
        correlate_metrics_with_accuracy([row("a", correct=True), row("b", correct=False)])


def test_constant_metric_noted_not_fatal():
    rows = [row(str(i), correct=i % 2 == 0, rho=0.1 * i) for i in range(6)]
    rep = correlate_metrics_with_accuracy(rows)
    assert rep.results["gamma_B"] is None and "constant" in rep.notes["gamma_B"]
    assert rep.results["rho_E"] is not None


def test_condition_level():
    rows = []
    for cond, (acc_n, rho) in enumerate([(1, 0.05), (2, 0.1), (3, 0.2)]):
        for i in range(4):
            rows.append(row(f"{cond}-{i}", model=f"m{cond}", correct=i < acc_n, rho=rho))
    rep = correlate_conditions(aggregate(rows))
    assert rep.unit == "condition" and rep.results["rho_E"].n == 3


# step distributions


def test_step_cdf():
    (d,) = step_count_distribution([row("a", k=3), row("b", k=3), row("c", k=5)]).values()
    assert d.histogram == {3: 2, 5: 1}
    assert d.cdf == [(3, 2 / 3), (5, 1.0)]


def test_single_trace_cdf():
    (d,) = step_count_distribution([row(k=7)]).values()
    assert d.cdf == [(7, 1.0)]


def test_groups_normalised_separately():
    dists = step_count_distribution([row("a", k=2), row("b", regime="minimal", shots=1, k=4), row("c", k=6)])
    assert set(dists) == {"zero_shot", "minimal_1shot"}
    assert dists["zero_shot"].cdf[-1][1] == dists["minimal_1shot"].cdf[-1][1] == 1.0


@given(st.lists(st.integers(1, 30), min_size=1, max_size=40))
def test_cdf_monotone_and_complete(ks):
    (d,) = step_count_distribution([row(str(i), k=k) for i, k in enumerate(ks)]).values()
    fs = [f for _, f in d.cdf]
    assert fs == sorted(fs) and fs[-1] == 1.0 and sum(d.histogram.values()) == len(ks)


# csv


def test_csv_roundtrip(tmp_path):
    rows = [row("a", correct=True), row("b", k=1, rho=None, correct=None, tokens=None)]
    write_metrics_csv(rows, tmp_path / "m.csv")
    text = (tmp_path / "m.csv").read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert text.splitlines()[2].split(",")[CSV_COLUMNS.index("rho_E")] == ""
    assert read_metrics_csv(tmp_path / "m.csv") == rows


@pytest.mark.parametrize(
    "body, line",
    [("a,b\n", 1), (",".join(CSV_COLUMNS) + "\nx,m,zero_shot,0\n", 2), (",".join(CSV_COLUMNS) + "\n" + "x,m,zero_shot,zero,,3,0,,0,0,1,0,0,\n", 2)],
)
def test_csv_errors(tmp_path, body, line):
    (tmp_path / "m.csv").write_text(body)
    with pytest.raises(ParseError) as exc:
        read_metrics_csv(tmp_path / "m.csv")
    assert exc.value.line == line


# report


def three_conditions(labels=True):
    rows = []
    for n, (regime, shots) in enumerate([("zero_shot", 0), ("concise", 1), ("explanatory", 3)]):
        for i in range(3):
            rows.append(row(f"{n}-{i}", regime=regime, shots=shots, correct=(i + n) % 2 == 0 if labels else None, k=3 + i + n, rho=0.05 * (i + n)))
    return rows


def table_lines(md):
    return [l for l in md.split("## Conditions")[1].split("\n\n")[1].splitlines()]


def test_report_table_shape(tmp_path):
    build_report(three_conditions(), tmp_path)
    lines = table_lines((tmp_path / "report.md").read_text())
    assert lines[0] == "| Model | Prompt Type | Acc (%) | ρ_E | γ_B | γ_C | ℓ | Mean Steps |"
    body = lines[2:]
    assert len(body) == 3
    for line in body:
        cells = [c.strip() for c in line.strip("|").split("|")]
        assert len(cells) == 8 and all(float(c) >= 0 for c in cells[2:])


def test_report_without_labels(tmp_path):
    build_report(three_conditions(labels=False), tmp_path)
    md = (tmp_path / "report.md").read_text()
    assert "Acc (%)" not in md and "Correlation with accuracy" not in md
    assert "Correlation analysis: absent" in md
    corr = json.loads((tmp_path / "correlations.json").read_text())
    assert corr["trace_level"] is None and corr["notes"]["trace_level"]


def test_report_cdf_files(tmp_path):
    written = build_report(three_conditions(), tmp_path)
    names = {p.name for p in written}
    assert {"cdf_zero_shot.csv", "cdf_concise_1shot.csv", "cdf_explanatory_3shot.csv"} <= names
    assert (tmp_path / "cdf_zero_shot.csv").read_text().splitlines()[0] == "K,count,cdf"


def test_report_json_matches_schema(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads(files("reasongraph").joinpath("schemas/report.schema.json").read_text())
    for labels in (True, False):
        build_report(three_conditions(labels), tmp_path)
        jsonschema.validate(json.loads((tmp_path / "report.json").read_text()), schema)


def test_report_formats_subset(tmp_path):
    written = build_report(three_conditions(), tmp_path, formats=["json"])
    assert {p.name for p in written} == {"report.json", "correlations.json", "plots.json"}
    with pytest.raises(ValueError):
        build_report(three_conditions(), tmp_path, formats=["pdf"])


def test_report_write_failure(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportIOError):
        build_report(three_conditions(), blocker / "sub")


def test_markdown_marks_absent_condition_correlation():
    rows = [row(str(i), correct=i % 2 == 0, rho=0.1 * i) for i in range(6)]
    md = render_markdown(aggregate(rows), correlate_metrics_with_accuracy(rows), None, {}, {"condition_level": "too few"})
    assert "Absent: too few." in md
