"""Per-condition aggregation, step-count distributions and accuracy correlations."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from scipy import stats

from .errors import DegenerateInput, ParseError, ReportIOError
from .traces import PromptRegime

METRIC_NAMES = ("rho_E", "gamma_B", "gamma_C", "linearity")
METRIC_LABELS = {"rho_E": "ρ_E", "gamma_B": "γ_B", "gamma_C": "γ_C", "linearity": "ℓ"}
CSV_COLUMNS = (
    "trace_id",
    "model_id",
    "prompt_regime",
    "shot_count",
    "correct",
    "K",
    "E",
    "rho_E",
    "gamma_B",
    "gamma_C",
    "linearity",
    "support_edges",
    "contradict_edges",
    "tokens",
)
_REGIME_ORDER = {r.value: n for n, r in enumerate(PromptRegime)}


@dataclass(frozen=True)
class MetricRow:
    trace_id: str
    model_id: str
    prompt_regime: str
    shot_count: int
    correct: bool | None
    K: int
    E: int
    rho_E: float | None
    gamma_B: float
    gamma_C: float
    linearity: float
    support_edges: int
    contradict_edges: int
    tokens: int | None = None

    @property
    def group_key(self) -> tuple[str, str, int]:
        return (self.model_id, self.prompt_regime, self.shot_count)

    def metric(self, name: str) -> float | None:
        return getattr(self, name)


def _fmt_opt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def write_metrics_csv(rows: Iterable[MetricRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt_opt(getattr(row, c)) for c in CSV_COLUMNS])


def _parse_bool(text: str) -> bool | None:
    t = text.strip().lower()
    if t == "":
        return None
    if t in ("true", "1"):
        return True
    if t in ("false", "0"):
        return False
    raise ValueError(f"bad boolean {text!r}")


def _parse_opt(text: str, kind):
    return None if text.strip() == "" else kind(text)


def read_metrics_csv(path: str | Path) -> list[MetricRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_COLUMNS:
            raise ParseError(f"header must be {','.join(CSV_COLUMNS)}", 1)
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(CSV_COLUMNS):
                raise ParseError(f"expected {len(CSV_COLUMNS)} fields, got {len(rec)}", lineno)
            d = dict(zip(CSV_COLUMNS, rec))
            try:
                rows.append(
                    MetricRow(
                        trace_id=d["trace_id"],
                        model_id=d["model_id"],
                        prompt_regime=d["prompt_regime"],
                        shot_count=int(d["shot_count"]),
                        correct=_parse_bool(d["correct"]),
                        K=int(d["K"]),
                        E=int(d["E"]),
                        rho_E=_parse_opt(d["rho_E"], float),
                        gamma_B=float(d["gamma_B"]),
                        gamma_C=float(d["gamma_C"]),
                        linearity=float(d["linearity"]),
                        support_edges=int(d["support_edges"]),
                        contradict_edges=int(d["contradict_edges"]),
                        tokens=_parse_opt(d["tokens"], int),
                    )
                )
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    return rows


def _mean(values: Sequence[float]) -> float | None:
    return math.fsum(values) / len(values) if values else None


def _std(values: Sequence[float]) -> float | None:
    if not values:
        return None
    if len(values) < 2:
        return 0.0
    m = math.fsum(values) / len(values)
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / (len(values) - 1))


@dataclass(frozen=True)
class ConditionAggregate:
    model_id: str
    prompt_regime: str
    shot_count: int
    n_traces: int
    n_labeled: int
    accuracy: float | None
    means: dict[str, float | None]
    stds: dict[str, float | None]
    mean_steps: float
    mean_total_tokens: float | None

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.model_id, self.prompt_regime, self.shot_count)

    @property
    def label(self) -> str:
        return condition_label(self.prompt_regime, self.shot_count)


def condition_label(regime: str, shots: int) -> str:
    if regime == PromptRegime.ZERO_SHOT.value:
        return "Zero-shot"
    return f"{regime.capitalize()} ({shots}-shot)"


def _sort_key(key: tuple[str, str, int]):
    model, regime, shots = key
    return (model, _REGIME_ORDER.get(regime, len(_REGIME_ORDER)), regime, shots)


def aggregate(rows: Sequence[MetricRow]) -> list[ConditionAggregate]:
    """Group by (model, prompt regime, shots) and summarise each group.

    Unlabelled rows count toward metric means but not toward accuracy.
    """
    if not rows:
        raise ValueError("no rows to aggregate")
    groups: dict[tuple, list[MetricRow]] = defaultdict(list)
    for row in rows:
        groups[row.group_key].append(row)
    out = []
    for key in sorted(groups, key=_sort_key):
        members = groups[key]
        labels = [r.correct for r in members if r.correct is not None]
        means, stds = {}, {}
        for name in METRIC_NAMES:
            vals = [r.metric(name) for r in members if r.metric(name) is not None]
            means[name] = _mean(vals)
            stds[name] = _std(vals)
        tokens = [r.tokens for r in members if r.tokens is not None]
        out.append(
            ConditionAggregate(
                model_id=key[0],
                prompt_regime=key[1],
                shot_count=key[2],
                n_traces=len(members),
                n_labeled=len(labels),
                accuracy=sum(labels) / len(labels) if labels else None,
                means=means,
                stds=stds,
                mean_steps=_mean([r.K for r in members]),
                mean_total_tokens=_mean(tokens),
            )
        )
    return out


@dataclass(frozen=True)
class PearsonResult:
    r: float
    p: float | None
    n: int


def pearson(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """Sample Pearson r with a two-sided t-test p-value (n - 2 df)."""
    if len(x) != len(y):
        raise ValueError("series lengths differ")
    n = len(x)
    if n < 2:
        raise ValueError("need at least two points")
    if min(x) == max(x) or min(y) == max(y):
        raise DegenerateInput("constant series: correlation undefined")
    res = stats.pearsonr(x, y)
    r = float(res.statistic)
    return PearsonResult(r=r, p=float(res.pvalue) if n >= 3 else None, n=n)


@dataclass
class CorrelationReport:
    unit: str
    results: dict[str, PearsonResult | None]
    notes: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "unit": self.unit,
            "metrics": {
                name: (asdict(res) if res is not None else None) for name, res in self.results.items()
            },
            "notes": dict(self.notes),
        }


def _correlate(pairs_by_metric: dict[str, list[tuple[float, float]]], unit: str) -> CorrelationReport:
    report = CorrelationReport(unit=unit, results={})
    for name, pairs in pairs_by_metric.items():
        if len(pairs) < 3:
            report.results[name] = None
            report.notes[name] = f"only {len(pairs)} usable points"
            continue
        xs, ys = zip(*pairs)
        try:
            report.results[name] = pearson(xs, ys)
        except DegenerateInput as exc:
            report.results[name] = None
            report.notes[name] = str(exc)
    return report


def correlate_metrics_with_accuracy(rows: Sequence[MetricRow]) -> CorrelationReport:
    """Per-trace point-biserial correlation of each metric with correctness."""
    labeled = [r for r in rows if r.correct is not None]
    if len(labeled) < 3:
        raise DegenerateInput(f"need at least 3 labelled traces, got {len(labeled)}")
    if len({r.correct for r in labeled}) < 2:
        raise DegenerateInput("correctness labels are constant")
    pairs = {
        name: [(r.metric(name), 1.0 if r.correct else 0.0) for r in labeled if r.metric(name) is not None]
        for name in METRIC_NAMES
    }
    return _correlate(pairs, "trace")


def correlate_conditions(aggregates: Sequence[ConditionAggregate]) -> CorrelationReport:
    """Condition-level variant: group metric means against group accuracy."""
    usable = [a for a in aggregates if a.accuracy is not None]
    if len(usable) < 3:
        raise DegenerateInput(f"need at least 3 labelled conditions, got {len(usable)}")
    if len({a.accuracy for a in usable}) < 2:
        raise DegenerateInput("condition accuracies are constant")
    pairs = {
        name: [(a.means[name], a.accuracy) for a in usable if a.means[name] is not None]
        for name in METRIC_NAMES
    }
    return _correlate(pairs, "condition")


@dataclass(frozen=True)
class StepDistribution:
    group: str
    histogram: dict[int, int]
    cdf: list[tuple[int, float]]
    n: int


def distribution_group(row: MetricRow) -> str:
    if row.prompt_regime == PromptRegime.ZERO_SHOT.value:
        return "zero_shot"
    return f"{row.prompt_regime}_{row.shot_count}shot"


def step_count_distribution(rows: Sequence[MetricRow], group_key=distribution_group) -> dict[str, StepDistribution]:
    """Histogram and empirical CDF of step counts per group (models pooled)."""
    if not rows:
        raise ValueError("no rows")
    by_group: dict[str, list[int]] = defaultdict(list)
    for row in rows:
        by_group[group_key(row)].append(row.K)
    out = {}
    for name in sorted(by_group):
        ks = by_group[name]
        hist = dict(sorted(Counter(ks).items()))
        n = len(ks)
        running = 0
        cdf = []
        for k, c in hist.items():
            running += c
            cdf.append((k, running / n))
        out[name] = StepDistribution(group=name, histogram=hist, cdf=cdf, n=n)
    return out


# rendering


def _num(value, digits: int) -> str:
    return "–" if value is None else f"{value:.{digits}f}"


def render_markdown(
    aggregates: Sequence[ConditionAggregate],
    trace_corr: CorrelationReport | None,
    condition_corr: CorrelationReport | None,
    distributions: dict[str, StepDistribution],
    corr_notes: dict[str, str | None] | None = None,
) -> str:
    corr_notes = corr_notes or {}
    has_acc = any(a.accuracy is not None for a in aggregates)
    lines = ["# Reasoning graph report", "", "## Conditions", ""]
    head = ["Model", "Prompt Type"] + (["Acc (%)"] if has_acc else []) + [
        "ρ_E",
        "γ_B",
        "γ_C",
        "ℓ",
        "Mean Steps",
    ]
    lines.append("| " + " | ".join(head) + " |")
    lines.append("|" + "|".join(["---"] * 2 + ["---:"] * (len(head) - 2)) + "|")
    for a in aggregates:
        cells = [a.model_id, a.label]
        if has_acc:
            cells.append(_num(None if a.accuracy is None else 100 * a.accuracy, 1))
        cells += [_num(a.means[m], 3) for m in METRIC_NAMES]
        cells.append(_num(a.mean_steps, 1))
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("Traces per condition: " + ", ".join(f"{a.model_id} / {a.label}: {a.n_traces}" for a in aggregates))
    lines.append("")

    if not has_acc:
        lines.append("Correlation analysis: absent (no correctness labels).")
        lines.append("")
    else:
        sections = (
            ("trace level, point-biserial", trace_corr, "trace_level"),
            ("condition level", condition_corr, "condition_level"),
        )
        for title, rep, tag in sections:
            lines.append(f"## Correlation with accuracy ({title})")
            lines.append("")
            if rep is None:
                lines.append(f"Absent: {corr_notes.get(tag) or 'insufficient data'}.")
                lines.append("")
                continue
            lines.append("| Metric | r | p | n |")
            lines.append("|---|---:|---:|---:|")
            for name in METRIC_NAMES:
                res = rep.results.get(name)
                if res is None:
                    lines.append(f"| {METRIC_LABELS[name]} | – | – | – |")
                else:
                    p = "–" if res.p is None else f"{res.p:.3g}"
                    lines.append(f"| {METRIC_LABELS[name]} | {res.r:.3f} | {p} | {res.n} |")
            lines.append("")

    lines.append("## Step-count distributions")
    lines.append("")
    for name, dist in distributions.items():
        lines.append(f"- {name}: n={dist.n}, K range {min(dist.histogram)}–{max(dist.histogram)} (cdf_{name}.csv)")
    lines.append("")
    return "\n".join(lines)


def _aggregate_dict(a: ConditionAggregate) -> dict:
    return {
        "model_id": a.model_id,
        "prompt_regime": a.prompt_regime,
        "shot_count": a.shot_count,
        "n_traces": a.n_traces,
        "n_labeled": a.n_labeled,
        "accuracy": a.accuracy,
        "means": dict(a.means),
        "stds": dict(a.stds),
        "mean_steps": a.mean_steps,
        "mean_total_tokens": a.mean_total_tokens,
    }


TABLE_COLUMNS = (
    ["model_id", "prompt_regime", "shot_count", "n_traces", "n_labeled", "accuracy"]
    + [f"{m}_mean" for m in METRIC_NAMES]
    + [f"{m}_std" for m in METRIC_NAMES]
    + ["mean_steps", "mean_total_tokens"]
)


def _table_rows(aggregates):
    for a in aggregates:
        yield [
            a.model_id,
            a.prompt_regime,
            a.shot_count,
            a.n_traces,
            a.n_labeled,
            _fmt_opt(a.accuracy),
            *[_fmt_opt(a.means[m]) for m in METRIC_NAMES],
            *[_fmt_opt(a.stds[m]) for m in METRIC_NAMES],
            a.mean_steps,
            _fmt_opt(a.mean_total_tokens),
        ]


def _plot_spec(distributions) -> dict:
    return {
        "figures": [
            {
                "id": "step_count_cdf",
                "kind": "step",
                "x": "K",
                "y": "cdf",
                "series": [{"label": name, "file": f"cdf_{name}.csv"} for name in distributions],
            },
            {
                "id": "metrics_by_condition",
                "kind": "bar",
                "source": "table.csv",
                "x": ["model_id", "prompt_regime", "shot_count"],
                "y": [f"{m}_mean" for m in METRIC_NAMES],
                "error": [f"{m}_std" for m in METRIC_NAMES],
            },
        ]
    }


def build_report_document(aggregates, trace_corr, condition_corr, distributions, corr_notes=None) -> dict:
    corr_notes = corr_notes or {}
    return {
        "conditions": [_aggregate_dict(a) for a in aggregates],
        "correlations": {
            "trace_level": trace_corr.to_dict() if trace_corr else None,
            "condition_level": condition_corr.to_dict() if condition_corr else None,
            "notes": {
                "trace_level": corr_notes.get("trace_level"),
                "condition_level": corr_notes.get("condition_level"),
            },
        },
        "distributions": {
            name: {
                "n": d.n,
                "histogram": {str(k): c for k, c in d.histogram.items()},
                "cdf": [[k, f] for k, f in d.cdf],
            }
            for name, d in distributions.items()
        },
    }


REPORT_FORMATS = ("markdown-table", "csv", "json")


def render_report(
    aggregates: Sequence[ConditionAggregate],
    correlations: tuple[CorrelationReport | None, CorrelationReport | None],
    distributions: dict[str, StepDistribution],
    out_dir: str | Path,
    formats: Sequence[str] = REPORT_FORMATS,
    corr_notes: dict[str, str | None] | None = None,
) -> list[Path]:
    """Write the report bundle; returns the paths written.

    ``markdown-table`` writes report.md, ``csv`` writes table.csv and one
    cdf_<group>.csv per distribution, ``json`` writes report.json,
    correlations.json and plots.json.
    """
    unknown = set(formats) - set(REPORT_FORMATS)
    if unknown:
        raise ValueError(f"unknown report format(s): {sorted(unknown)}")
    trace_corr, condition_corr = correlations
    out = Path(out_dir)
    written: list[Path] = []

    def emit(name: str, text: str) -> None:
        path = out / name
        try:
            out.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise ReportIOError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    if "markdown-table" in formats:
        emit("report.md", render_markdown(aggregates, trace_corr, condition_corr, distributions, corr_notes))
    if "csv" in formats:
        emit("table.csv", _csv_text([TABLE_COLUMNS, *_table_rows(aggregates)]))
        for name, d in distributions.items():
            body = [("K", "count", "cdf")] + [(k, d.histogram[k], f) for k, f in d.cdf]
            emit(f"cdf_{name}.csv", _csv_text(body))
    if "json" in formats:
        doc = build_report_document(aggregates, trace_corr, condition_corr, distributions, corr_notes)
        emit("report.json", json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
        emit("correlations.json", json.dumps(doc["correlations"], indent=2, ensure_ascii=False) + "\n")
        emit("plots.json", json.dumps(_plot_spec(distributions), indent=2) + "\n")
    return written


def _csv_text(rows) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def build_report(rows: Sequence[MetricRow], out_dir: str | Path, formats=REPORT_FORMATS) -> list[Path]:
    """Aggregate, correlate and render; correlation failures become notes."""
    aggregates = aggregate(rows)
    notes: dict[str, str | None] = {"trace_level": None, "condition_level": None}
    try:
        trace_corr = correlate_metrics_with_accuracy(rows)
    except DegenerateInput as exc:
        trace_corr, notes["trace_level"] = None, str(exc)
    try:
        condition_corr = correlate_conditions(aggregates)
    except DegenerateInput as exc:
        condition_corr, notes["condition_level"] = None, str(exc)
    distributions = step_count_distribution(rows)
    return render_report(aggregates, (trace_corr, condition_corr), distributions, out_dir, formats, notes)
