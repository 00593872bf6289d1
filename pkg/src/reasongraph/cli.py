"""``reasongraph`` command line.

Exit codes: 0 success, 1 pipeline failure, 2 usage or input-format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analysis import REPORT_FORMATS, build_report, read_metrics_csv, write_metrics_csv
from .config import BACKENDS, RunConfig, load_config
from .errors import (
    ConfigError,
    DuplicateTraceId,
    EmptyTrace,
    InvalidGraph,
    ParseError,
    ReasonGraphError,
)
from .graph import validate_graph
from .graphio import dumps_json, read_graph_json
from .pipeline import metric_row, run_build, safe_name
from .traces import load_corpus, segment_units

log = logging.getLogger("reasongraph")

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2
DEMO_DIR = Path(__file__).parent / "demo"


class UsageError(Exception):
    """Bad input or arguments; maps to exit code 2."""


def _require_file(path: str | Path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {p}")
    return p


def _config(args) -> RunConfig:
    cfg = load_config(_require_file(args.config)) if args.config else RunConfig()
    overrides = {
        "seed": args.seed,
        "parallel": args.parallel,
        "out": args.out,
        "llm_backend": args.backend,
        "llm_fixture_dir": getattr(args, "fixtures", None),
        "llm_record_dir": getattr(args, "record", None),
    }
    try:
        return cfg.with_overrides(**overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _inputs(args, cfg: RunConfig) -> list[Path]:
    paths = list(getattr(args, "inputs", None) or cfg.inputs)
    if not paths:
        raise UsageError("no input files given (pass them as arguments or set 'inputs' in the config)")
    return [_require_file(p) for p in paths]


def _load_traces(paths):
    traces, seen = [], set()
    for path in paths:
        try:
            batch = load_corpus(path)
        except ParseError as exc:
            raise ParseError(f"{path}: {exc}") from None
        for t in batch:
            if t.trace_id in seen:
                raise DuplicateTraceId(t.trace_id, None)
            seen.add(t.trace_id)
        traces.extend(batch)
    return traces


def _out_dir(cfg: RunConfig, default: str) -> Path:
    out = Path(cfg.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_segment(args) -> int:
    cfg = _config(args)
    traces = _load_traces(_inputs(args, cfg))
    out = _out_dir(cfg, "out")
    units_dir = out / "units"
    units_dir.mkdir(exist_ok=True)
    warnings = []
    for trace in traces:
        try:
            units = segment_units(trace, cfg.delimiter)
        except EmptyTrace as exc:
            log.warning("skipping %s: %s", trace.trace_id, exc)
            warnings.append({"trace_id": trace.trace_id, "warning": "EmptyTrace", "message": str(exc)})
            continue
        doc = {
            "trace_id": trace.trace_id,
            "delimiter": cfg.delimiter,
            "units": [{"index": u.index, "text": u.text, "token_count": u.token_count} for u in units],
        }
        (units_dir / f"{safe_name(trace.trace_id)}.json").write_text(dumps_json(doc), encoding="utf-8")
    warn_path = out / "warnings.jsonl"
    if warnings:
        warn_path.write_text("".join(json.dumps(w) + "\n" for w in warnings), encoding="utf-8")
    elif warn_path.exists():
        warn_path.unlink()
    print(f"segmented {len(traces) - len(warnings)} trace(s), skipped {len(warnings)} -> {units_dir}")
    return EXIT_OK


def cmd_build_graph(args) -> int:
    cfg = _config(args)
    traces = _load_traces(_inputs(args, cfg))
    out = _out_dir(cfg, "out")
    summary = run_build(traces, cfg, out)
    print(f"built {len(summary.succeeded)} graph(s), {len(summary.failed)} failed -> {out / 'graphs'}")
    if summary.failed:
        print(f"failures quarantined in {out / 'errors.jsonl'}", file=sys.stderr)
    return EXIT_FAILURE if summary.all_failed else EXIT_OK


def _graph_files(paths) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(p.glob("*.json")))
        else:
            files.append(_require_file(p))
    if not files:
        raise UsageError("no graph files found")
    return files


def _metric_rows(files):
    rows = []
    for path in files:
        try:
            graph = read_graph_json(path)
            validate_graph(graph)
        except InvalidGraph as exc:
            raise InvalidGraph(f"{path}: {exc}") from None
        rows.append(metric_row(graph))
    return rows


def cmd_metrics(args) -> int:
    rows = _metric_rows(_graph_files(args.graphs))
    out = _out_dir(_config(args), "out")
    path = out / "metrics.csv"
    write_metrics_csv(rows, path)
    print(f"wrote {len(rows)} row(s) -> {path}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = read_metrics_csv(_require_file(args.metrics))
    out = _out_dir(_config(args), "report")
    written = build_report(rows, out, args.format or REPORT_FORMATS)
    print(f"wrote {len(written)} file(s) -> {out}")
    return EXIT_OK


def cmd_demo(args) -> int:
    """Shipped corpus, recorded fixtures: build, measure, report."""
    if args.config is None:
        args.config = str(DEMO_DIR / "config.yaml")
    cfg = _config(args)
    traces = _load_traces([DEMO_DIR / "corpus.jsonl"])
    out = _out_dir(cfg, "demo-out")
    summary = run_build(traces, cfg, out)
    if summary.all_failed:
        print("demo: every trace failed; see errors.jsonl", file=sys.stderr)
        return EXIT_FAILURE
    rows = _metric_rows(summary.graph_paths)
    write_metrics_csv(rows, out / "metrics.csv")
    build_report(rows, out / "report")
    print(f"demo: {len(rows)} graph(s), metrics.csv and report/ -> {out}")
    return EXIT_OK if not summary.failed else EXIT_FAILURE


def cmd_validate(args) -> int:
    from .validate import format_table, run_checks

    results = run_checks()
    print(format_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="run seed (overrides config)")
    common.add_argument("--backend", choices=BACKENDS, help="LLM backend (overrides config)")
    common.add_argument("--parallel", type=int, help="traces processed concurrently")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="reasongraph", description="Turn chain-of-thought traces into reasoning graphs."
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("segment", parents=[common], help="split traces into reasoning units")
    p.add_argument("inputs", nargs="*", help="JSONL trace corpora")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("build-graph", parents=[common], help="traces -> graph JSON, DOT and audit")
    p.add_argument("inputs", nargs="*", help="JSONL trace corpora")
    p.add_argument("--fixtures", help="fixture directory for the fixture backend")
    p.add_argument("--record", help="record every LLM response into this directory")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("metrics", parents=[common], help="graph JSON files -> metrics.csv")
    p.add_argument("graphs", nargs="+", help="graph JSON files or directories")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("report", parents=[common], help="metrics.csv -> report bundle")
    p.add_argument("metrics", help="metrics.csv")
    p.add_argument("--format", action="append", choices=REPORT_FORMATS, help="repeatable; default all")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("demo", parents=[common], help="run the shipped fixture corpus end to end")
    p.set_defaults(func=cmd_demo)

    # hidden: oracle battery
    p = sub.add_parser("validate", parents=[common])
    p.set_defaults(func=cmd_validate)
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "validate"]
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ParseError, DuplicateTraceId, ConfigError, InvalidGraph) as exc:
        print(f"reasongraph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ReasonGraphError, OSError) as exc:
        print(f"reasongraph: failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
