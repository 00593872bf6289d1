"""Loading trace corpora and splitting raw CoT text into reasoning units."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import DuplicateTraceId, EmptyTrace, ParseError

DEFAULT_DELIMITER = "\n\n"


class PromptRegime(str, Enum):
    ZERO_SHOT = "zero_shot"
    MINIMAL = "minimal"
    CONCISE = "concise"
    EXPLANATORY = "explanatory"


def count_tokens(text: str) -> int:
    """Whitespace token count, the length measure used everywhere in the pipeline."""
    return len(text.split())


@dataclass(frozen=True)
class ReasoningTrace:
    trace_id: str
    raw_text: str
    model_id: str
    prompt_regime: PromptRegime
    shot_count: int
    task_id: str
    correct: bool | None = None
    token_count: int = -1

    def __post_init__(self):
        if self.token_count < 0:
            object.__setattr__(self, "token_count", count_tokens(self.raw_text))
        if not isinstance(self.prompt_regime, PromptRegime):
            object.__setattr__(self, "prompt_regime", PromptRegime(self.prompt_regime))
        if self.shot_count < 0:
            raise ValueError("shot_count must be nonnegative")
        if (self.shot_count == 0) != (self.prompt_regime is PromptRegime.ZERO_SHOT):
            raise ValueError("shot_count must be 0 exactly when prompt_regime is zero_shot")

    def to_record(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "raw_text": self.raw_text,
            "model_id": self.model_id,
            "prompt_regime": self.prompt_regime.value,
            "shot_count": self.shot_count,
            "correct": self.correct,
            "task_id": self.task_id,
            "token_count": self.token_count,
        }


@dataclass(frozen=True)
class ReasoningUnit:
    index: int
    text: str
    token_count: int


def segment_units(trace: ReasoningTrace | str, delimiter: str = DEFAULT_DELIMITER) -> list[ReasoningUnit]:
    """Split a trace at ``delimiter`` into trimmed, nonempty units.

    Runs of consecutive delimiters collapse into one boundary because the
    empty segments between them are dropped.
    """
    if not delimiter:
        raise ValueError("delimiter must be nonempty")
    text = trace if isinstance(trace, str) else trace.raw_text
    pieces = [p.strip() for p in text.split(delimiter)]
    units = [
        ReasoningUnit(index=i, text=p, token_count=count_tokens(p))
        for i, p in enumerate(p for p in pieces if p)
    ]
    if not units:
        raise EmptyTrace("trace yields no nonempty reasoning units")
    return units


_REQUIRED = ("trace_id", "raw_text", "model_id", "prompt_regime", "shot_count", "task_id")


def parse_trace_record(obj: object, line: int | None = None) -> ReasoningTrace:
    if not isinstance(obj, dict):
        raise ParseError("record must be a JSON object", line)
    missing = [k for k in _REQUIRED if k not in obj]
    if missing:
        raise ParseError(f"missing field(s): {', '.join(missing)}", line)
    unknown = set(obj) - set(_REQUIRED) - {"correct", "token_count"}
    if unknown:
        raise ParseError(f"unknown field(s): {', '.join(sorted(unknown))}", line)
    for key in ("trace_id", "raw_text", "model_id", "task_id"):
        if not isinstance(obj[key], str):
            raise ParseError(f"{key} must be a string", line)
    if isinstance(obj["shot_count"], bool) or not isinstance(obj["shot_count"], int):
        raise ParseError("shot_count must be an integer", line)
    correct = obj.get("correct")
    if correct is not None and not isinstance(correct, bool):
        raise ParseError("correct must be true, false or null", line)
    try:
        regime = PromptRegime(obj["prompt_regime"])
    except ValueError:
        raise ParseError(f"unknown prompt_regime {obj['prompt_regime']!r}", line) from None

    expected_tokens = count_tokens(obj["raw_text"])
    token_count = obj.get("token_count")
    if token_count is not None and token_count != expected_tokens:
        raise ParseError(
            f"token_count {token_count} disagrees with whitespace token count {expected_tokens}", line
        )
    try:
        return ReasoningTrace(
            trace_id=obj["trace_id"],
            raw_text=obj["raw_text"],
            model_id=obj["model_id"],
            prompt_regime=regime,
            shot_count=obj["shot_count"],
            task_id=obj["task_id"],
            correct=correct,
            token_count=expected_tokens,
        )
    except ValueError as exc:
        raise ParseError(str(exc), line) from None


def load_corpus(path: str | Path, format: str = "jsonl") -> list[ReasoningTrace]:
    """Read a JSON-lines trace corpus. Blank lines are skipped."""
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format {format!r}")
    traces: list[ReasoningTrace] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
            trace = parse_trace_record(obj, lineno)
            if trace.trace_id in seen:
                raise DuplicateTraceId(trace.trace_id, lineno)
            seen.add(trace.trace_id)
            traces.append(trace)
    return traces


def write_corpus(traces, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in traces:
            fh.write(json.dumps(t.to_record(), ensure_ascii=False) + "\n")
