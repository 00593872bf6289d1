"""Validation of structured LLM outputs.

Anything unusable raises ``MalformedOutput``; callers treat that as a rejected
sample and draw a fresh one rather than retrying the same request.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from ..errors import MalformedOutput
from .prompts import step_pairs

LABELS = {"support": 1, "contradict": -1, "independent": 0}
LABEL_NAMES = {v: k for k, v in LABELS.items()}
MIN_PAIR_COVERAGE = 0.9


@dataclass(frozen=True)
class StepText:
    title: str
    content: str


@dataclass(frozen=True)
class ClusteringResponse:
    steps: list[StepText]
    raw: str = field(repr=False, default="")


@dataclass(frozen=True)
class SemanticsResponse:
    k: int
    labels: dict[tuple[int, int], int]
    raw: str = field(repr=False, default="")
    imputed: int = 0


def _reject_duplicates(pairs):
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise MalformedOutput(f"duplicate key {key!r}")
        obj[key] = value
    return obj


def extract_json_object(raw: str) -> dict:
    """Decode the first top-level JSON object in ``raw``.

    Tolerates prose or code fences around the object, which chat models add
    freely.
    """
    if not raw or not raw.strip():
        raise MalformedOutput("empty response")
    decoder = json.JSONDecoder(object_pairs_hook=_reject_duplicates)
    start = raw.find("{")
    while start != -1:
        try:
            obj, _ = decoder.raw_decode(raw, start)
        except json.JSONDecodeError:
            start = raw.find("{", start + 1)
            continue
        if isinstance(obj, dict):
            return obj
        start = raw.find("{", start + 1)
    raise MalformedOutput("no JSON object found in response")


_STEP_KEY = re.compile(r"^[sS](\d+)$")


def parse_clustering(raw: str, m: int) -> ClusteringResponse:
    obj = extract_json_object(raw)
    if not obj:
        raise MalformedOutput("clustering response has no steps")
    steps = []
    for expected, (key, value) in enumerate(obj.items()):
        match = _STEP_KEY.match(key.strip())
        if match is None or int(match.group(1)) != expected:
            raise MalformedOutput(f"expected key s{expected}, got {key!r}")
        if not isinstance(value, dict):
            raise MalformedOutput(f"{key} is not an object")
        title, content = value.get("title"), value.get("content")
        if not isinstance(content, str) or not content.strip():
            raise MalformedOutput(f"{key} has missing or empty content")
        if not isinstance(title, str) or not title.strip():
            raise MalformedOutput(f"{key} has missing or empty title")
        steps.append(StepText(title=title.strip(), content=content))
    if len(steps) > m:
        raise MalformedOutput(f"{len(steps)} steps returned for only {m} units")
    return ClusteringResponse(steps=steps, raw=raw)


_PAIR_KEY = re.compile(r"^\(?\s*[sS]?(\d+)\s*,\s*[sS]?(\d+)\s*\)?$")


def parse_semantics(raw: str, k: int) -> SemanticsResponse:
    """Parse a pair -> label map for ``k`` steps.

    Keys outside the upper triangle are ignored. Missing pairs are imputed as
    independent when at least 90% of the required pairs are labelled.
    """
    if k < 2:
        raise ValueError("semantics parsing needs k >= 2")
    obj = extract_json_object(raw)
    labels: dict[tuple[int, int], int] = {}
    for key, value in obj.items():
        match = _PAIR_KEY.match(key.strip())
        if match is None:
            raise MalformedOutput(f"unrecognised pair key {key!r}")
        i, j = int(match.group(1)), int(match.group(2))
        if not isinstance(value, str) or value.strip().lower() not in LABELS:
            raise MalformedOutput(f"label {value!r} for {key!r} is not support/contradict/independent")
        if not (0 <= i < j < k):
            continue
        if (i, j) in labels:
            raise MalformedOutput(f"pair ({i},{j}) labelled twice")
        labels[(i, j)] = LABELS[value.strip().lower()]

    required = step_pairs(k)
    covered = sum(1 for p in required if p in labels)
    if covered < MIN_PAIR_COVERAGE * len(required) - 1e-12:
        raise MalformedOutput(f"only {covered} of {len(required)} pairs labelled")
    imputed = 0
    for p in required:
        if p not in labels:
            labels[p] = 0
            imputed += 1
    ordered = {p: labels[p] for p in required}
    return SemanticsResponse(k=k, labels=ordered, raw=raw, imputed=imputed)
