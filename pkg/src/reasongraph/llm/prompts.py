"""Prompt templates for step clustering and pairwise step semantics.

Units and steps are injected as a JSON document inside a ```json fence, so
quotes, braces and newlines in the reasoning text are escaped and the prompt
stays unambiguous. ``extract_payload`` recovers that document, which the mock
backends rely on.
"""

from __future__ import annotations

import json
import re
from typing import Mapping, Sequence

from ..errors import TooFewSteps
from ..traces import ReasoningUnit

CLUSTERING_TEMPLATE = """\
You are given a sequence of reasoning units, each representing a contiguous fragment \
from a language model's chain-of-thought (CoT) output. These units have typically been \
segmented using raw delimiters and may be overly fine-grained or fragmented for \
downstream analysis.

Reasoning units (JSON object mapping unit id to unit text, in order):
```json
{payload}
```

Your task is to cluster consecutive reasoning units that are semantically connected, \
producing a concise and coherent set of higher-level reasoning steps. Each reasoning step should:
- Combine all units that express a single coherent sub-task, logical inference, or closely \
related set of thoughts. Aim to group together units that collectively advance the same \
intermediate goal or logical point.
- Ensure that each resulting reasoning step contains enough self-contained context to be \
analyzed independently, but avoid excessive merging that would result in overly broad or \
incoherent segments.
- Maintain the original sequential order of reasoning.
- Avoid splitting apart reasoning units that clearly belong to the same sub-problem or \
share strong contextual dependency.
- Use concise yet informative titles for each reasoning step, reflecting its main logical \
function or purpose (e.g., "Restate Problem", "Recall Known Facts", "Solve Equation", \
"Synthesize Solution", etc.).

Expected Output Format:
```
{{
  "s0": {{"title": "...", "content": "..."}},
  "s1": {{"title": "...", "content": "..."}},
  ...
}}
```
where each "sX" key indexes an ordered reasoning step, with an appropriate "title" \
summarizing its logical purpose and "content" containing the merged, cleaned reasoning text.

Please ensure the output is structured, coherent, and well-suited for subsequent semantic \
analysis or graph-based modeling of the reasoning process.
"""

SEMANTICS_TEMPLATE = """\
Given an ordered sequence of {k} reasoning steps, each representing a semantically \
meaningful stage in a language model's chain-of-thought output, your task is to \
systematically assess the semantic relationship between each pair of reasoning steps.

Reasoning steps (JSON object mapping step id to title and content, in order):
```json
{payload}
```

For every ordered pair (i, j) with 0 <= i < j <= {last}, your task is to decide whether step i:
- supports step j (i.e., provides information, justification, intermediate results, or \
logical basis for step j),
- contradicts step j (i.e., conflicts with, undermines, or provides an incompatible claim \
or result relative to step j), or
- is independent of step j (i.e., is neither directly supportive nor contradictory; the \
steps are unrelated in logical content).

When making your decision, consider both explicit logical connections (e.g., mathematical \
derivation, use of previous results, direct contradiction) and more implicit semantic \
dependencies (e.g., fact recall enabling downstream calculations).

Pairs to label: {pairs}

Expected Output Format:
```
{{
  "(0,1)": "support",
  "(0,2)": "independent",
  "(1,2)": "contradict",
  ...
}}
```
where each key "(i,j)" denotes an ordered pair of step indices (with i<j), and each value \
is one of "support", "contradict", or "independent".

For each pair, provide only one label reflecting the most salient semantic relationship. \
If the relationship is unclear or borderline, default to "independent" unless clear \
evidence suggests support or contradiction.

Ensure that all pairs (i, j) with 0 <= i < j <= {last} are covered in the output, and that \
your decisions are consistent and justifiable based on the provided reasoning steps.
"""


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2)


def render_clustering_prompt(units: Sequence[ReasoningUnit]) -> str:
    if not units:
        raise ValueError("units must be nonempty")
    payload = {f"u{i}": u.text for i, u in enumerate(units)}
    return CLUSTERING_TEMPLATE.format(payload=_dump(payload))


def _step_fields(step) -> tuple[str, str]:
    if isinstance(step, Mapping):
        return step["title"], step["content"]
    return step.title, step.content


def step_pairs(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def render_semantics_prompt(steps: Sequence) -> str:
    k = len(steps)
    if k < 2:
        raise TooFewSteps(f"semantics prompt needs at least 2 steps, got {k}")
    payload = {}
    for i, step in enumerate(steps):
        title, content = _step_fields(step)
        payload[f"s{i}"] = {"title": title, "content": content}
    pairs = ", ".join(f"({i},{j})" for i, j in step_pairs(k))
    return SEMANTICS_TEMPLATE.format(k=k, last=k - 1, payload=_dump(payload), pairs=pairs)


_PAYLOAD_RE = re.compile(r"```json\n(.*?)\n```", re.DOTALL)


def extract_payload(prompt: str) -> dict:
    """Return the JSON document injected by one of the render functions."""
    match = _PAYLOAD_RE.search(prompt)
    if match is None:
        raise ValueError("prompt carries no JSON payload")
    return json.loads(match.group(1))
