"""A lexical heuristic standing in for a real LLM.

Clustering merges consecutive units with overlapping vocabulary; semantics
labels pairs by vocabulary overlap, with contradiction more likely when the
later step carries a self-correction cue. Randomness comes from the request
seed and is scaled by temperature, so responses vary across samples but replay
exactly.
"""

from __future__ import annotations

import json
import re

import numpy as np

from .backends import PromptRequest, ScriptedBackend
from .prompts import extract_payload

_STOP = frozenset(
    "a an the and or of to in on for is are was were be this that it its with as by at from "
    "we i so if then than which what can not no but also let me us our their there these those "
    "has have had do does did will would should could just now".split()
)
_CORRECTION_CUES = frozenset(
    "wait however actually mistake wrong incorrect hmm re-check recheck instead but".split()
)
_WORD = re.compile(r"[a-z0-9]+(?:[-'][a-z0-9]+)*")


def _words(text: str) -> set[str]:
    return {w for w in _WORD.findall(text.lower()) if w not in _STOP and len(w) > 2}


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def _title(text: str, max_words: int = 5) -> str:
    words = _WORD.findall(text.lower())
    keep = [w for w in words if w not in _STOP and not w[0].isdigit()][:max_words]
    keep = keep or words[:max_words] or ["step"]
    return " ".join(w.capitalize() for w in keep)


def _rng(request: PromptRequest) -> np.random.Generator:
    tag = 0 if request.template_id == "clustering" else 1
    return np.random.default_rng([request.seed or 0, tag])


def mock_clustering(request: PromptRequest) -> str:
    units = list(extract_payload(request.rendered_prompt).values())
    rng = _rng(request)
    threshold = 0.04 + 0.3 * rng.random() * request.temperature
    cap = int(rng.integers(2, 6))
    groups: list[list[str]] = [[units[0]]]
    vocab = _words(units[0])
    for text in units[1:]:
        words = _words(text)
        if _jaccard(words, vocab) < threshold or len(groups[-1]) >= cap:
            groups.append([text])
            vocab = words
        else:
            groups[-1].append(text)
            vocab |= words
    out = {
        f"s{i}": {"title": _title(g[0]), "content": "\n\n".join(g)}
        for i, g in enumerate(groups)
    }
    return json.dumps(out, ensure_ascii=False, indent=2)


def mock_semantics(request: PromptRequest) -> str:
    steps = list(extract_payload(request.rendered_prompt).values())
    rng = _rng(request)
    vocab = [_words(s["title"] + " " + s["content"]) for s in steps]
    cues = [bool(_CORRECTION_CUES & set(_WORD.findall(s["content"].lower()))) for s in steps]
    labels = {}
    for i in range(len(steps)):
        for j in range(i + 1, len(steps)):
            overlap = _jaccard(vocab[i], vocab[j])
            proximity = 1.0 / (j - i)
            strength = min(0.95, 3.0 * overlap + 0.45 * proximity)
            p_contra = 0.75 * strength if cues[j] else 0.05 * strength
            p_support = strength - p_contra
            noise = request.temperature * 0.2
            p_support = min(1.0, max(0.0, p_support + noise * (rng.random() - 0.5)))
            p_contra = min(1.0 - p_support, p_contra)
            u = rng.random()
            if u < p_support:
                label = "support"
            elif u < p_support + p_contra:
                label = "contradict"
            else:
                label = "independent"
            labels[f"({i},{j})"] = label
    return json.dumps(labels, indent=2)


def heuristic_rule(request: PromptRequest) -> str:
    if request.template_id == "clustering":
        return mock_clustering(request)
    return mock_semantics(request)


def heuristic_backend() -> ScriptedBackend:
    return ScriptedBackend(heuristic_rule, backend_id="mock:heuristic")
