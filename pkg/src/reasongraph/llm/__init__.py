from .backends import (
    FixtureBackend,
    LiveBackend,
    PromptRequest,
    RecordingBackend,
    ScriptedBackend,
    fixture_key,
)
from .gateway import Gateway, Telemetry, TokenBucket
from .parsing import (
    LABELS,
    ClusteringResponse,
    SemanticsResponse,
    StepText,
    parse_clustering,
    parse_semantics,
)
from .prompts import render_clustering_prompt, render_semantics_prompt, step_pairs

__all__ = [
    "FixtureBackend",
    "LiveBackend",
    "PromptRequest",
    "RecordingBackend",
    "ScriptedBackend",
    "fixture_key",
    "Gateway",
    "Telemetry",
    "TokenBucket",
    "LABELS",
    "ClusteringResponse",
    "SemanticsResponse",
    "StepText",
    "parse_clustering",
    "parse_semantics",
    "render_clustering_prompt",
    "render_semantics_prompt",
    "step_pairs",
]
