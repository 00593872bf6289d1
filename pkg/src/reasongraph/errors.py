"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class ReasonGraphError(Exception):
    """Base class for all library errors."""


# trace ingest


class EmptyTrace(ReasonGraphError):
    pass


class ParseError(ReasonGraphError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateTraceId(ParseError):
    def __init__(self, trace_id: str, line: int):
        self.trace_id = trace_id
        super().__init__(f"duplicate trace_id {trace_id!r}", line)


# embeddings


class ProviderError(ReasonGraphError):
    def __init__(self, message: str, attempts: int = 1, retryable: bool = False):
        super().__init__(message)
        self.attempts = attempts
        self.retryable = retryable


class DimensionMismatch(ReasonGraphError):
    pass


class ZeroVector(ReasonGraphError):
    pass


# llm gateway


class BackendError(ReasonGraphError):
    """Transport-level failure. ``transient`` errors are retried by the gateway."""

    transient = False


class BackendUnavailable(BackendError):
    def __init__(self, message: str, transient: bool = True, attempts: int = 1):
        super().__init__(message)
        self.transient = transient
        self.attempts = attempts


class RateLimited(BackendError):
    transient = True

    def __init__(self, message: str = "rate limited", retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class ContextOverflow(BackendError):
    pass


class TooFewSteps(ReasonGraphError):
    pass


class MalformedOutput(ReasonGraphError):
    """LLM output that cannot be used; the caller rejects and resamples."""


class AlignmentFailure(MalformedOutput):
    pass


# clustering / estimation


class NoValidCandidate(ReasonGraphError):
    pass


class KMismatch(ReasonGraphError):
    pass


class SamplingExhausted(ReasonGraphError):
    pass


# graph / analysis


class InvalidGraph(ReasonGraphError):
    pass


class UndefinedMetric(ReasonGraphError):
    pass


class DegenerateInput(ReasonGraphError):
    pass


class ReportIOError(ReasonGraphError, OSError):
    pass


class ConfigError(ReasonGraphError):
    pass
