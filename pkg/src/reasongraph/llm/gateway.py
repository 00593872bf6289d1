"""Request gateway: bounded retries, rate limiting, concurrency cap, telemetry."""

from __future__ import annotations

import threading
import time
from collections import defaultdict
from dataclasses import dataclass

from ..errors import BackendError, BackendUnavailable, ContextOverflow, RateLimited
from .backends import Backend, PromptRequest


class TokenBucket:
    def __init__(self, rate: float, capacity: float | None = None, clock=time.monotonic, sleep=time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity if capacity is not None else max(1.0, rate)
        self._tokens = self.capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """Take one token, blocking until available. Returns the time waited."""
        waited = 0.0
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return waited
                delay = (1.0 - self._tokens) / self.rate
            self._sleep(delay)
            waited += delay


@dataclass
class TemplateStats:
    requests: int = 0
    retries: int = 0
    failures: int = 0
    accepted: int = 0
    rejected: int = 0

    def as_dict(self) -> dict:
        seen = self.accepted + self.rejected
        return {
            "requests": self.requests,
            "retries": self.retries,
            "failures": self.failures,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "acceptance_rate": self.accepted / seen if seen else None,
        }


class Telemetry:
    def __init__(self):
        self._stats: dict[str, TemplateStats] = defaultdict(TemplateStats)
        self._lock = threading.Lock()

    def bump(self, template_id: str, field: str, n: int = 1) -> None:
        with self._lock:
            stats = self._stats[template_id]
            setattr(stats, field, getattr(stats, field) + n)

    def record_accepted(self, template_id: str) -> None:
        self.bump(template_id, "accepted")

    def record_rejected(self, template_id: str) -> None:
        self.bump(template_id, "rejected")

    @property
    def retry_count(self) -> int:
        with self._lock:
            return sum(s.retries for s in self._stats.values())

    def snapshot(self) -> dict:
        with self._lock:
            return {k: self._stats[k].as_dict() for k in sorted(self._stats)}


class Gateway:
    """Front door for all LLM traffic.

    Transport failures and rate limits are retried up to ``max_retries`` times
    with exponential backoff (``backoff_base``, doubling). Context overflow and
    non-transient errors propagate immediately. Malformed *content* is not
    this layer's concern: callers resample at a fresh temperature.
    """

    def __init__(
        self,
        backend: Backend,
        *,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        max_concurrency: int = 4,
        rate_per_second: float | None = None,
        max_prompt_chars: int | None = None,
        sleep=time.sleep,
    ):
        self.backend = backend
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.max_concurrency = max_concurrency
        self.max_prompt_chars = max_prompt_chars
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_concurrency)
        self._bucket = TokenBucket(rate_per_second, sleep=sleep) if rate_per_second else None
        self.telemetry = Telemetry()

    @property
    def backend_id(self) -> str:
        return self.backend.backend_id

    def complete(self, request: PromptRequest) -> str:
        if self.max_prompt_chars is not None and len(request.rendered_prompt) > self.max_prompt_chars:
            raise ContextOverflow(
                f"prompt of {len(request.rendered_prompt)} chars exceeds limit {self.max_prompt_chars}"
            )
        tid = request.template_id
        self.telemetry.bump(tid, "requests")
        attempt = 0
        while True:
            if self._bucket is not None:
                self._bucket.acquire()
            try:
                with self._slots:
                    return self.backend.complete(request)
            except BackendError as exc:
                if not exc.transient:
                    self.telemetry.bump(tid, "failures")
                    raise
                if attempt >= self.max_retries:
                    self.telemetry.bump(tid, "failures")
                    raise BackendUnavailable(
                        f"{self.backend_id} failed after {attempt + 1} attempts: {exc}",
                        transient=False,
                        attempts=attempt + 1,
                    ) from exc
                delay = self.backoff_base * 2**attempt
                if isinstance(exc, RateLimited) and exc.retry_after:
                    delay = max(delay, exc.retry_after)
                attempt += 1
                self.telemetry.bump(tid, "retries")
                self._sleep(delay)
