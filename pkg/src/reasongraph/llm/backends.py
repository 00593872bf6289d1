"""LLM backends: live HTTP, recorded fixtures, and scripted mocks."""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

from ..errors import BackendUnavailable, ContextOverflow, RateLimited

TEMPLATE_IDS = ("clustering", "semantics")


@dataclass(frozen=True)
class PromptRequest:
    template_id: str
    rendered_prompt: str
    temperature: float
    seed: int | None = None
    backend_id: str = ""

    def __post_init__(self):
        if self.template_id not in TEMPLATE_IDS:
            raise ValueError(f"unknown template_id {self.template_id!r}")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")


class Backend(Protocol):
    backend_id: str

    def complete(self, request: PromptRequest) -> str: ...


def fixture_key(request: PromptRequest) -> str:
    """Hash of (template, seed, prompt); the temperature is derived from the same seed stream."""
    h = hashlib.sha256()
    h.update(request.template_id.encode())
    h.update(b"\0")
    h.update(str(request.seed).encode())
    h.update(b"\0")
    h.update(request.rendered_prompt.encode("utf-8"))
    return h.hexdigest()[:32]


def fixture_path(root: Path, request: PromptRequest) -> Path:
    return Path(root) / request.template_id / f"{fixture_key(request)}.txt"


class FixtureBackend:
    """Replays responses recorded under ``root/<template_id>/<hash>.txt``."""

    backend_id = "fixture"

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def complete(self, request: PromptRequest) -> str:
        path = fixture_path(self.root, request)
        try:
            return path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise BackendUnavailable(
                f"missing fixture {path.relative_to(self.root)} for {request.template_id} request",
                transient=False,
            ) from None


class RecordingBackend:
    """Passes requests to ``inner`` and stores each response as a fixture."""

    def __init__(self, inner: Backend, root: str | Path):
        self.inner = inner
        self.root = Path(root)
        self.backend_id = inner.backend_id

    def complete(self, request: PromptRequest) -> str:
        text = self.inner.complete(request)
        path = fixture_path(self.root, request)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
        return text


class ScriptedBackend:
    """Mock backend whose responses come from a rule ``request -> str``.

    The rule may raise backend errors to inject faults.
    """

    def __init__(self, rule: Callable[[PromptRequest], str], backend_id: str = "mock"):
        self.rule = rule
        self.backend_id = backend_id
        self.calls = 0

    def complete(self, request: PromptRequest) -> str:
        self.calls += 1
        return self.rule(request)


class LiveBackend:
    """OpenAI-compatible ``/chat/completions`` client."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str | None = None,
        *,
        timeout: float = 300.0,
        client=None,
    ):
        import httpx

        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.backend_id = f"live:{model}"
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, request: PromptRequest) -> str:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise BackendUnavailable(f"environment variable {self.api_key_env} is not set", transient=False)
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.rendered_prompt}],
            "temperature": request.temperature,
        }
        if request.seed is not None:
            body["seed"] = request.seed
        try:
            resp = self._client.post(f"{self.endpoint}/chat/completions", headers=headers, json=body)
        except httpx.TransportError as exc:
            raise BackendUnavailable(f"transport error: {exc}") from None
        if resp.status_code == 429:
            retry_after = resp.headers.get("retry-after")
            raise RateLimited(retry_after=float(retry_after) if retry_after else None)
        if resp.status_code >= 500:
            raise BackendUnavailable(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            detail = resp.text[:500]
            if "context" in detail.lower() and ("length" in detail.lower() or "window" in detail.lower()):
                raise ContextOverflow(detail)
            raise BackendUnavailable(f"HTTP {resp.status_code}: {detail}", transient=False)
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError, TypeError) as exc:
            raise BackendUnavailable(f"unexpected response shape: {exc}", transient=False) from None
