"""Sentence embeddings behind a small provider interface.

``HashingEmbedder`` is the default: a signed hashed bag of lowercased
whitespace tokens, L2-normalised. It needs no network and is fully
deterministic, so every score downstream is reproducible.
``OpenAIEmbeddingProvider`` talks to any OpenAI-compatible ``/embeddings``
endpoint and is usually wrapped in ``CachedEmbedder``.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .errors import DimensionMismatch, ProviderError, ZeroVector


class Embedder(Protocol):
    provider_id: str
    model_id: str
    dim: int

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]: ...


def _check_texts(texts: Sequence[str]) -> None:
    if not texts:
        raise ValueError("texts must be nonempty")
    for t in texts:
        if not isinstance(t, str) or not t:
            raise ValueError("every text must be a nonempty string")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cosine of vectors with dims {a.shape} and {b.shape}")
    na = float(np.sqrt(np.dot(a, a)))
    nb = float(np.sqrt(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    value = float(np.dot(a, b)) / (na * nb)
    # rounding can push |value| a hair past 1
    return min(1.0, max(-1.0, value))


class HashingEmbedder:
    provider_id = "hashing"

    def __init__(self, dim: int = 256):
        if dim < 2:
            raise ValueError("dim must be at least 2")
        self.dim = dim
        self.model_id = f"hashing-bow-{dim}"

    def _bucket(self, token: str) -> tuple[int, float]:
        h = int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")
        return h % self.dim, 1.0 if (h >> 63) & 1 else -1.0

    def embed_one(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for token in text.lower().split():
            idx, sign = self._bucket(token)
            vec[idx] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            # no tokens, or all tokens cancelled out: reserved non-zero vector
            vec[0] = 1.0
            return vec
        return vec / norm

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        _check_texts(texts)
        return [self.embed_one(t) for t in texts]


class OpenAIEmbeddingProvider:
    """Client for an OpenAI-compatible embeddings endpoint."""

    provider_id = "openai-compatible"

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str | None = None,
        *,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        batch_size: int = 64,
        max_concurrency: int = 4,
        client=None,
        sleep=time.sleep,
    ):
        import httpx

        self.endpoint = endpoint.rstrip("/")
        self.model_id = model
        self.api_key_env = api_key_env
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.batch_size = batch_size
        self._client = client or httpx.Client(timeout=60.0)
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max_concurrency)
        self.dim: int | None = None

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise ProviderError(f"environment variable {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _request(self, batch: list[str]) -> list[list[float]]:
        import httpx

        attempts = 0
        while True:
            attempts += 1
            try:
                with self._slots:
                    resp = self._client.post(
                        f"{self.endpoint}/embeddings",
                        headers=self._headers(),
                        json={"model": self.model_id, "input": batch},
                    )
                if resp.status_code in (429, 500, 502, 503, 504):
                    raise ProviderError(f"HTTP {resp.status_code}", attempts, retryable=True)
                if resp.status_code >= 400:
                    raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}", attempts)
                data = resp.json()["data"]
                return [item["embedding"] for item in sorted(data, key=lambda d: d["index"])]
            except httpx.TransportError as exc:
                err = ProviderError(f"transport error: {exc}", attempts, retryable=True)
            except ProviderError as exc:
                err = exc
            except (KeyError, ValueError, TypeError) as exc:
                raise ProviderError(f"malformed embeddings response: {exc}", attempts) from None
            if not err.retryable or attempts > self.max_retries:
                err.attempts = attempts
                raise err
            self._sleep(self.backoff_base * 2 ** (attempts - 1))

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        _check_texts(texts)
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            vectors = self._request(batch)
            if len(vectors) != len(batch):
                raise ProviderError(f"expected {len(batch)} embeddings, got {len(vectors)}")
            for v in vectors:
                arr = np.asarray(v, dtype=float)
                if self.dim is None:
                    self.dim = arr.shape[0]
                if arr.ndim != 1 or arr.shape[0] != self.dim:
                    raise DimensionMismatch(f"provider returned dim {arr.shape} after {self.dim}")
                if not np.all(np.isfinite(arr)):
                    raise ProviderError("provider returned non-finite values")
                out.append(arr)
        return out


class CachedEmbedder:
    """Content-addressed disk cache in front of another embedder.

    Keys hash (provider id, model id, text); values are ``.npy`` files written
    via atomic rename, so concurrent writers of one key are harmless.
    """

    def __init__(self, inner: Embedder, cache_dir: str | Path):
        self.inner = inner
        self.cache_dir = Path(cache_dir)
        self.provider_id = inner.provider_id
        self.model_id = inner.model_id

    @property
    def dim(self):
        return self.inner.dim

    def key(self, text: str) -> str:
        payload = json.dumps([self.provider_id, self.model_id, text], ensure_ascii=False)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / f"{key}.npy"

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        _check_texts(texts)
        result: list[np.ndarray | None] = [None] * len(texts)
        missing: dict[str, list[int]] = {}
        for i, text in enumerate(texts):
            path = self._path(self.key(text))
            if path.exists():
                result[i] = np.load(path)
            else:
                missing.setdefault(text, []).append(i)
        if missing:
            fresh = self.inner.embed_texts(list(missing))
            for (text, idxs), vec in zip(missing.items(), fresh):
                self._store(self.key(text), vec)
                for i in idxs:
                    result[i] = vec
        return result  # type: ignore[return-value]

    def _store(self, key: str, vec: np.ndarray) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                np.save(fh, vec)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class MemoEmbedder:
    """Per-run in-memory memo so repeated step texts are embedded once."""

    def __init__(self, inner: Embedder):
        self.inner = inner
        self.provider_id = inner.provider_id
        self.model_id = inner.model_id
        self._memo: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def dim(self):
        return self.inner.dim

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        _check_texts(texts)
        with self._lock:
            todo = [t for t in dict.fromkeys(texts) if t not in self._memo]
        if todo:
            vecs = self.inner.embed_texts(todo)
            with self._lock:
                self._memo.update(zip(todo, vecs))
        with self._lock:
            return [self._memo[t] for t in texts]


def embedder_id(embedder) -> str:
    return f"{embedder.provider_id}:{embedder.model_id}"
