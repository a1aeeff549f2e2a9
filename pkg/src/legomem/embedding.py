"""Embedding providers and similarity math.

Two providers ship: :class:`HashEmbedder`, a deterministic offline bag-of-tokens
embedder used by tests and desk-scale runs, and :class:`RemoteEmbedder`, which
talks to a generic JSON-over-HTTP embeddings endpoint. Both return unit-norm,
read-only ``float64`` vectors and cache per distinct text.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from typing import Callable, Sequence

import httpx
import numpy as np

from legomem.errors import DimensionMismatch, EmptyText, ProviderUnavailable, ZeroVector

logger = logging.getLogger(__name__)

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1
_TOKEN = re.compile(r"[^\W_]+")


def fnv1a_64(data: bytes) -> int:
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def _freeze(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    vec.setflags(write=False)
    return vec


def normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return vec / norm


class EmbeddingProvider:
    """Base provider: validates input, caches per text, normalizes output.

    Subclasses implement :meth:`_embed_many`, returning raw (unnormalized)
    vectors in input order.
    """

    name: str = "provider"
    dim: int = 0

    def __init__(self) -> None:
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self.calls = 0

    def _embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        raise NotImplementedError

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        for text in texts:
            if not isinstance(text, str) or not text.strip():
                raise EmptyText("cannot embed empty text")
        with self._lock:
            missing = list(dict.fromkeys(t for t in texts if t not in self._cache))
            if missing:
                self.calls += 1
                raw = self._embed_many(missing)
                for text, vec in zip(missing, raw):
                    vec = np.asarray(vec, dtype=np.float64)
                    if vec.shape != (self.dim,):
                        raise DimensionMismatch(
                            f"{self.name} returned dim {vec.shape}, expected {self.dim}"
                        )
                    self._cache[text] = _freeze(normalize(vec))
            return [self._cache[t] for t in texts]


class HashEmbedder(EmbeddingProvider):
    """Lowercase, split on non-alphanumerics, FNV-1a each token into buckets."""

    def __init__(self, dim: int = 256):
        super().__init__()
        self.dim = dim
        self.name = f"hash-fnv1a-{dim}"

    def _embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            vec = np.zeros(self.dim)
            tokens = tokenize(text)
            if not tokens:
                raise EmptyText(f"no alphanumeric tokens in {text!r}")
            for token in tokens:
                vec[fnv1a_64(token.encode("utf-8")) % self.dim] += 1.0
            out.append(vec)
        return out


class RemoteEmbedder(EmbeddingProvider):
    """Client for an endpoint taking ``{"model", "input": [...]}``.

    The response is either a bare list of float arrays or an object with a
    ``data`` list of ``{"embedding": [...]}`` items, in input order.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        dim: int,
        token_env: str = "LEGOMEM_EMBEDDING_TOKEN",
        attempts: int = 3,
        backoff: float = 0.25,
        timeout: float = 30.0,
        http_client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        super().__init__()
        self.endpoint = endpoint
        self.model = model
        self.dim = dim
        self.name = f"remote:{model}"
        self.token_env = token_env
        self.attempts = attempts
        self.backoff = backoff
        self._http = http_client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def _headers(self) -> dict[str, str]:
        token = os.environ.get(self.token_env)
        return {"Authorization": f"Bearer {token}"} if token else {}

    def _embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        body = {"model": self.model, "input": list(texts)}
        last_error: Exception | None = None
        for attempt in range(self.attempts):
            try:
                resp = self._http.post(self.endpoint, json=body, headers=self._headers())
                resp.raise_for_status()
                payload = resp.json()
                if isinstance(payload, dict):
                    payload = [item["embedding"] for item in payload["data"]]
                if len(payload) != len(texts):
                    raise ValueError(f"got {len(payload)} vectors for {len(texts)} inputs")
                return [np.asarray(v, dtype=np.float64) for v in payload]
            except (httpx.HTTPError, ValueError, KeyError, TypeError) as exc:
                last_error = exc
                logger.warning("embedding attempt %d failed: %s", attempt + 1, exc)
                if attempt + 1 < self.attempts:
                    self._sleep(self.backoff * 2**attempt)
        raise ProviderUnavailable(f"{self.name} failed after {self.attempts} attempts: {last_error}")


def embed(provider: EmbeddingProvider, text: str) -> np.ndarray:
    return provider.embed(text)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dims differ: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine similarity undefined for a zero vector")
    return min(1.0, max(-1.0, float(np.dot(a, b)) / (na * nb)))


def make_provider(config: dict | None) -> EmbeddingProvider:
    config = dict(config or {})
    kind = config.pop("provider", "hash")
    if kind == "hash":
        return HashEmbedder(dim=int(config.get("dim", 256)))
    if kind == "remote":
        return RemoteEmbedder(
            endpoint=config["endpoint"],
            model=config["model"],
            dim=int(config["dim"]),
            token_env=config.get("token_env", "LEGOMEM_EMBEDDING_TOKEN"),
        )
    raise ValueError(f"unknown embedding provider {kind!r}")
