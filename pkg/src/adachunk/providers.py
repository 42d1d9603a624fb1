"""Embedding and coreference providers.

Every provider returns unit-L2-norm vectors, except the designated zero
vector for empty or whitespace-only text. The deterministic hashing
embedder makes the embedding metrics testable offline; remote providers
speak the JSON wire protocol:

    POST /embed  {"texts": [...]}  -> {"dim": d, "vectors": [[...], ...]}
    POST /coref  {"text": ...}     -> {"pairs": [{...}, ...]}
    GET  /health                   -> {"ok": true, "models": {...}}
"""

from __future__ import annotations

import re
import time
from typing import Protocol, Sequence

import numpy as np
import requests

from adachunk.docmodel import EntityPronounPair

_TOKEN_SPLIT_RE = re.compile(r"[^0-9a-z]+")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def _fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def hash_embed(text: str, dimension: int = 256) -> np.ndarray:
    """Deterministic bag-of-words embedding: lowercase, split on
    non-alphanumeric runs, hash tokens into ``dimension`` buckets, count,
    L2-normalize. Empty token list yields the zero vector."""
    vec = np.zeros(dimension, dtype=np.float64)
    tokens = [t for t in _TOKEN_SPLIT_RE.split(text.lower()) if t]
    if not tokens:
        return vec
    for token in tokens:
        vec[_fnv1a64(token) % dimension] += 1.0
    return vec / np.linalg.norm(vec)


class EmbeddingProvider(Protocol):
    name: str
    dimension: int

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class HashEmbedder:
    """In-core embedding provider backed by :func:`hash_embed`; stateless."""

    def __init__(self, dimension: int = 256):
        self.name = f"hash-{dimension}"
        self.dimension = dimension

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [hash_embed(t, self.dimension) for t in texts]


class ProviderTransportError(RuntimeError):
    """Transport failure talking to a remote provider, after retries."""


class RemoteEmbeddingProvider:
    """Client for the /embed wire protocol.

    Vectors are re-normalized locally regardless of server output; batch
    size is capped; transport errors retry with backoff.
    """

    def __init__(
        self,
        base_url: str,
        dimension: int,
        name: str = "remote",
        batch_cap: int = 64,
        retries: int = 3,
        backoff_s: float = 0.5,
        timeout_s: float = 120.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.dimension = dimension
        self.name = name
        self.batch_cap = batch_cap
        self.retries = retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self._session = session or requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        last_exc: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = self._session.post(
                    f"{self.base_url}{path}", json=payload, timeout=self.timeout_s
                )
                resp.raise_for_status()
                return resp.json()
            except (requests.RequestException, ValueError) as exc:
                last_exc = exc
                time.sleep(self.backoff_s * (2**attempt))
        raise ProviderTransportError(f"provider request failed: {last_exc}") from last_exc

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for i in range(0, len(texts), self.batch_cap):
            batch = list(texts[i : i + self.batch_cap])
            data = self._post("/embed", {"texts": batch})
            if data["dim"] != self.dimension:
                raise ValueError(
                    f"provider returned dimension {data['dim']}, expected {self.dimension}"
                )
            for values in data["vectors"]:
                vec = np.asarray(values, dtype=np.float64)
                if vec.shape != (self.dimension,):
                    raise ValueError("vector shape mismatch from provider")
                norm = np.linalg.norm(vec)
                out.append(vec / norm if norm > 0 else vec)
        if len(out) != len(texts):
            raise ValueError("provider returned a different number of vectors")
        return out


class RemoteCorefProvider:
    """Client for the /coref wire protocol."""

    def __init__(
        self,
        base_url: str,
        retries: int = 3,
        backoff_s: float = 0.5,
        timeout_s: float = 300.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.backoff_s = backoff_s
        self.timeout_s = timeout_s
        self._session = session or requests.Session()

    def extract(self, text: str) -> list[EntityPronounPair]:
        last_exc: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = self._session.post(
                    f"{self.base_url}/coref", json={"text": text}, timeout=self.timeout_s
                )
                resp.raise_for_status()
                data = resp.json()
                break
            except (requests.RequestException, ValueError) as exc:
                last_exc = exc
                time.sleep(self.backoff_s * (2**attempt))
        else:
            raise ProviderTransportError(
                f"coref request failed: {last_exc}"
            ) from last_exc
        pairs = [
            EntityPronounPair(
                entity_start=p["entity_start"],
                pronoun_end=p["pronoun_end"],
                entity_text=p.get("entity_text", ""),
                pronoun_text=p.get("pronoun_text", ""),
            )
            for p in data["pairs"]
        ]
        pairs.sort(key=lambda p: p.pronoun_end)
        return pairs


def extract_coref_pairs_remote(
    provider: RemoteCorefProvider, text: str, language: str = "en"
) -> list[EntityPronounPair] | None:
    """Fetch entity-pronoun pairs; returns None (metric not applicable)
    for non-English documents since the coreference model is
    English-only."""
    if not language.lower().startswith("en"):
        return None
    return provider.extract(text)


class CachingEmbedder:
    """Memoizing wrapper so one document's block/chunk/window texts are
    embedded at most once; batches unseen texts together."""

    def __init__(self, inner: EmbeddingProvider):
        self.inner = inner
        self.name = inner.name
        self.dimension = inner.dimension
        self._cache: dict[str, np.ndarray] = {}

    def embed_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        unseen = [t for t in dict.fromkeys(texts) if t not in self._cache]
        if unseen:
            for text, vec in zip(unseen, self.inner.embed_batch(unseen)):
                self._cache[text] = vec
        return [self._cache[t] for t in texts]
