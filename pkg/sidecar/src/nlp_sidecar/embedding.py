"""Embedding backends.

The default backend is a deterministic hashed bag-of-words embedder that
needs no model weights: tokens are lowercased alphanumeric runs hashed
with FNV-1a (64-bit) into a fixed number of buckets, counted, and
L2-normalized. A sentence-transformers model directory can be served
instead when one is available locally.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1
_TOKEN_RE = re.compile(r"[^0-9a-z]+")


def _fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


class HashedBowModel:
    """Deterministic hashed bag-of-words embedder."""

    def __init__(self, dimension: int = 256):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.name = f"hash-{dimension}"

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in _TOKEN_RE.split(text.lower()):
                if token:
                    out[row, _fnv1a64(token) % self.dimension] += 1.0
        return out


class SentenceTransformerModel:
    """Wraps a locally stored sentence-transformers model directory."""

    def __init__(self, model_path: str | Path, device: str = "cpu"):
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(str(model_path), device=device)
        self.dimension = int(self._model.get_sentence_embedding_dimension())
        self.name = Path(model_path).name

    def encode(self, texts: list[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(texts, convert_to_numpy=True), dtype=np.float64
        )


def load_embedding_model(spec: str, device: str = "cpu"):
    """Resolve an embedding-model spec.

    ``hash-<d>`` builds the hashed bag-of-words embedder with ``d``
    buckets; anything else is treated as a local sentence-transformers
    model directory.
    """
    m = re.fullmatch(r"hash-(\d+)", spec)
    if m:
        return HashedBowModel(int(m.group(1)))
    return SentenceTransformerModel(spec, device=device)


def normalize_rows(vectors: np.ndarray) -> np.ndarray:
    """L2-normalize each row; all-zero rows stay zero."""
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return vectors / norms
