"""The five intrinsic chunk-quality metrics and their aggregation.

All metric values live in [0, 1]. A metric that cannot be computed for a
document (no coref pairs, no multi-block chunks, single chunk) scores
``None`` and is excluded from the mean; the skipped metrics are listed in
the report diagnostics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from adachunk.docmodel import (
    Chunking,
    Document,
    EntityPronounPair,
    interior_boundaries,
)
from adachunk.postprocess import SizeBounds
from adachunk.providers import CachingEmbedder, EmbeddingProvider
from adachunk.tokens import TokenCounter, get_counter

METRIC_NAMES = ("rc", "icc", "dcc", "bi", "sc")


@dataclass(frozen=True)
class MetricConfig:
    bounds: SizeBounds = field(default_factory=SizeBounds)
    bi_tolerance: int = 5
    dcc_budget: int = 3000
    window_step: int = 1
    token_counter: str = "whitespace"
    embedding_provider: str = "hash-256"

    def __post_init__(self) -> None:
        if self.bi_tolerance < 0:
            raise ValueError("bi_tolerance must be >= 0")
        if self.dcc_budget <= 0:
            raise ValueError("dcc_budget must be positive")
        if self.window_step < 1:
            raise ValueError("window_step must be >= 1")

    @property
    def counter(self) -> TokenCounter:
        return get_counter(self.token_counter)


@dataclass(frozen=True)
class MetricReport:
    doc_id: str
    method: str
    rc: float | None
    icc: float | None
    dcc: float | None
    bi: float | None
    sc: float | None
    mean: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def values(self) -> dict[str, float | None]:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def to_json(self) -> str:
        rec = {"doc_id": self.doc_id, "method": self.method}
        rec.update(self.values())
        rec["mean"] = self.mean
        rec["diagnostics"] = self.diagnostics
        return json.dumps(rec, ensure_ascii=False)


def references_completeness(
    chunking: Chunking, pairs: Sequence[EntityPronounPair]
) -> tuple[float | None, dict]:
    """Fraction of entity-pronoun pairs with no interior cut strictly
    after the entity start and at or before the pronoun end."""
    n = len(pairs)
    if n == 0:
        return None, {"pairs": 0}
    cuts = interior_boundaries(chunking)
    missed = sum(
        1 for p in pairs if any(p.entity_start < b <= p.pronoun_end for b in cuts)
    )
    return 1.0 - missed / n, {"pairs": n, "missed": missed}


def block_integrity(
    chunking: Chunking, doc: Document, tolerance: int = 5
) -> tuple[float, dict]:
    """Fraction of gold blocks with no interior cut strictly inside their
    tolerance-shrunk span."""
    cuts = interior_boundaries(chunking)
    n_blocks = len(doc.blocks)
    if n_blocks == 0:
        return 1.0, {"blocks": 0}
    intact = 0
    for block in doc.blocks:
        broken = any(
            block.start + tolerance < b < block.end - tolerance for b in cuts
        )
        intact += not broken
    return intact / n_blocks, {"blocks": n_blocks, "intact": intact}


def _chunk_block_texts(doc: Document, start: int, end: int) -> list[str]:
    """Intersections of the document's blocks with a chunk span, trimmed;
    blocks reduced to empty text are skipped."""
    texts = []
    for block in doc.blocks:
        a, b = max(block.start, start), min(block.end, end)
        if a >= b:
            continue
        piece = doc.text[a:b].strip()
        if piece:
            texts.append(piece)
    return texts


def _mean_cosine(
    anchor: np.ndarray, others: list[np.ndarray]
) -> float | None:
    """Mean dot product of pre-normalized vectors; pairs involving a zero
    vector are excluded to avoid NaN propagation."""
    if not np.any(anchor):
        return None
    sims = [float(anchor @ v) for v in others if np.any(v)]
    if not sims:
        return None
    return sum(sims) / len(sims)


def intrachunk_cohesion(
    chunking: Chunking, doc: Document, provider: EmbeddingProvider
) -> tuple[float | None, dict]:
    """Mean cosine similarity between each chunk's block embeddings and the
    chunk's own embedding, averaged over chunks with at least two blocks
    and clipped at zero."""
    per_chunk_blocks: list[list[str]] = []
    chunk_texts: list[str] = []
    for c in chunking.chunks:
        blocks = _chunk_block_texts(doc, c.start, c.end)
        if len(blocks) >= 2:
            per_chunk_blocks.append(blocks)
            chunk_texts.append(doc.text[c.start : c.end])
    if not chunk_texts:
        return None, {"valid_chunks": 0}
    all_texts = chunk_texts + [b for blocks in per_chunk_blocks for b in blocks]
    vectors = provider.embed_batch(all_texts)
    chunk_vecs = vectors[: len(chunk_texts)]
    block_vecs = vectors[len(chunk_texts) :]
    cohesions = []
    pos = 0
    for chunk_vec, blocks in zip(chunk_vecs, per_chunk_blocks):
        vecs = block_vecs[pos : pos + len(blocks)]
        pos += len(blocks)
        cohesion = _mean_cosine(chunk_vec, vecs)
        if cohesion is not None:
            cohesions.append(cohesion)
    if not cohesions:
        return None, {"valid_chunks": 0}
    icc = max(0.0, sum(cohesions) / len(cohesions))
    return icc, {"valid_chunks": len(cohesions)}


@dataclass(frozen=True)
class Window:
    chunk_indices: tuple[int, ...]
    start: int
    end: int


def build_windows(
    chunking: Chunking,
    doc: Document,
    budget: int,
    window_step: int = 1,
    counter: TokenCounter | None = None,
) -> list[Window]:
    """Sliding windows of consecutive chunks: extend while the cumulative
    token count stays within ``budget``, always taking at least two chunks;
    the start index advances by ``window_step``."""
    if counter is None:
        counter = get_counter("whitespace")
    chunks = chunking.chunks
    K = len(chunks)
    if K < 2:
        return []
    token_counts = [counter.count(doc.text[c.start : c.end]) for c in chunks]
    windows: list[Window] = []
    for i in range(0, K - 1, window_step):
        total = token_counts[i]
        j = i + 1
        total += token_counts[j]
        while j + 1 < K and total + token_counts[j + 1] <= budget:
            j += 1
            total += token_counts[j]
        windows.append(
            Window(
                chunk_indices=tuple(range(i, j + 1)),
                start=chunks[i].start,
                end=chunks[j].end,
            )
        )
    return windows


def document_contextual_coherence(
    chunking: Chunking,
    doc: Document,
    provider: EmbeddingProvider,
    cfg: MetricConfig | None = None,
) -> tuple[float | None, dict]:
    """Mean cosine similarity between chunks and token-budgeted sliding
    windows of neighboring chunks, clipped at zero."""
    if cfg is None:
        cfg = MetricConfig()
    windows = build_windows(chunking, doc, cfg.dcc_budget, cfg.window_step, cfg.counter)
    if not windows:
        return None, {"windows": 0}
    chunk_texts = [doc.text[c.start : c.end] for c in chunking.chunks]
    window_texts = [doc.text[w.start : w.end] for w in windows]
    vectors = provider.embed_batch(chunk_texts + window_texts)
    chunk_vecs = vectors[: len(chunk_texts)]
    window_vecs = vectors[len(chunk_texts) :]
    coherences = []
    for w, w_vec in zip(windows, window_vecs):
        member_vecs = [chunk_vecs[k] for k in w.chunk_indices]
        coherence = _mean_cosine(w_vec, member_vecs)
        if coherence is not None:
            coherences.append(coherence)
    if not coherences:
        return None, {"windows": len(windows), "scored_windows": 0}
    dcc = max(0.0, sum(coherences) / len(coherences))
    return dcc, {"windows": len(windows), "scored_windows": len(coherences)}


def size_compliance(
    chunking: Chunking,
    doc: Document,
    bounds: SizeBounds,
    counter: TokenCounter,
) -> tuple[float, dict]:
    """Fraction of chunks whose token count lies within [min, max]."""
    K = len(chunking.chunks)
    if K == 0:
        raise ValueError("empty chunking")
    compliant = 0
    for c in chunking.chunks:
        n = counter.count(doc.text[c.start : c.end])
        compliant += bounds.min <= n <= bounds.max
    return compliant / K, {"chunks": K, "compliant": compliant}


def score(
    doc: Document,
    chunking: Chunking,
    cfg: MetricConfig | None = None,
    provider: EmbeddingProvider | None = None,
) -> MetricReport:
    """Compute all five metrics and their mean over the applicable ones."""
    if cfg is None:
        cfg = MetricConfig()
    if provider is None:
        from adachunk.providers import HashEmbedder

        provider = HashEmbedder()
    cached = CachingEmbedder(provider)

    diagnostics: dict = {"chunks": len(chunking.chunks)}
    rc, d = references_completeness(chunking, doc.coref_pairs)
    diagnostics["rc"] = d
    bi, d = block_integrity(chunking, doc, cfg.bi_tolerance)
    diagnostics["bi"] = d
    icc, d = intrachunk_cohesion(chunking, doc, cached)
    diagnostics["icc"] = d
    dcc, d = document_contextual_coherence(chunking, doc, cached, cfg)
    diagnostics["dcc"] = d
    sc, d = size_compliance(chunking, doc, cfg.bounds, cfg.counter)
    diagnostics["sc"] = d

    values = {"rc": rc, "icc": icc, "dcc": dcc, "bi": bi, "sc": sc}
    applicable = [v for v in values.values() if v is not None]
    diagnostics["skipped"] = [k for k, v in values.items() if v is None]
    mean = sum(applicable) / len(applicable) if applicable else math.nan
    return MetricReport(
        doc_id=doc.id,
        method=chunking.method,
        mean=mean,
        diagnostics=diagnostics,
        **values,
    )
