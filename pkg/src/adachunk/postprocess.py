"""Size regularization: oversized-chunk re-splitting, then tiny-chunk merging.

Tiny-chunk minimization takes priority over the upper size bound: a merge
is allowed as long as the combined chunk stays within ``merge_cap``, even
when that lands it above ``max``.
"""

from __future__ import annotations

from dataclasses import dataclass

from adachunk.chunkers import ChunkerConfig, separator_cascade_split
from adachunk.docmodel import Chunk, Chunking, Document
from adachunk.tokens import TokenCounter


@dataclass(frozen=True)
class SizeBounds:
    min: int = 100
    max: int = 1100
    merge_cap: int = 1150

    def __post_init__(self) -> None:
        if not 0 < self.min < self.max <= self.merge_cap:
            raise ValueError(
                f"bounds must satisfy 0 < min < max <= merge_cap, "
                f"got ({self.min}, {self.max}, {self.merge_cap})"
            )


def _tok(doc: Document, start: int, end: int, counter: TokenCounter) -> int:
    return counter.count(doc.text[start:end])


def resplit_oversized(
    chunking: Chunking,
    doc: Document,
    bounds: SizeBounds,
    cfg: ChunkerConfig | None = None,
    threshold: int | None = None,
) -> Chunking:
    """Re-split every chunk above ``threshold`` (default ``bounds.max``)
    tokens with the separator cascade, leaving the rest untouched. The
    replacement pieces each hold at most ``bounds.max`` tokens."""
    if cfg is None:
        cfg = ChunkerConfig(target_size=bounds.max)
    if threshold is None:
        threshold = bounds.max
    counter = cfg.counter
    out: list[Chunk] = []
    for c in chunking.chunks:
        if _tok(doc, c.start, c.end, counter) <= threshold:
            out.append(c)
            continue
        pos = c.start
        for piece in separator_cascade_split(doc.text[c.start : c.end], bounds.max, cfg):
            out.append(Chunk(pos, pos + len(piece)))
            pos += len(piece)
    return Chunking(doc_id=chunking.doc_id, chunks=tuple(out), method=chunking.method)


def merge_tiny(
    chunking: Chunking,
    doc: Document,
    bounds: SizeBounds,
    counter: TokenCounter,
) -> Chunking:
    """Left-to-right sweep to fixpoint: each chunk under ``bounds.min``
    tokens merges into its predecessor when the combination stays within
    ``merge_cap``, else into its successor, else stays."""
    spans = [(c.start, c.end) for c in chunking.chunks]
    # Each merge removes a chunk, so the fixpoint arrives within K passes.
    for _ in range(len(spans)):
        changed = False
        i = 0
        while i < len(spans):
            start, end = spans[i]
            if _tok(doc, start, end, counter) >= bounds.min:
                i += 1
                continue
            if i > 0 and _tok(doc, spans[i - 1][0], end, counter) <= bounds.merge_cap:
                spans[i - 1 : i + 1] = [(spans[i - 1][0], end)]
                changed = True
                continue
            if (
                i + 1 < len(spans)
                and _tok(doc, start, spans[i + 1][1], counter) <= bounds.merge_cap
            ):
                spans[i : i + 2] = [(start, spans[i + 1][1])]
                changed = True
                continue
            i += 1
        if not changed:
            break
    chunks = tuple(Chunk(a, b) for a, b in spans)
    return Chunking(doc_id=chunking.doc_id, chunks=chunks, method=chunking.method)


def postprocess(
    chunking: Chunking,
    doc: Document,
    bounds: SizeBounds | None = None,
    cfg: ChunkerConfig | None = None,
) -> Chunking:
    """Oversized re-split followed by tiny-chunk merge; idempotent.

    The re-split pass here triggers above ``merge_cap`` rather than
    ``max``; merging tiny chunks may legitimately produce chunks in
    (max, merge_cap], and re-splitting those on a second application
    would make the pipeline oscillate.
    """
    if bounds is None:
        bounds = SizeBounds()
    if cfg is None:
        cfg = ChunkerConfig(target_size=bounds.max)
    resplit = resplit_oversized(chunking, doc, bounds, cfg, threshold=bounds.merge_cap)
    return merge_tiny(resplit, doc, bounds, cfg.counter)
