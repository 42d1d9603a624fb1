"""Shared test fixtures: synthetic document and chunking generators."""

from __future__ import annotations

import random

import pytest

from adachunk.docmodel import BlockSpan, Chunk, Chunking, Document, EntityPronounPair

WORDS = (
    "contract clause article policy section data model chunk retrieval "
    "embedding table figure title paragraph evidence ruling appendix "
    "committee quarterly report revenue metric window budget overlap "
    "language document boundary entity pronoun cohesion coherence"
).split()


def make_text(rng: random.Random, n_words: int) -> str:
    words = [rng.choice(WORDS) for _ in range(n_words)]
    # Sprinkle sentence punctuation and paragraph breaks for the cascade.
    parts = []
    for i, w in enumerate(words):
        parts.append(w)
        if i == len(words) - 1:
            parts.append(".")
        elif rng.random() < 0.12:
            parts.append(".")
            parts.append("\n\n" if rng.random() < 0.3 else " ")
        else:
            parts.append(" ")
    return "".join(parts).rstrip()


def random_spans(rng: random.Random, length: int, max_parts: int) -> list[int]:
    """Interior cut offsets partitioning [0, length)."""
    n = rng.randint(0, max(0, min(max_parts - 1, length - 1)))
    cuts = sorted(rng.sample(range(1, length), n)) if n else []
    return cuts


def make_document(
    rng: random.Random,
    n_words: int = 200,
    max_blocks: int = 8,
    max_pairs: int = 6,
    max_sentences: int = 12,
) -> Document:
    text = make_text(rng, n_words)
    L = len(text)
    block_cuts = random_spans(rng, L, max_blocks)
    edges = [0, *block_cuts, L]
    kinds = ("paragraph", "table", "title", "list", "other")
    blocks = tuple(
        BlockSpan(a, b, rng.choice(kinds)) for a, b in zip(edges, edges[1:])
    )

    pairs = []
    for _ in range(rng.randint(0, max_pairs)):
        s = rng.randrange(0, L - 1)
        t = rng.randrange(s + 1, min(L, s + 120) + 1)
        pairs.append(EntityPronounPair(s, min(t, L)))

    sent_cuts = sorted(set(random_spans(rng, L, max_sentences)))
    sent_edges = [0, *sent_cuts, L]
    sentences = tuple(
        (a, b) for a, b in zip(sent_edges, sent_edges[1:]) if a < b
    )

    n_breaks = rng.randint(0, 3)
    page_breaks = tuple(sorted(rng.sample(range(1, L), min(n_breaks, L - 1))))

    return Document(
        id=f"doc{rng.randrange(10**6)}",
        text=text,
        blocks=blocks,
        page_breaks=page_breaks,
        sentences=sentences,
        coref_pairs=tuple(pairs),
    )


def make_chunking(rng: random.Random, doc: Document, max_chunks: int = 10) -> Chunking:
    cuts = random_spans(rng, doc.length, max_chunks)
    edges = [0, *cuts, doc.length]
    chunks = tuple(Chunk(a, b) for a, b in zip(edges, edges[1:]))
    return Chunking(doc_id=doc.id, chunks=chunks, method="random")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20260826)
