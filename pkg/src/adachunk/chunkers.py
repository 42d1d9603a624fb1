"""Chunker portfolio: page, sentence, recursive split-then-merge, LLM regex."""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field

from adachunk.docmodel import Chunk, Chunking, Document
from adachunk.llm import LLMClient, RegexProposal, propose_regex
from adachunk.tokens import TokenCounter, get_counter

# Priority order: Markdown headings (h1 first), horizontal rules, blank
# line, single newline, sentence-ending punctuation, whitespace, then the
# empty pattern which splits between any two characters (guaranteed
# progress).
DEFAULT_CASCADE: tuple[str, ...] = (
    r"^# ",
    r"^## ",
    r"^### ",
    r"^#### ",
    r"^##### ",
    r"^###### ",
    r"^(?:-{3,}|\*{3,}|_{3,})[ \t]*$",
    r"\n\n+",
    r"\n",
    r"(?<=[.!?]) ",
    r"\s+",
    "",
)


@dataclass(frozen=True)
class ChunkerConfig:
    target_size: int = 1100
    overlap: int = 0
    sentences_per_chunk: int = 5
    sample_budget: int = 8000
    separator_cascade: tuple[str, ...] = DEFAULT_CASCADE
    token_counter: str = "whitespace"

    def __post_init__(self) -> None:
        if self.target_size <= 0:
            raise ValueError("target_size must be positive")
        if not 0 <= self.overlap < self.target_size:
            raise ValueError("overlap must satisfy 0 <= overlap < target_size")
        if self.sentences_per_chunk < 1:
            raise ValueError("sentences_per_chunk must be >= 1")
        if not self.separator_cascade or self.separator_cascade[-1] != "":
            raise ValueError("separator cascade must end with the empty pattern")

    @property
    def counter(self) -> TokenCounter:
        return get_counter(self.token_counter)


class RegexSplitError(RuntimeError):
    """Raised when a delimiter pattern exceeds its match or time budget."""


def _chunking_from_cuts(doc: Document, cuts: list[int], method: str) -> Chunking:
    edges = [0, *sorted(set(cuts)), doc.length]
    chunks = tuple(Chunk(a, b) for a, b in zip(edges, edges[1:]))
    return Chunking(doc_id=doc.id, chunks=chunks, method=method)


def chunk_by_pages(doc: Document) -> Chunking:
    """Cut exactly at each page-break offset; no breaks means one chunk."""
    if doc.length == 0:
        raise ValueError("cannot chunk an empty document")
    cuts = [p for p in doc.page_breaks if 0 < p < doc.length]
    return _chunking_from_cuts(doc, cuts, "page")


def chunk_by_sentences(doc: Document, n: int | None = None, cfg: ChunkerConfig | None = None) -> Chunking:
    """Cut after every n-th sentence; gap text attaches to the preceding chunk."""
    if cfg is None:
        cfg = ChunkerConfig()
    if n is None:
        n = cfg.sentences_per_chunk
    if not doc.sentences:
        raise ValueError("sentence spans required")
    # The cut lands at the next sentence's start so inter-sentence text
    # stays with the chunk that precedes it.
    cuts = [doc.sentences[i][0] for i in range(n, len(doc.sentences), n)]
    cuts = [c for c in cuts if 0 < c < doc.length]
    return _chunking_from_cuts(doc, cuts, "sentence")


def separator_cascade_split(
    text: str, max_tokens: int, cfg: ChunkerConfig | None = None
) -> list[str]:
    """Recursively split text at the highest-priority separators until every
    segment is at most ``max_tokens`` tokens. Segments concatenate back to
    the input exactly.
    """
    if cfg is None:
        cfg = ChunkerConfig()
    if max_tokens <= 0:
        raise ValueError("max_tokens must be positive")
    counter = cfg.counter
    return _split_level(text, 0, max_tokens, cfg.separator_cascade, counter)


def _split_level(
    text: str,
    level: int,
    max_tokens: int,
    cascade: tuple[str, ...],
    counter: TokenCounter,
) -> list[str]:
    if counter.count(text) <= max_tokens:
        return [text]
    if level >= len(cascade) or cascade[level] == "":
        return _char_split(text, max_tokens, counter)
    pattern = re.compile(cascade[level], re.MULTILINE)
    cuts = sorted(
        {m.start() for m in pattern.finditer(text) if 0 < m.start() < len(text)}
    )
    if not cuts:
        return _split_level(text, level + 1, max_tokens, cascade, counter)
    out: list[str] = []
    for a, b in zip([0, *cuts], [*cuts, len(text)]):
        out.extend(_split_level(text[a:b], level + 1, max_tokens, cascade, counter))
    return out


def _char_split(text: str, max_tokens: int, counter: TokenCounter) -> list[str]:
    """Final fallback: split anywhere, taking the largest compliant prefix."""
    out: list[str] = []
    rest = text
    while counter.count(rest) > max_tokens:
        lo, hi = 1, len(rest)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if counter.count(rest[:mid]) <= max_tokens:
                lo = mid
            else:
                hi = mid - 1
        k = max(lo, 1)
        while k < len(rest) and counter.count(rest[:k]) > max_tokens and k > 1:
            k -= 1
        out.append(rest[:k])
        rest = rest[k:]
    out.append(rest)
    return out


def _overlap_hint(
    doc: Document, prev_end: int, prev_start: int, overlap: int, counter: TokenCounter
) -> tuple[int, int] | None:
    """Trailing span of the previous chunk holding up to ``overlap`` tokens."""
    if overlap <= 0:
        return None
    lo, hi = prev_start, prev_end
    # Largest suffix of the previous chunk with <= overlap tokens.
    while lo < hi:
        mid = (lo + hi) // 2
        if counter.count(doc.text[mid:prev_end]) <= overlap:
            hi = mid
        else:
            lo = mid + 1
    if lo >= prev_end:
        return None
    return (lo, prev_end)


def recursive_split_merge(doc: Document, cfg: ChunkerConfig | None = None) -> Chunking:
    """Two-pass splitter: cascade split to <= S tokens, then greedily merge
    adjacent segments while the merged text stays within S.

    Overlap is recorded as an ``overlap_hint`` span of up to ``cfg.overlap``
    trailing tokens of the previous chunk; canonical spans stay disjoint.
    """
    if cfg is None:
        cfg = ChunkerConfig()
    if doc.length == 0:
        raise ValueError("cannot chunk an empty document")
    counter = cfg.counter
    S = cfg.target_size
    segments = separator_cascade_split(doc.text, S, cfg)

    spans: list[tuple[int, int]] = []
    pos = 0
    for seg in segments:
        spans.append((pos, pos + len(seg)))
        pos += len(seg)

    chunks: list[Chunk] = []
    cur_start = 0
    cur_end = 0
    for start, end in spans:
        if cur_end > cur_start and counter.count(doc.text[cur_start:end]) > S:
            hint = None
            if chunks:
                prev = chunks[-1]
                hint = _overlap_hint(doc, prev.end, prev.start, cfg.overlap, counter)
            chunks.append(Chunk(cur_start, cur_end, hint if chunks else None))
            cur_start = cur_end
        cur_end = end
    hint = None
    if chunks:
        prev = chunks[-1]
        hint = _overlap_hint(doc, prev.end, prev.start, cfg.overlap, counter)
    chunks.append(Chunk(cur_start, cur_end, hint))

    method = f"recursive-s{S}"
    return Chunking(doc_id=doc.id, chunks=tuple(chunks), method=method)


def _neutralize_groups(pattern: str) -> str:
    """Convert capturing groups to non-capturing; re.split semantics change
    when groups capture."""
    return re.sub(r"(?<!\\)\((?![?])", "(?:", pattern)


def apply_regex_split(
    doc: Document,
    pattern: str,
    method: str = "llm-regex",
    time_budget_s: float = 10.0,
    match_cap_factor: int = 10,
) -> Chunking:
    """Cut at the start of each non-overlapping match of ``pattern``.

    Delimiter text stays with the following chunk so headings lead their
    chunk. Zero matches yields a single chunk. Catastrophic patterns are
    guarded by a match-count cap and a per-document time budget.
    """
    if doc.length == 0:
        raise ValueError("cannot chunk an empty document")
    compiled = re.compile(_neutralize_groups(pattern), re.MULTILINE)
    # Expect roughly >= 100-token chunks; 10x that count is pathological.
    expected = max(1, len(doc.text.split()) // 100 + 1)
    cap = match_cap_factor * expected
    deadline = time.monotonic() + time_budget_s
    cuts: list[int] = []
    n_matches = 0
    for m in compiled.finditer(doc.text):
        n_matches += 1
        if n_matches > cap:
            raise RegexSplitError(
                f"pattern produced more than {cap} matches on {doc.id}"
            )
        if time.monotonic() > deadline:
            raise RegexSplitError(f"pattern exceeded time budget on {doc.id}")
        if 0 < m.start() < doc.length:
            cuts.append(m.start())
    return _chunking_from_cuts(doc, cuts, method)


def llm_regex_chunk(
    doc: Document, llm: LLMClient, cfg: ChunkerConfig | None = None
) -> Chunking:
    """Ask the LLM for a delimiter regex and split with it; fall back to the
    recursive splitter on an invalid proposal or a guarded split failure.
    Transport errors propagate after the client's retry."""
    if cfg is None:
        cfg = ChunkerConfig()
    proposal: RegexProposal = propose_regex(llm, doc, cfg)
    if proposal.valid:
        try:
            return apply_regex_split(doc, proposal.pattern, method="llm-regex")
        except RegexSplitError:
            pass
    fallback = recursive_split_merge(doc, cfg)
    return Chunking(
        doc_id=doc.id, chunks=fallback.chunks, method="llm-regex:fallback-recursive"
    )
