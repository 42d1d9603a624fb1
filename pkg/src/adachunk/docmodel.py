"""Document representation, span arithmetic, and chunking validity.

All offsets are Unicode scalar-value (character) offsets into the parsed
Markdown text, never bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

BLOCK_KINDS = frozenset(
    {"paragraph", "table", "figure", "title", "list", "header_footer", "other"}
)

PAGE_BREAK_MARKER = "<!-- PageBreak -->"


class SidecarError(ValueError):
    """Raised when a sidecar file or its spans are malformed."""


@dataclass(frozen=True)
class BlockSpan:
    """A parser-provided structural unit (paragraph, table, title, ...)."""

    start: int
    end: int
    kind: str = "other"

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise SidecarError(f"invalid block span [{self.start}, {self.end})")
        if self.kind not in BLOCK_KINDS:
            raise SidecarError(f"unknown block kind {self.kind!r}")


@dataclass(frozen=True)
class EntityPronounPair:
    """An entity mention and a later pronoun that refers back to it."""

    entity_start: int
    pronoun_end: int
    entity_text: str = ""
    pronoun_text: str = ""

    def __post_init__(self) -> None:
        if not 0 <= self.entity_start < self.pronoun_end:
            raise SidecarError(
                f"invalid coref pair ({self.entity_start}, {self.pronoun_end})"
            )


@dataclass(frozen=True)
class Document:
    """A parsed Markdown document plus structural annotations.

    Immutable after construction; safe to share across workers.
    """

    id: str
    text: str
    blocks: tuple[BlockSpan, ...]
    page_breaks: tuple[int, ...] = ()
    sentences: tuple[tuple[int, int], ...] = ()
    coref_pairs: tuple[EntityPronounPair, ...] = ()
    language: str = "en"
    missing_fields: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        L = len(self.text)
        _check_blocks_tile(self.blocks, L)
        for off in self.page_breaks:
            if not 0 <= off < L:
                raise SidecarError(f"page break {off} outside document of length {L}")
        prev_end = 0
        for start, end in self.sentences:
            if not 0 <= start < end <= L:
                raise SidecarError(f"sentence span [{start}, {end}) exceeds document length")
            if start < prev_end:
                raise SidecarError(f"sentence span [{start}, {end}) overlaps its predecessor")
            prev_end = end
        for pair in self.coref_pairs:
            if pair.pronoun_end > L:
                raise SidecarError(
                    f"coref span ({pair.entity_start}, {pair.pronoun_end}) exceeds document length"
                )

    @property
    def length(self) -> int:
        return len(self.text)


def _check_blocks_tile(blocks: tuple[BlockSpan, ...], length: int) -> None:
    if length == 0:
        if blocks:
            raise SidecarError("blocks present for empty document")
        return
    if not blocks:
        raise SidecarError("blocks must tile the document but none were given")
    for b in blocks:
        if b.end > length:
            raise SidecarError(f"span exceeds document length: [{b.start}, {b.end})")
    if blocks[0].start != 0:
        raise SidecarError(f"first block starts at {blocks[0].start}, expected 0")
    for prev, cur in zip(blocks, blocks[1:]):
        if prev.end != cur.start:
            raise SidecarError(
                f"blocks do not tile: block ending at {prev.end} "
                f"followed by block starting at {cur.start}"
            )
    if blocks[-1].end != length:
        raise SidecarError(
            f"last block ends at {blocks[-1].end}, expected document length {length}"
        )


@dataclass(frozen=True)
class Chunk:
    """A contiguous character span of a document used as a retrieval unit.

    ``overlap_hint`` optionally marks a span of trailing text from the
    previous chunk to prepend at embedding/indexing time; canonical spans
    stay disjoint.
    """

    start: int
    end: int
    overlap_hint: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"empty chunk span [{self.start}, {self.end})")


@dataclass(frozen=True)
class Chunking:
    """An ordered, contiguous, exhaustive partition of one document."""

    doc_id: str
    chunks: tuple[Chunk, ...]
    method: str

    def __len__(self) -> int:
        return len(self.chunks)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_chunking(doc: Document, chunking: Chunking) -> ValidationReport:
    """Check every Chunking invariant; never raises.

    Returns a report listing each violation with offending offsets; the
    report is empty iff the chunking is valid.
    """
    report = ValidationReport()
    L = doc.length
    chunks = chunking.chunks
    if not chunks:
        report.violations.append("chunking has no chunks")
        return report
    if chunks[0].start != 0:
        report.violations.append(f"first chunk starts at {chunks[0].start}, expected 0")
    if chunks[-1].end != L:
        report.violations.append(f"last chunk ends at {chunks[-1].end}, expected {L}")
    for k, c in enumerate(chunks):
        if c.start >= c.end:
            report.violations.append(f"chunk {k} has empty span [{c.start}, {c.end})")
        if c.end > L:
            report.violations.append(f"chunk {k} span [{c.start}, {c.end}) exceeds length {L}")
    for prev, cur in zip(chunks, chunks[1:]):
        if cur.start > prev.end:
            report.violations.append(f"gap violation at offset {prev.end}")
        elif cur.start < prev.end:
            report.violations.append(f"overlap violation at offset {cur.start}")
    return report


def interior_boundaries(chunking: Chunking) -> list[int]:
    """All chunk starts except the first and ends except the last.

    For contiguous chunkings these coincide: the K-1 interior cut offsets,
    sorted, excluding 0 and the document length.
    """
    chunks = chunking.chunks
    cuts = {c.start for c in chunks[1:]} | {c.end for c in chunks[:-1]}
    return sorted(cuts)


def chunk_text(doc: Document, chunk: Chunk) -> str:
    return doc.text[chunk.start : chunk.end]


def detect_page_breaks(text: str) -> tuple[int, ...]:
    """Offsets of each literal page-break marker's first character."""
    breaks = []
    pos = text.find(PAGE_BREAK_MARKER)
    while pos != -1:
        if pos > 0:
            breaks.append(pos)
        pos = text.find(PAGE_BREAK_MARKER, pos + 1)
    return tuple(breaks)


def load_document(
    markdown_path: str | Path,
    sidecar_path: str | Path | None = None,
    doc_id: str | None = None,
) -> Document:
    """Load a parsed Markdown file plus its structural sidecar.

    Missing optional sidecar fields (sentences, coref_pairs) yield empty
    lists and are recorded in ``Document.missing_fields``. A missing
    sidecar entirely yields a single whole-document block. Page breaks are
    autodetected from the literal marker when the sidecar omits them; the
    sidecar wins when both exist.
    """
    markdown_path = Path(markdown_path)
    text = markdown_path.read_text(encoding="utf-8")
    if doc_id is None:
        doc_id = markdown_path.stem

    raw: dict = {}
    if sidecar_path is not None and Path(sidecar_path).exists():
        try:
            raw = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SidecarError(f"malformed sidecar JSON in {sidecar_path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise SidecarError(f"sidecar {sidecar_path} is not a JSON object")

    missing: list[str] = []
    L = len(text)

    if "blocks" in raw:
        blocks = tuple(BlockSpan(int(s), int(e), str(k)) for s, e, k in raw["blocks"])
    else:
        missing.append("blocks")
        blocks = (BlockSpan(0, L, "other"),) if L else ()

    if "page_breaks" in raw:
        page_breaks = tuple(int(p) for p in raw["page_breaks"])
    else:
        page_breaks = detect_page_breaks(text)

    if "sentences" in raw:
        sentences = tuple((int(s), int(e)) for s, e in raw["sentences"])
    else:
        missing.append("sentences")
        sentences = ()

    if "coref_pairs" in raw:
        coref_pairs = tuple(
            EntityPronounPair(
                entity_start=int(p["entity_start"]),
                pronoun_end=int(p["pronoun_end"]),
                entity_text=str(p.get("entity_text", "")),
                pronoun_text=str(p.get("pronoun_text", "")),
            )
            for p in raw["coref_pairs"]
        )
    else:
        missing.append("coref_pairs")
        coref_pairs = ()

    language = str(raw.get("language", "en"))

    return Document(
        id=doc_id,
        text=text,
        blocks=blocks,
        page_breaks=page_breaks,
        sentences=sentences,
        coref_pairs=coref_pairs,
        language=language,
        missing_fields=tuple(missing),
    )


def chunking_to_jsonl(doc: Document, chunking: Chunking, counter) -> str:
    """Serialize a chunking as JSONL, one object per chunk."""
    lines = []
    for i, c in enumerate(chunking.chunks):
        rec = {
            "doc_id": chunking.doc_id,
            "index": i,
            "start": c.start,
            "end": c.end,
            "token_count": counter.count(chunk_text(doc, c)),
            "text": chunk_text(doc, c),
        }
        if c.overlap_hint is not None:
            rec["overlap_hint"] = list(c.overlap_hint)
        lines.append(json.dumps(rec, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def chunking_from_jsonl(content: str, method: str = "imported") -> Chunking:
    """Rebuild a Chunking from JSONL chunk records (one document's worth)."""
    chunks = []
    doc_id = ""
    for line in content.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        doc_id = rec["doc_id"]
        hint = rec.get("overlap_hint")
        chunks.append(
            Chunk(rec["start"], rec["end"], tuple(hint) if hint else None)
        )
    chunks.sort(key=lambda c: c.start)
    return Chunking(doc_id=doc_id, chunks=tuple(chunks), method=method)
