"""Per-document method selection: run candidate chunkers, score each,
select the argmax by mean metric score. Ties break by portfolio order."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from adachunk.chunkers import (
    ChunkerConfig,
    chunk_by_pages,
    chunk_by_sentences,
    llm_regex_chunk,
    recursive_split_merge,
)
from adachunk.docmodel import Chunking, Document
from adachunk.llm import LLMClient
from adachunk.metrics import MetricConfig, MetricReport, score
from adachunk.postprocess import SizeBounds, postprocess
from adachunk.providers import EmbeddingProvider

CHUNKER_KINDS = ("page", "sentence", "recursive", "llm-regex")


class SelectionError(RuntimeError):
    """Raised when every portfolio method failed for a document."""


@dataclass(frozen=True)
class PortfolioEntry:
    name: str
    kind: str
    config: ChunkerConfig = field(default_factory=ChunkerConfig)
    postprocess: bool = True

    def __post_init__(self) -> None:
        if self.kind not in CHUNKER_KINDS:
            raise ValueError(f"unknown chunker kind {self.kind!r}")


def default_portfolio(token_counter: str = "whitespace") -> tuple[PortfolioEntry, ...]:
    """LLM regex, recursive S=1100, recursive S=600, page: all with
    post-processing on. Order doubles as tie-break priority."""
    base = ChunkerConfig(token_counter=token_counter)
    return (
        PortfolioEntry("llm-regex", "llm-regex", base, True),
        PortfolioEntry("recursive-s1100", "recursive", base, True),
        PortfolioEntry(
            "recursive-s600", "recursive", replace(base, target_size=600), True
        ),
        PortfolioEntry("page", "page", base, True),
    )


def run_chunker(
    doc: Document, entry: PortfolioEntry, llm: LLMClient | None = None
) -> Chunking:
    if entry.kind == "page":
        chunking = chunk_by_pages(doc)
    elif entry.kind == "sentence":
        chunking = chunk_by_sentences(doc, cfg=entry.config)
    elif entry.kind == "recursive":
        chunking = recursive_split_merge(doc, entry.config)
    elif entry.kind == "llm-regex":
        if llm is None:
            raise ValueError("llm-regex portfolio entry requires an LLM client")
        chunking = llm_regex_chunk(doc, llm, entry.config)
    else:  # pragma: no cover - guarded by PortfolioEntry
        raise ValueError(entry.kind)
    return Chunking(doc_id=chunking.doc_id, chunks=chunking.chunks, method=entry.name)


@dataclass
class SelectionResult:
    doc_id: str
    reports: dict[str, MetricReport]
    selected: str
    chunking: Chunking
    failures: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "doc_id": self.doc_id,
                "selected": self.selected,
                "means": {m: r.mean for m, r in self.reports.items()},
                "failures": self.failures,
            },
            ensure_ascii=False,
        )


def select_best(
    doc: Document,
    portfolio: tuple[PortfolioEntry, ...] | None = None,
    metric_cfg: MetricConfig | None = None,
    provider: EmbeddingProvider | None = None,
    llm: LLMClient | None = None,
    bounds: SizeBounds | None = None,
) -> SelectionResult:
    """Chunk the document with every portfolio method, score each chunking,
    and pick the argmax by mean. A failing chunker is excluded and
    recorded; all methods failing is an error."""
    if portfolio is None:
        portfolio = default_portfolio()
    if not portfolio:
        raise ValueError("portfolio must be non-empty")
    if metric_cfg is None:
        metric_cfg = MetricConfig()
    if bounds is None:
        bounds = metric_cfg.bounds

    reports: dict[str, MetricReport] = {}
    chunkings: dict[str, Chunking] = {}
    failures: dict[str, str] = {}
    for entry in portfolio:
        try:
            chunking = run_chunker(doc, entry, llm)
            if entry.postprocess:
                chunking = postprocess(chunking, doc, bounds, entry.config)
            reports[entry.name] = score(doc, chunking, metric_cfg, provider)
            chunkings[entry.name] = chunking
        except Exception as exc:
            failures[entry.name] = f"{type(exc).__name__}: {exc}"
    if not reports:
        raise SelectionError(
            f"all portfolio methods failed for {doc.id}: {failures}"
        )

    best = max(
        (entry.name for entry in portfolio if entry.name in reports),
        key=lambda name: reports[name].mean,
    )
    # max() keeps the first of equal keys, which is the portfolio order.
    assert all(reports[best].mean >= r.mean for r in reports.values())
    return SelectionResult(
        doc_id=doc.id,
        reports=reports,
        selected=best,
        chunking=chunkings[best],
        failures=failures,
    )


def selection_stats(results: list[SelectionResult]) -> list[tuple[str, int]]:
    """Percentage of documents per selected method, rounded to integer
    percent, descending."""
    if not results:
        return []
    counts: dict[str, int] = {}
    for r in results:
        counts[r.selected] = counts.get(r.selected, 0) + 1
    total = len(results)
    stats = [(method, round(100 * n / total)) for method, n in counts.items()]
    stats.sort(key=lambda item: (-item[1], item[0]))
    return stats
