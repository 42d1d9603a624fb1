"""Command-line surface: reproducible corpus runs for chunking, scoring,
selection, and report rendering.

Exit codes: 0 success, 1 partial per-document failures, 2 configuration
error.
"""

from __future__ import annotations

import json
import logging
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import click

from adachunk.chunkers import ChunkerConfig
from adachunk.docmodel import (
    Document,
    chunking_from_jsonl,
    chunking_to_jsonl,
    load_document,
)
from adachunk.llm import HttpLLMClient, LLMClient, ReplayLLMClient
from adachunk.metrics import METRIC_NAMES, MetricConfig, MetricReport, score
from adachunk.postprocess import SizeBounds, postprocess
from adachunk.providers import EmbeddingProvider, HashEmbedder, RemoteEmbeddingProvider
from adachunk.selector import (
    PortfolioEntry,
    default_portfolio,
    run_chunker,
    select_best,
    selection_stats,
)
from adachunk.tokens import get_counter

log = logging.getLogger("adachunk")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus_dir: Path
    sidecar_dir: Path
    output_dir: Path
    token_counter: str = "whitespace"
    bounds: SizeBounds = field(default_factory=SizeBounds)
    metric_cfg: MetricConfig = field(default_factory=MetricConfig)
    chunker_cfg: ChunkerConfig = field(default_factory=ChunkerConfig)
    portfolio: tuple[PortfolioEntry, ...] = ()
    embedding_endpoint: str | None = None
    embedding_dimension: int = 256
    llm_endpoint: str | None = None
    llm_model: str = "default"
    replay_dir: Path | None = None
    workers: int = 4


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    for key in ("corpus_dir", "output_dir"):
        if key not in raw:
            raise ConfigError(f"config missing required key {key!r}")
    corpus_dir = Path(raw["corpus_dir"])
    sidecar_dir = Path(raw.get("sidecar_dir", raw["corpus_dir"]))
    if not corpus_dir.is_dir():
        raise ConfigError(f"corpus_dir {corpus_dir} does not exist")

    token_counter = raw.get("token_counter", "whitespace")
    b = raw.get("bounds", {})
    bounds = SizeBounds(
        min=b.get("min", 100), max=b.get("max", 1100), merge_cap=b.get("merge_cap", 1150)
    )
    m = raw.get("metrics", {})
    metric_cfg = MetricConfig(
        bounds=bounds,
        bi_tolerance=m.get("bi_tolerance", 5),
        dcc_budget=m.get("dcc_budget", 3000),
        window_step=m.get("window_step", 1),
        token_counter=token_counter,
    )
    c = raw.get("chunker", {})
    chunker_cfg = ChunkerConfig(
        target_size=c.get("target_size", 1100),
        overlap=c.get("overlap", 0),
        sentences_per_chunk=c.get("sentences_per_chunk", 5),
        sample_budget=c.get("sample_budget", 8000),
        token_counter=token_counter,
    )

    portfolio: tuple[PortfolioEntry, ...]
    if "portfolio" in raw:
        entries = []
        for p in raw["portfolio"]:
            cfg = chunker_cfg
            if "target_size" in p:
                cfg = replace(cfg, target_size=p["target_size"])
            entries.append(
                PortfolioEntry(
                    name=p["name"],
                    kind=p["kind"],
                    config=cfg,
                    postprocess=p.get("postprocess", True),
                )
            )
        portfolio = tuple(entries)
    else:
        portfolio = default_portfolio(token_counter)

    emb = raw.get("embedding", {})
    llm = raw.get("llm", {})
    replay = llm.get("replay_dir")
    return RunConfig(
        corpus_dir=corpus_dir,
        sidecar_dir=sidecar_dir,
        output_dir=Path(raw["output_dir"]),
        token_counter=token_counter,
        bounds=bounds,
        metric_cfg=metric_cfg,
        chunker_cfg=chunker_cfg,
        portfolio=portfolio,
        embedding_endpoint=emb.get("endpoint"),
        embedding_dimension=emb.get("dimension", 256),
        llm_endpoint=llm.get("endpoint"),
        llm_model=llm.get("model", "default"),
        replay_dir=Path(replay) if replay else None,
        workers=raw.get("workers", 4),
    )


def _make_provider(cfg: RunConfig) -> EmbeddingProvider:
    if cfg.embedding_endpoint:
        return RemoteEmbeddingProvider(
            cfg.embedding_endpoint, dimension=cfg.embedding_dimension
        )
    return HashEmbedder(cfg.embedding_dimension)


def _make_llm(cfg: RunConfig) -> LLMClient | None:
    if cfg.replay_dir:
        return ReplayLLMClient(cfg.replay_dir)
    if cfg.llm_endpoint:
        import os

        return HttpLLMClient(
            cfg.llm_endpoint, cfg.llm_model, api_key=os.environ.get("LLM_API_KEY")
        )
    return None


def iter_documents(cfg: RunConfig) -> list[Document]:
    docs = []
    for md in sorted(cfg.corpus_dir.glob("*.md")):
        sidecar = cfg.sidecar_dir / f"{md.stem}.json"
        docs.append(load_document(md, sidecar if sidecar.exists() else None))
    return docs


def _token_stats(doc: Document, chunking, counter) -> list[int]:
    return [counter.count(doc.text[c.start : c.end]) for c in chunking.chunks]


STATS_COLUMNS = ("mean", "max", "min", "std", "chunks", "time")


def summarize_run(token_counts: list[int], n_chunks: int, elapsed_s: float) -> dict:
    """Table-style size statistics: mean/max/min/std tokens, chunk count,
    wall time."""
    if token_counts:
        mean = sum(token_counts) / len(token_counts)
        std = statistics.pstdev(token_counts) if len(token_counts) > 1 else 0.0
        lo, hi = min(token_counts), max(token_counts)
    else:
        mean = std = 0.0
        lo = hi = 0
    return {
        "mean": round(mean, 1),
        "max": hi,
        "min": lo,
        "std": round(std, 1),
        "chunks": n_chunks,
        "time": round(elapsed_s, 2),
    }


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load_or_exit(config_path: str) -> RunConfig:
    try:
        return load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@main.command("chunk")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--method", required=True, help="portfolio entry name to run")
@click.option("--no-postprocess", is_flag=True, help="skip size regularization")
@click.option("--counter", default=None, help="token counter override")
@click.option("--replay-dir", default=None, type=click.Path())
@click.option("--workers", default=None, type=int)
def cmd_chunk(config_path, method, no_postprocess, counter, replay_dir, workers):
    """Run one chunking method over the corpus; emit chunk JSONL per
    document plus size/runtime statistics."""
    cfg = _load_or_exit(config_path)
    if counter:
        cfg = replace(
            cfg,
            token_counter=counter,
            metric_cfg=replace(cfg.metric_cfg, token_counter=counter),
            chunker_cfg=replace(cfg.chunker_cfg, token_counter=counter),
        )
    if replay_dir:
        cfg = replace(cfg, replay_dir=Path(replay_dir))
    if workers:
        cfg = replace(cfg, workers=workers)

    entry = next((e for e in cfg.portfolio if e.name == method), None)
    if entry is None:
        click.echo(f"config error: method {method!r} not in portfolio", err=True)
        sys.exit(EXIT_CONFIG)
    if no_postprocess:
        entry = replace(entry, postprocess=False)

    llm = _make_llm(cfg)
    tok = get_counter(cfg.token_counter)
    out_dir = cfg.output_dir / entry.name
    out_dir.mkdir(parents=True, exist_ok=True)

    docs = iter_documents(cfg)
    all_counts: list[int] = []
    n_chunks = 0
    failed: list[str] = []
    started = time.perf_counter()

    def one(doc: Document):
        chunking = run_chunker(doc, entry, llm)
        if entry.postprocess:
            chunking = postprocess(chunking, doc, cfg.bounds, entry.config)
        return doc, chunking

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = {doc.id: pool.submit(one, doc) for doc in docs}
    for doc_id in sorted(futures):
        try:
            doc, chunking = futures[doc_id].result()
        except Exception as exc:
            log.error("chunking failed for %s: %s", doc_id, exc)
            failed.append(doc_id)
            continue
        (out_dir / f"{doc_id}.chunks.jsonl").write_text(
            chunking_to_jsonl(doc, chunking, tok), encoding="utf-8"
        )
        counts = _token_stats(doc, chunking, tok)
        all_counts.extend(counts)
        n_chunks += len(counts)
    elapsed = time.perf_counter() - started

    stats = summarize_run(all_counts, n_chunks, elapsed)
    stats_rec = {"method": entry.name, **stats, "failed_docs": failed}
    (out_dir / "stats.json").write_text(
        json.dumps(stats_rec, ensure_ascii=False, indent=2), encoding="utf-8"
    )
    click.echo(
        f"{entry.name}: " + "  ".join(f"{k}={stats[k]}" for k in STATS_COLUMNS)
    )
    sys.exit(EXIT_PARTIAL if failed else EXIT_OK)


def _aggregate_reports(reports: list[MetricReport]) -> dict:
    """Per-metric mean and stdev across documents, skipping inapplicable
    values."""
    agg = {}
    for name in (*METRIC_NAMES, "mean"):
        vals = [
            getattr(r, name) if name != "mean" else r.mean
            for r in reports
            if (name == "mean" or getattr(r, name) is not None)
        ]
        if vals:
            agg[name] = {
                "mean": round(sum(vals) / len(vals), 4),
                "std": round(statistics.pstdev(vals) if len(vals) > 1 else 0.0, 4),
                "n": len(vals),
            }
        else:
            agg[name] = {"mean": None, "std": None, "n": 0}
    return agg


@main.command("score")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option(
    "--chunks-dir",
    required=True,
    type=click.Path(exists=True),
    help="directory of <doc_id>.chunks.jsonl files",
)
@click.option("--method", default="imported", help="method label for the reports")
def cmd_score(config_path, chunks_dir, method):
    """Score chunk JSONL against the corpus; emit per-document metric
    reports plus a mean +/- stdev aggregate."""
    cfg = _load_or_exit(config_path)
    provider = _make_provider(cfg)
    docs = {d.id: d for d in iter_documents(cfg)}

    chunk_files = sorted(Path(chunks_dir).glob("*.chunks.jsonl"))
    missing = [p.name for p in chunk_files if p.name.removesuffix(".chunks.jsonl") not in docs]
    if missing:
        click.echo(f"error: chunk files without matching corpus docs: {missing}", err=True)
        sys.exit(EXIT_CONFIG)

    reports: list[MetricReport] = []
    failed: list[str] = []
    for path in chunk_files:
        doc_id = path.name.removesuffix(".chunks.jsonl")
        doc = docs[doc_id]
        try:
            chunking = chunking_from_jsonl(path.read_text(encoding="utf-8"), method)
            reports.append(score(doc, chunking, cfg.metric_cfg, provider))
        except Exception as exc:
            log.error("scoring failed for %s: %s", doc_id, exc)
            failed.append(doc_id)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    report_path = cfg.output_dir / "reports.jsonl"
    report_path.write_text(
        "".join(r.to_json() + "\n" for r in reports), encoding="utf-8"
    )
    agg = _aggregate_reports(reports)
    agg_rec = {"method": method, "token_counter": cfg.token_counter, "metrics": agg}
    (cfg.output_dir / "aggregate.json").write_text(
        json.dumps(agg_rec, ensure_ascii=False, indent=2), encoding="utf-8"
    )
    for name in (*METRIC_NAMES, "mean"):
        a = agg[name]
        if a["n"]:
            click.echo(f"{name}: {a['mean']:.4f} +/- {a['std']:.4f} (n={a['n']})")
        else:
            click.echo(f"{name}: n/a")
    sys.exit(EXIT_PARTIAL if failed else EXIT_OK)


@main.command("select")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--replay-dir", default=None, type=click.Path())
@click.option("--workers", default=None, type=int)
def cmd_select(config_path, replay_dir, workers):
    """Full adaptive run: chunk with every portfolio method, score, select
    the argmax per document; emit selections plus a selection-share
    summary."""
    cfg = _load_or_exit(config_path)
    if replay_dir:
        cfg = replace(cfg, replay_dir=Path(replay_dir))
    if workers:
        cfg = replace(cfg, workers=workers)
    provider = _make_provider(cfg)
    llm = _make_llm(cfg)
    tok = get_counter(cfg.token_counter)

    docs = iter_documents(cfg)
    failed: list[str] = []
    results = []
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = {
            doc.id: pool.submit(
                select_best, doc, cfg.portfolio, cfg.metric_cfg, provider, llm, cfg.bounds
            )
            for doc in docs
        }
    doc_by_id = {d.id: d for d in docs}
    for doc_id in sorted(futures):
        try:
            results.append(futures[doc_id].result())
        except Exception as exc:
            log.error("selection failed for %s: %s", doc_id, exc)
            failed.append(doc_id)

    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "selections.jsonl").write_text(
        "".join(r.to_json() + "\n" for r in results), encoding="utf-8"
    )
    chunks_dir = cfg.output_dir / "selected_chunks"
    chunks_dir.mkdir(exist_ok=True)
    for r in results:
        (chunks_dir / f"{r.doc_id}.chunks.jsonl").write_text(
            chunking_to_jsonl(doc_by_id[r.doc_id], r.chunking, tok), encoding="utf-8"
        )

    stats = selection_stats(results)
    summary = [{"method": m, "percent": p} for m, p in stats]
    (cfg.output_dir / "selection_summary.json").write_text(
        json.dumps(summary, indent=2), encoding="utf-8"
    )
    for m, p in stats:
        click.echo(f"{m:<24s} {p:>3d}%")
    sys.exit(EXIT_PARTIAL if failed else EXIT_OK)


def _render_table(rows: list[dict], columns: list[str]) -> str:
    """Aligned plain-text table."""
    widths = {
        c: max(len(c), *(len(str(r.get(c, ""))) for r in rows)) if rows else len(c)
        for c in columns
    }
    lines = ["  ".join(c.ljust(widths[c]) for c in columns)]
    lines.append("  ".join("-" * widths[c] for c in columns))
    for r in rows:
        lines.append("  ".join(str(r.get(c, "")).ljust(widths[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _svg_histogram(values: list[float], title: str, bins: int = 20) -> str:
    """Minimal standalone SVG histogram."""
    width, height, pad = 480, 240, 30
    if not values:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"><text x="10" y="20">{title}: no data</text></svg>'
    lo, hi = min(values), max(values)
    span = (hi - lo) or 1.0
    counts = [0] * bins
    for v in values:
        idx = min(int((v - lo) / span * bins), bins - 1)
        counts[idx] += 1
    peak = max(counts) or 1
    bar_w = (width - 2 * pad) / bins
    bars = []
    for i, n in enumerate(counts):
        h = (height - 2 * pad) * n / peak
        x = pad + i * bar_w
        y = height - pad - h
        bars.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w - 1:.1f}" height="{h:.1f}" fill="#4477aa"/>'
        )
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        f'<text x="{pad}" y="18" font-size="12">{title}</text>'
        + "".join(bars)
        + f'<text x="{pad}" y="{height - 8}" font-size="10">{lo:.3g}</text>'
        f'<text x="{width - pad - 30}" y="{height - 8}" font-size="10">{hi:.3g}</text>'
        "</svg>"
    )


@main.command("report")
@click.option(
    "--results-dir", required=True, type=click.Path(exists=True),
    help="directory holding stats.json / reports.jsonl / selection_summary.json outputs",
)
def cmd_report(results_dir):
    """Render human-readable tables and SVG metric histograms from emitted
    JSONL results."""
    results_dir = Path(results_dir)
    out: list[str] = []

    stats_rows = []
    for stats_file in sorted(results_dir.rglob("stats.json")):
        stats_rows.append(json.loads(stats_file.read_text(encoding="utf-8")))
    if stats_rows:
        out.append("Chunk size statistics (tokens)\n")
        out.append(_render_table(stats_rows, ["method", *STATS_COLUMNS]))
        out.append("\n")

    report_rows = []
    metric_values: dict[str, list[float]] = {n: [] for n in METRIC_NAMES}
    for reports_file in sorted(results_dir.rglob("reports.jsonl")):
        for line in reports_file.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            row = {"doc_id": rec["doc_id"], "method": rec["method"]}
            for n in (*METRIC_NAMES, "mean"):
                v = rec.get(n)
                row[n] = "n/a" if v is None else f"{v:.4f}"
                if n in metric_values and v is not None:
                    metric_values[n].append(v)
            report_rows.append(row)
    if report_rows:
        out.append("Per-document metric reports\n")
        out.append(_render_table(report_rows, ["doc_id", "method", *METRIC_NAMES, "mean"]))
        out.append("\n")
        for name, vals in metric_values.items():
            if vals:
                svg = _svg_histogram(vals, f"{name} distribution")
                (results_dir / f"hist_{name}.svg").write_text(svg, encoding="utf-8")

    summary_rows = []
    for summary_file in sorted(results_dir.rglob("selection_summary.json")):
        summary_rows.extend(json.loads(summary_file.read_text(encoding="utf-8")))
    if summary_rows:
        out.append("Adaptive selection shares\n")
        out.append(_render_table(summary_rows, ["method", "percent"]))

    text = "".join(out) if out else "no results found\n"
    (results_dir / "report.txt").write_text(text, encoding="utf-8")
    click.echo(text, nl=False)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
