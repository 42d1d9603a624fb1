"""Command-line entry points: run the HTTP service, or generate a
sentence/coref sidecar JSON file for a markdown document."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from nlp_sidecar.nlp import coref_pairs, guess_language, sentence_spans


@click.group()
def main() -> None:
    """Sentence-embedding and coreference sidecar tools."""


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True, type=int)
@click.option(
    "--embedding-model",
    default="hash-256",
    show_default=True,
    help="hash-<d> for the built-in hashed embedder, or a local model directory",
)
@click.option("--device", default="cpu", show_default=True)
def cmd_serve(host: str, port: int, embedding_model: str, device: str) -> None:
    """Run the HTTP service."""
    import uvicorn

    from nlp_sidecar.app import ModelRegistry, create_app

    registry = ModelRegistry(embedding_model=embedding_model, device=device)
    if registry.load_error:
        click.echo(f"warning: embedding model failed to load: {registry.load_error}", err=True)
    uvicorn.run(create_app(registry), host=host, port=port, log_level="warning")


def build_sidecar(markdown_path: Path, out_path: Path, language: str = "auto") -> dict:
    """Compute sentences (and, for English, coref pairs) for a markdown
    file and write them into the sidecar JSON.

    Fields already present in an existing sidecar file that this tool
    does not compute (blocks, page_breaks) are preserved.
    """
    text = markdown_path.read_text(encoding="utf-8")
    sidecar: dict = {}
    if out_path.exists():
        sidecar = json.loads(out_path.read_text(encoding="utf-8"))
        if not isinstance(sidecar, dict):
            raise click.ClickException(f"{out_path} is not a JSON object")

    lang = guess_language(text) if language == "auto" else language
    sidecar["language"] = lang
    sidecar["sentences"] = [list(span) for span in sentence_spans(text)]
    if lang == "en":
        sidecar["coref_pairs"] = [
            {
                "entity_start": p.entity_start,
                "pronoun_end": p.pronoun_end,
                "entity_text": p.entity_text,
                "pronoun_text": p.pronoun_text,
            }
            for p in coref_pairs(text)
        ]
        sidecar.pop("warning", None)
    else:
        sidecar.pop("coref_pairs", None)
        sidecar["warning"] = (
            f"coreference skipped: language {lang!r} is not supported (English only)"
        )
    out_path.write_text(
        json.dumps(sidecar, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    return sidecar


@main.command("sidecar")
@click.argument("markdown", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("out", type=click.Path(dir_okay=False, path_type=Path))
@click.option(
    "--language",
    default="auto",
    show_default=True,
    help='ISO code to force, or "auto" to guess',
)
def cmd_sidecar(markdown: Path, out: Path, language: str) -> None:
    """Write sentence spans and coref pairs for MARKDOWN into OUT."""
    sidecar = build_sidecar(markdown, out, language)
    n_pairs = len(sidecar.get("coref_pairs", []))
    click.echo(
        f"{out}: language={sidecar['language']} "
        f"sentences={len(sidecar['sentences'])} coref_pairs={n_pairs}"
    )
    if "warning" in sidecar:
        click.echo(f"warning: {sidecar['warning']}", err=True)


if __name__ == "__main__":
    sys.exit(main())
