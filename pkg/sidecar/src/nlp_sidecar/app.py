"""HTTP service exposing /embed, /coref, and /health.

Every request and response body is validated against the wire schema
shipped with the package, so protocol drift fails loudly at the server.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from threading import Lock

import jsonschema
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from nlp_sidecar.embedding import load_embedding_model, normalize_rows
from nlp_sidecar.nlp import coref_pairs

_SCHEMA = json.loads(
    resources.files("nlp_sidecar").joinpath("wire_schema.json").read_text()
)


def _validator(name: str) -> jsonschema.Validator:
    return jsonschema.Draft202012Validator(
        {"$defs": _SCHEMA["$defs"], "$ref": f"#/$defs/{name}"}
    )


_VALIDATORS = {
    name: _validator(name)
    for name in (
        "embed_request",
        "embed_response",
        "coref_request",
        "coref_response",
        "health_response",
    )
}


def validate_message(name: str, payload) -> None:
    """Raise jsonschema.ValidationError when payload breaks the protocol."""
    _VALIDATORS[name].validate(payload)


@dataclass
class ModelRegistry:
    """Which models the service runs and where."""

    embedding_model: str = "hash-256"
    coref_model: str = "heuristic-en"
    device: str = "cpu"
    load_error: str | None = field(default=None, init=False)

    def __post_init__(self) -> None:
        self._lock = Lock()
        try:
            self.embedder = load_embedding_model(
                self.embedding_model, device=self.device
            )
        except Exception as exc:
            self.embedder = None
            self.load_error = f"{type(exc).__name__}: {exc}"


def create_app(registry: ModelRegistry | None = None) -> FastAPI:
    registry = registry or ModelRegistry()
    app = FastAPI(title="nlp-sidecar")

    async def _json_body(request: Request, schema: str) -> dict:
        try:
            payload = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(400, "request body is not valid JSON")
        try:
            validate_message(schema, payload)
        except jsonschema.ValidationError as exc:
            raise HTTPException(400, f"invalid request: {exc.message}")
        return payload

    @app.post("/embed")
    async def embed(request: Request) -> JSONResponse:
        payload = await _json_body(request, "embed_request")
        if registry.embedder is None:
            raise HTTPException(503, f"embedding model unavailable: {registry.load_error}")
        texts = payload["texts"]
        with registry._lock:
            if texts:
                vectors = normalize_rows(registry.embedder.encode(texts))
                rows = [v.tolist() for v in vectors]
            else:
                rows = []
        body = {"dim": registry.embedder.dimension, "vectors": rows}
        validate_message("embed_response", body)
        return JSONResponse(body)

    @app.post("/coref")
    async def coref(request: Request) -> JSONResponse:
        payload = await _json_body(request, "coref_request")
        pairs = coref_pairs(payload["text"])
        body = {
            "pairs": [
                {
                    "entity_start": p.entity_start,
                    "pronoun_end": p.pronoun_end,
                    "entity_text": p.entity_text,
                    "pronoun_text": p.pronoun_text,
                }
                for p in pairs
            ]
        }
        validate_message("coref_response", body)
        return JSONResponse(body)

    @app.get("/health")
    async def health() -> JSONResponse:
        body = {
            "ok": registry.embedder is not None,
            "models": {
                "embedding": registry.embedding_model,
                "coref": registry.coref_model,
            },
        }
        if registry.load_error:
            body["error"] = registry.load_error
        validate_message("health_response", body)
        return JSONResponse(body, status_code=200 if body["ok"] else 503)

    return app
