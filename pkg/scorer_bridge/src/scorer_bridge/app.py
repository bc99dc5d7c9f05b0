"""FastAPI application exposing the scorer wire protocol.

Endpoints: GET /manifest, POST /embed, /toxicity, /fluency, /judge.
All bodies are JSON over UTF-8, no streaming.  Error codes: 400 for bad
requests (empty batch, misaligned lists), 501 when the judge capability
is not deployed, 503 when the scoring models are not loaded.
"""

from __future__ import annotations

import os
import threading

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .backends import ModelBackend, ModelNotLoaded, StubBackend

ALL_CAPABILITIES = ("embed", "toxicity", "fluency", "judge")


class TextBatch(BaseModel):
    texts: list[str]


class TripleBatch(BaseModel):
    inputs: list[str]
    golds: list[str]
    gens: list[str]


def create_app(stub: bool | None = None, capabilities=None, models_dir=None) -> FastAPI:
    """Build the service; arguments default to the SCORER_* environment."""
    if stub is None:
        stub = os.environ.get("SCORER_STUB") == "1"
    if models_dir is None:
        models_dir = os.environ.get("SCORER_MODELS_DIR")
    if capabilities is None:
        capabilities = ALL_CAPABILITIES
    capabilities = tuple(c for c in ALL_CAPABILITIES if c in set(capabilities))

    backend = StubBackend() if stub else ModelBackend(models_dir)
    # model invocation is serialized: requests may arrive concurrently but
    # the backend is not assumed reentrant
    lock = threading.Lock()
    app = FastAPI(title="scorer-bridge")

    def call(method, *args):
        try:
            with lock:
                return method(*args)
        except ModelNotLoaded as exc:
            raise HTTPException(status_code=503, detail=str(exc))

    def require(capability):
        if capability not in capabilities:
            raise HTTPException(
                status_code=501, detail=f"capability {capability!r} not deployed"
            )

    @app.get("/manifest")
    def manifest():
        return {
            "capabilities": list(capabilities),
            "dim": backend.dim,
            "models": backend.model_ids,
            "stub": stub,
        }

    @app.post("/embed")
    def embed(batch: TextBatch):
        require("embed")
        if not batch.texts:
            raise HTTPException(status_code=400, detail="empty text batch")
        return {"vectors": call(backend.embed, batch.texts)}

    @app.post("/toxicity")
    def toxicity(batch: TextBatch):
        require("toxicity")
        if not batch.texts:
            raise HTTPException(status_code=400, detail="empty text batch")
        return {"non_toxicity": call(backend.non_toxicity, batch.texts)}

    @app.post("/fluency")
    def fluency(batch: TripleBatch):
        require("fluency")
        _check_aligned(batch)
        return {"scores": call(backend.fluency, batch.inputs, batch.golds, batch.gens)}

    @app.post("/judge")
    def judge(batch: TripleBatch):
        require("judge")
        _check_aligned(batch)
        sim, sta = call(backend.judge, batch.inputs, batch.golds, batch.gens)
        return {"sim": sim, "sta": sta}

    return app


def _check_aligned(batch: TripleBatch):
    if not (len(batch.inputs) == len(batch.golds) == len(batch.gens)):
        raise HTTPException(
            status_code=400,
            detail=(
                f"misaligned lists: inputs={len(batch.inputs)} "
                f"golds={len(batch.golds)} gens={len(batch.gens)}"
            ),
        )
    if not batch.gens:
        raise HTTPException(status_code=400, detail="empty batch")
