"""Read-only HTTP/JSON service over a frozen model + signal index."""

import time

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import retrieval
from .errors import StaleIndexError

MAX_RESPONSE_POINTS = 256


class SearchRequest(BaseModel):
    query_text: str = Field(min_length=1)
    k: int = Field(default=10, ge=1, le=100)


def downsample(values, limit=MAX_RESPONSE_POINTS):
    """Bucket-mean downsampling to at most `limit` points."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if n <= limit:
        return [float(v) for v in values]
    edges = np.linspace(0, n, limit + 1).astype(int)
    return [float(values[a:b].mean()) for a, b in zip(edges[:-1], edges[1:])]


def create_app(model, index, corpus, static_dir=None):
    """Build the app; refuses to start on a model/index fingerprint mismatch."""
    if index.modality != "signal":
        raise StaleIndexError("serving requires a signal-modality index")
    if index.fingerprint != model.fingerprint():
        raise StaleIndexError("model and index fingerprints differ; rebuild the index")

    by_id = {ex.signal.id: ex for ex in corpus}
    fingerprint = model.fingerprint()
    counts = {
        "corpus_size": len(corpus),
        "index_size": len(index),
        "requests": 0,
    }

    app = FastAPI(title="clasp", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    def invalid_request(_request, exc):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/api/health")
    def health():
        return {"status": "ok", "fingerprint": fingerprint}

    @app.get("/api/stats")
    def stats():
        return dict(counts)

    @app.post("/api/search")
    def search(req: SearchRequest):
        counts["requests"] += 1
        t0 = time.perf_counter()
        result = retrieval.query_by_text(req.query_text, index, model, req.k)
        latency_ms = (time.perf_counter() - t0) * 1000
        results = []
        for item_id, score in result.ranked:
            ex = by_id.get(item_id)
            entry = {"id": item_id, "score": score}
            if ex is not None:
                entry["values"] = downsample(ex.signal.values)
                entry["caption"] = ex.caption.text
            results.append(entry)
        return {
            "results": results,
            "model_fingerprint": fingerprint,
            "latency_ms": latency_ms,
        }

    @app.get("/api/signal/{item_id}")
    def signal(item_id: str):
        ex = by_id.get(item_id)
        if ex is None:
            raise HTTPException(status_code=404, detail=f"unknown id {item_id!r}")
        return {
            "id": item_id,
            "values": [float(v) for v in ex.signal.values],
            "caption": ex.caption.text,
            "labels": {
                "trend": ex.labels.trend,
                "periodic": ex.labels.periodic,
                "fluctuation": ex.labels.fluctuation,
            },
        }

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
