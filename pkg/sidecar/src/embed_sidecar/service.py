"""The HTTP surface: POST /embed and GET /info.

Requests are validated by hand so malformed bodies get 400 and oversized
batches 413 (schema-level validators would conflate both). Encoder access
is serialized; the service holds no per-request state.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

VERSION = "0.1.0"
MAX_BATCH = 256
MAX_TEXT_CHARS = 1024


def create_app(encoder_loader) -> FastAPI:
    """``encoder_loader`` is called once at startup; a raised error leaves the
    service alive but answering 503 until restarted with a loadable model."""
    state = {"encoder": None, "error": None}
    lock = threading.Lock()

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        try:
            state["encoder"] = encoder_loader()
        except Exception as err:  # noqa: BLE001 - degrade to 503, don't crash
            state["error"] = str(err)
        yield

    app = FastAPI(title="embed-sidecar", version=VERSION, lifespan=lifespan)

    @app.get("/info")
    def info():
        encoder = state["encoder"]
        if encoder is None:
            return JSONResponse(
                {"error": f"model not loaded: {state['error']}"}, status_code=503
            )
        return {"model": encoder.name, "dim": encoder.dim, "version": VERSION}

    @app.post("/embed")
    async def embed(request: Request):
        encoder = state["encoder"]
        if encoder is None:
            return JSONResponse(
                {"error": f"model not loaded: {state['error']}"}, status_code=503
            )
        try:
            payload = await request.json()
        except Exception:  # noqa: BLE001 - any parse failure is a client error
            return JSONResponse({"error": "body is not valid JSON"}, status_code=400)
        if not isinstance(payload, dict) or "texts" not in payload:
            return JSONResponse({"error": "expected {'texts': [...]}"}, status_code=400)
        texts = payload["texts"]
        if not isinstance(texts, list) or not texts:
            return JSONResponse({"error": "texts must be a nonempty list"}, status_code=400)
        if len(texts) > MAX_BATCH:
            return JSONResponse(
                {"error": f"batch of {len(texts)} exceeds limit {MAX_BATCH}"}, status_code=413
            )
        for t in texts:
            if not isinstance(t, str):
                return JSONResponse({"error": "texts must be strings"}, status_code=400)
            if len(t) > MAX_TEXT_CHARS:
                return JSONResponse(
                    {"error": f"text longer than {MAX_TEXT_CHARS} characters"}, status_code=400
                )
        with lock:
            vectors = encoder.encode(texts)
        return {
            "vectors": [[float(x) for x in row] for row in vectors],
            "dim": encoder.dim,
            "model": encoder.name,
        }

    return app
