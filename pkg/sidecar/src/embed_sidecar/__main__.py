"""Run the sidecar: EMBED_MODEL selects the checkpoint, EMBED_PORT the port."""

from __future__ import annotations

import os

import uvicorn

from .encoders import load_encoder
from .service import create_app


def main() -> None:
    spec = os.environ.get("EMBED_MODEL", "")
    port = int(os.environ.get("EMBED_PORT", "8901"))
    app = create_app(lambda: load_encoder(spec))
    uvicorn.run(app, host="0.0.0.0", port=port)


if __name__ == "__main__":
    main()
