"""Text encoders behind the service: a real CLIP checkpoint or a stub.

Encoders expose ``name``, ``dim`` and ``encode(texts) -> (n, dim) array``
and must be deterministic in inference: the same text always produces the
same vector.
"""

from __future__ import annotations

import hashlib

import numpy as np

DEFAULT_CHECKPOINT = "openai/clip-vit-base-patch32"


class ClipEncoder:
    """Pre-trained CLIP text tower via transformers; CPU inference, no grad."""

    def __init__(self, checkpoint: str = DEFAULT_CHECKPOINT):
        import torch
        from transformers import CLIPTextModelWithProjection, CLIPTokenizer

        self._torch = torch
        self.tokenizer = CLIPTokenizer.from_pretrained(checkpoint)
        self.model = CLIPTextModelWithProjection.from_pretrained(checkpoint)
        self.model.eval()
        self.name = checkpoint
        self.dim = int(self.model.config.projection_dim)

    def encode(self, texts: list[str]) -> np.ndarray:
        tokens = self.tokenizer(texts, padding=True, truncation=True, return_tensors="pt")
        with self._torch.no_grad():
            out = self.model(**tokens)
        return out.text_embeds.cpu().numpy().astype(float)


class StubEncoder:
    """Hash-seeded deterministic vectors for tests and offline development."""

    def __init__(self, seed: int = 0, dim: int = 32, fail_on: str | None = None):
        self.seed = int(seed)
        self.dim = int(dim)
        self.name = f"stub:{self.seed}:{self.dim}"
        self.fail_on = fail_on

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dim))
        for i, text in enumerate(texts):
            if self.fail_on is not None and text == self.fail_on:
                raise RuntimeError(f"stub encoder refused {text!r}")
            digest = hashlib.sha256(f"{self.seed}|{text}".encode()).digest()
            rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "big")))
            out[i] = rng.standard_normal(self.dim)
        return out


def load_encoder(spec: str):
    """``stub:SEED:DIM`` or a checkpoint identifier / local path for CLIP."""
    if spec.startswith("stub:"):
        _, seed, dim = spec.split(":")
        return StubEncoder(int(seed), int(dim))
    return ClipEncoder(spec or DEFAULT_CHECKPOINT)
