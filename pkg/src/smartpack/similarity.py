"""Embedding providers, cosine similarity and the memoized subset score table.

The one-argument score ``phi`` compares the text decoded from a subset of
message positions against the full message, using whatever embedding
provider is configured. The empty subset scores 0 by convention: an empty
decoded message carries no semantic content.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass

import numpy as np

from .message import Dictionary, Message, reconstruct_text


class ZeroVectorError(ValueError):
    """Cosine similarity is undefined for a zero vector."""


class DimensionMismatchError(ValueError):
    """Operands do not share the same embedding dimension."""


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two nonzero vectors of equal dimension."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimensions differ: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity of a zero vector")
    return float(np.dot(a, b) / (na * nb))


class DeterministicEmbedder:
    """Hash-seeded pseudo-random word vectors; text embeds to their normalized sum.

    Deterministic across processes and platforms: each word's unit vector is
    drawn from a PCG64 stream keyed by sha256(seed, word). Components are
    nonnegative and sparse (folded normal with a 0.15 keep rate), so any two
    texts sharing vocabulary score in [0, 1] -- the same cone geometry real
    text encoders exhibit -- while distinct words stay weakly aligned. The
    empty text embeds to the zero vector; callers apply the phi(empty) = 0
    convention. Safe for concurrent embed calls (the word cache tolerates
    duplicate insertion of identical values).
    """

    KEEP_RATE = 0.15

    def __init__(self, seed: int, dim: int):
        if dim < 8:
            raise ValueError("embedding dimension must be >= 8")
        self.seed = int(seed)
        self.dim = int(dim)
        self.name = f"det:{self.seed}:{self.dim}"
        self._word_vecs: dict[str, np.ndarray] = {}

    def _word_vector(self, word: str) -> np.ndarray:
        vec = self._word_vecs.get(word)
        if vec is None:
            digest = hashlib.sha256(f"{self.seed}|{word}".encode()).digest()
            rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:8], "big")))
            vec = np.abs(rng.standard_normal(self.dim))
            mask = rng.random(self.dim) < self.KEEP_RATE
            if mask.any():
                vec = vec * mask
            vec /= np.linalg.norm(vec)
            self._word_vecs[word] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        words = text.split()
        if not words:
            return np.zeros(self.dim)
        total = np.zeros(self.dim)
        for w in words:
            total += self._word_vector(w)
        norm = np.linalg.norm(total)
        if norm == 0.0:
            return np.zeros(self.dim)
        return total / norm


def deterministic_embedder(seed: int, dim: int) -> DeterministicEmbedder:
    return DeterministicEmbedder(seed, dim)


class CachedEmbedder:
    """JSON Lines embedding cache, read-through and write-back.

    Each record is ``{"text": str, "v": [float, ...]}``. Without a base
    provider the cache is the sole source and misses raise ``KeyError``;
    with one, misses are computed, appended to the file and kept in memory.
    """

    def __init__(self, path, base=None):
        self.path = str(path)
        self.base = base
        self._vecs: dict[str, np.ndarray] = {}
        self.dim = 0
        try:
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    self._vecs[rec["text"]] = np.asarray(rec["v"], dtype=float)
        except FileNotFoundError:
            if base is None:
                raise
        if self._vecs:
            dims = {v.shape[0] for v in self._vecs.values()}
            if len(dims) != 1:
                raise DimensionMismatchError(f"cache file mixes dimensions: {sorted(dims)}")
            self.dim = dims.pop()
        if base is not None:
            if self.dim and self.dim != base.dim:
                raise DimensionMismatchError(
                    f"cache dim {self.dim} does not match provider dim {base.dim}"
                )
            self.dim = base.dim
        self.name = f"cache:{self.path}" if base is None else f"cache:{self.path}+{base.name}"

    def embed(self, text: str) -> np.ndarray:
        vec = self._vecs.get(text)
        if vec is not None:
            return vec
        if self.base is None:
            raise KeyError(f"text not in embedding cache: {text!r}")
        vec = self.base.embed(text)
        self._vecs[text] = vec
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"text": text, "v": [float(x) for x in vec]}) + "\n")
        return vec


class RemoteEmbedder:
    """HTTP client for the embedding sidecar protocol.

    ``GET /info`` supplies the model name and dimension at construction;
    ``POST /embed`` with ``{"texts": [...]}`` returns one vector per text.
    """

    def __init__(self, url: str, timeout: float = 30.0):
        import requests

        self._requests = requests
        self.url = url.rstrip("/")
        self.timeout = timeout
        info = requests.get(f"{self.url}/info", timeout=timeout).json()
        self.dim = int(info["dim"])
        self.name = f"remote:{info['model']}"

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: list[str]) -> list[np.ndarray]:
        resp = self._requests.post(
            f"{self.url}/embed", json={"texts": texts}, timeout=self.timeout
        )
        resp.raise_for_status()
        payload = resp.json()
        return [np.asarray(v, dtype=float) for v in payload["vectors"]]


@dataclass
class SubsetScoreTable:
    """Memoized phi scores for position subsets of one message.

    Keys are canonical position bitmasks. Reads are lock-free; insertion is
    insert-if-absent, so concurrent duplicate computation is acceptable but
    divergent values are not (the provider is deterministic).
    """

    msg: Message
    dictionary: Dictionary
    provider: object

    def __post_init__(self):
        self._scores: dict[int, float] = {0: 0.0}
        self._text_scores: dict[str, float] = {}
        self._lock = threading.Lock()
        self._full = np.asarray(self.provider.embed(self.msg.text(self.dictionary)), dtype=float)
        norm = float(np.linalg.norm(self._full))
        if norm == 0.0:
            raise ZeroVectorError("full message embeds to the zero vector")
        self._full_unit = self._full / norm

    def phi(self, subset_mask: int) -> float:
        """Similarity of the subset's decoded text to the full message."""
        score = self._scores.get(subset_mask)
        if score is None:
            text = reconstruct_text(subset_mask, self.msg, self.dictionary)
            score = self._phi_of_text(text)
            with self._lock:
                self._scores.setdefault(subset_mask, score)
        return score

    def phi_text(self, text: str, memo: bool = True) -> float:
        """Similarity of arbitrary decoded text (possibly corrupted) to the message."""
        if memo:
            score = self._text_scores.get(text)
            if score is None:
                score = self._phi_of_text(text)
                with self._lock:
                    self._text_scores.setdefault(text, score)
            return score
        return self._phi_of_text(text)

    def _phi_of_text(self, text: str) -> float:
        vec = np.asarray(self.provider.embed(text), dtype=float)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            return 0.0
        return float(np.dot(vec, self._full_unit) / norm)

    def phi_vector(self, masks) -> np.ndarray:
        return np.array([self.phi(m) for m in masks])


def provider_from_spec(spec: str):
    """Build a provider from ``det:SEED:DIM``, ``cache:PATH`` or ``remote:URL``."""
    kind, _, rest = spec.partition(":")
    if kind == "det":
        seed, _, dim = rest.partition(":")
        if not seed or not dim:
            raise ValueError(f"expected det:SEED:DIM, got {spec!r}")
        return DeterministicEmbedder(int(seed), int(dim))
    if kind == "cache":
        if not rest:
            raise ValueError("cache provider needs a path")
        return CachedEmbedder(rest)
    if kind == "remote":
        if not rest:
            raise ValueError("remote provider needs a URL")
        return RemoteEmbedder(rest)
    raise ValueError(f"unknown provider spec {spec!r}")
