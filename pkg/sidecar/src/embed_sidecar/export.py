"""Embedding-cache exporter.

Embeds every caption of a corpus, every word of those captions, and every
order-preserving word subset named by an optional manifest, then writes the
JSON Lines cache the main package reads through its ``cache:PATH`` provider
(one ``{"text": ..., "v": [...]}`` record per line). A sibling
``<out>.meta.json`` records the encoder identity for traceability, since
the cache schema itself is fixed by the consumer.

The manifest is JSON: ``{"subsets": [[0, 2], [1], ...]}``. Each position
list is applied to every caption (positions beyond a caption's length drop
out); ``scripts/all_subsets_manifest.py`` in this directory's repo builds
the full power set for a fixed message length, which is what the consumer's
score table needs to run entirely from the cache.

Tokenization mirrors the consumer's: lowercase, punctuation stripped,
whitespace split.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
from pathlib import Path

from .encoders import load_encoder
from .service import VERSION

_PUNCT = re.compile(r"[^\w\s'-]")


def normalize_text(text: str) -> str:
    return " ".join(_PUNCT.sub(" ", text.lower()).split())


def collect_texts(captions: list[str], manifest_subsets: list[list[int]] | None) -> list[str]:
    """Deduplicated, deterministically ordered texts to embed."""
    seen: dict[str, None] = {}
    normalized = [normalize_text(c) for c in captions]
    for cap in normalized:
        if cap:
            seen.setdefault(cap, None)
    for cap in normalized:
        for word in cap.split():
            seen.setdefault(word, None)
    if manifest_subsets:
        for cap in normalized:
            tokens = cap.split()
            for subset in manifest_subsets:
                picked = " ".join(tokens[i] for i in sorted(set(subset)) if i < len(tokens))
                if picked:
                    seen.setdefault(picked, None)
    return list(seen)


def export_cache(
    corpus_path,
    out_path,
    encoder,
    manifest_path=None,
    batch_size: int = 64,
) -> int:
    """Write the cache file; returns the record count. Partial output is
    removed if any batch fails."""
    corpus_path = Path(corpus_path)
    out_path = Path(out_path)
    captions = [line.strip() for line in corpus_path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not captions:
        raise ValueError(f"corpus {corpus_path} contains no captions")
    subsets = None
    if manifest_path is not None:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        subsets = manifest["subsets"]
    texts = collect_texts(captions, subsets)
    tmp_path = out_path.with_suffix(out_path.suffix + ".partial")
    try:
        with open(tmp_path, "w", encoding="utf-8") as fh:
            for start in range(0, len(texts), batch_size):
                batch = texts[start : start + batch_size]
                vectors = encoder.encode(batch)
                for text, vec in zip(batch, vectors):
                    fh.write(json.dumps({"text": text, "v": [float(x) for x in vec]}) + "\n")
    except Exception:
        tmp_path.unlink(missing_ok=True)
        raise
    os.replace(tmp_path, out_path)
    corpus_sha = hashlib.sha256(corpus_path.read_bytes()).hexdigest()
    meta = {
        "model": encoder.name,
        "dim": encoder.dim,
        "version": VERSION,
        "records": len(texts),
        "corpus_sha256": corpus_sha,
    }
    Path(str(out_path) + ".meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8"
    )
    return len(texts)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Export an embedding cache for a caption corpus")
    parser.add_argument("corpus", help="text file, one caption per line")
    parser.add_argument("out", help="cache file to write (JSON Lines)")
    parser.add_argument("--manifest", default=None, help="JSON file naming position subsets")
    parser.add_argument(
        "--model",
        default=os.environ.get("EMBED_MODEL", ""),
        help="checkpoint id, local path, or stub:SEED:DIM",
    )
    parser.add_argument("--batch-size", type=int, default=64)
    args = parser.parse_args(argv)
    encoder = load_encoder(args.model)
    count = export_cache(args.corpus, args.out, encoder, args.manifest, args.batch_size)
    print(f"wrote {count} records to {args.out} ({encoder.name})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
