"""Synthetic six-word caption corpus for experiments and tests.

Captions follow common image-caption shapes, including the repeated-article
pattern ("a man rides a brown horse"), drawn from a fixed vocabulary with a
seeded generator so corpora are reproducible.
"""

from __future__ import annotations

import numpy as np

ARTICLES = ["a", "the", "one", "some"]
ADJECTIVES = [
    "small", "large", "brown", "white", "black", "yellow", "young", "old",
    "striped", "fluffy", "shiny", "wooden", "broken", "quiet", "busy", "bright",
]
NOUNS = [
    "cat", "dog", "tiger", "horse", "bird", "child", "man", "woman", "boat",
    "train", "car", "bicycle", "kitchen", "table", "bench", "street", "field",
    "beach", "mountain", "window", "pizza", "sandwich", "umbrella", "kite",
    "ball", "hat", "clock", "lamp", "garden", "river",
]
VERBS = [
    "rides", "holds", "watches", "chases", "carries", "touches", "crosses",
    "follows", "passes", "faces", "guards", "pulls",
]
PREPS = ["near", "beside", "under", "behind", "above", "across"]

# DUP repeats the first article drawn for the caption
TEMPLATES = [
    ("ART", "NOUN", "VERB", "DUP", "ADJ", "NOUN"),
    ("ART", "NOUN", "PREP", "DUP", "ADJ", "NOUN"),
    ("ART", "ADJ", "NOUN", "VERB", "DUP", "NOUN"),
    ("ART", "ADJ", "NOUN", "PREP", "DUP", "NOUN"),
    ("ART", "NOUN", "VERB", "ART", "ADJ", "NOUN"),
    ("ART", "ADJ", "NOUN", "VERB", "ART", "NOUN"),
]
POOLS = {"ART": ARTICLES, "ADJ": ADJECTIVES, "NOUN": NOUNS, "VERB": VERBS, "PREP": PREPS}


def vocabulary() -> list[str]:
    return sorted(set(ARTICLES + ADJECTIVES + NOUNS + VERBS + PREPS))


def make_caption(rng: np.random.Generator) -> str:
    template = TEMPLATES[rng.integers(0, len(TEMPLATES))]
    words: list[str] = []
    first_article = None
    for slot in template:
        if slot == "DUP":
            words.append(first_article)
            continue
        word = POOLS[slot][rng.integers(0, len(POOLS[slot]))]
        if slot == "ART" and first_article is None:
            first_article = word
        words.append(word)
    return " ".join(words)


def make_corpus(count: int, seed: int) -> list[str]:
    """``count`` distinct captions, deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    seen: set[str] = set()
    captions: list[str] = []
    while len(captions) < count:
        cap = make_caption(rng)
        if cap not in seen:
            seen.add(cap)
            captions.append(cap)
    return captions
