from pathlib import Path

import numpy as np
import pytest

from smartpack.message import Dictionary, Message, tokenize
from smartpack.similarity import SubsetScoreTable, deterministic_embedder

DATA_DIR = Path(__file__).parent / "data"

TIGER_WORDS = ("cat", "that", "looks", "like", "a", "tiger")


def phi_direct(provider, words: tuple[str, ...], mask: int) -> float:
    """Subset score straight from the provider, bypassing the score table."""
    text = " ".join(words[k] for k in range(len(words)) if mask >> k & 1)
    vec = provider.embed(text)
    full = provider.embed(" ".join(words))
    nv = np.linalg.norm(vec)
    if nv == 0.0:
        return 0.0
    return float(np.dot(vec, full) / (nv * np.linalg.norm(full)))


@pytest.fixture(scope="session")
def provider():
    return deterministic_embedder(42, 64)


@pytest.fixture(scope="session")
def tiger_dictionary():
    return Dictionary(TIGER_WORDS)


@pytest.fixture(scope="session")
def tiger_msg(tiger_dictionary):
    return tokenize("cat that looks like a tiger", tiger_dictionary)


@pytest.fixture(scope="session")
def tiger_table(tiger_msg, tiger_dictionary, provider):
    return SubsetScoreTable(tiger_msg, tiger_dictionary, provider)


@pytest.fixture(scope="session")
def fixture_dictionary():
    return Dictionary.from_file(DATA_DIR / "words.txt")


@pytest.fixture(scope="session")
def fixture_captions():
    return [c for c in (DATA_DIR / "corpus_k6.txt").read_text().splitlines() if c]


@pytest.fixture(scope="session")
def fixture_corpus(fixture_captions, fixture_dictionary) -> list[Message]:
    return [tokenize(c, fixture_dictionary) for c in fixture_captions]


@pytest.fixture(scope="session")
def fixture_tables(fixture_corpus, fixture_dictionary, provider):
    return [SubsetScoreTable(m, fixture_dictionary, provider) for m in fixture_corpus]
