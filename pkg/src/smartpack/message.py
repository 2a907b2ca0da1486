"""Word-level messages, dictionaries, groups and packet arithmetic.

Words are identified by their position in the message (0-based), not by
string value, so a caption with repeated words still partitions cleanly.
Position subsets are canonically represented as bitmasks: bit ``k`` set
means position ``k`` is present.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class UnknownWordError(ValueError):
    """A token of the input text is not present in the dictionary."""


_PUNCT = re.compile(r"[^\w\s'-]")


def normalize_text(text: str) -> str:
    """Lowercase and strip punctuation; collapses whitespace."""
    return " ".join(_PUNCT.sub(" ", text.lower()).split())


@dataclass(frozen=True)
class Dictionary:
    """Ordered list of distinct words; a word's index is its position."""

    words: tuple[str, ...]
    index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self.words:
            raise ValueError("dictionary must contain at least one word")
        idx = {w: i for i, w in enumerate(self.words)}
        if len(idx) != len(self.words):
            raise ValueError("dictionary words must be distinct")
        object.__setattr__(self, "index", idx)

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def bits_per_word(self) -> int:
        """Bits needed to encode one word index, ceil(log2(size))."""
        return (self.size - 1).bit_length()

    @classmethod
    def from_file(cls, path) -> "Dictionary":
        with open(path, encoding="utf-8") as fh:
            words = tuple(line.strip() for line in fh if line.strip())
        return cls(words)

    @classmethod
    def from_corpus(cls, captions: list[str]) -> "Dictionary":
        seen: dict[str, None] = {}
        for cap in captions:
            for tok in normalize_text(cap).split():
                seen.setdefault(tok, None)
        return cls(tuple(seen))


@dataclass(frozen=True)
class Message:
    """An ordered list of dictionary word indices."""

    word_ids: tuple[int, ...]

    def __post_init__(self):
        if len(self.word_ids) < 1:
            raise ValueError("message must contain at least one word")

    @property
    def length(self) -> int:
        return len(self.word_ids)

    @property
    def full_mask(self) -> int:
        return (1 << self.length) - 1

    def text(self, dictionary: Dictionary) -> str:
        return " ".join(dictionary.words[i] for i in self.word_ids)


def tokenize(text: str, dictionary: Dictionary) -> Message:
    """Map whitespace-separated (normalized) tokens to dictionary indices."""
    tokens = normalize_text(text).split()
    if not tokens:
        raise ValueError("empty message")
    ids = []
    for tok in tokens:
        if tok not in dictionary.index:
            raise UnknownWordError(f"unknown word: {tok!r}")
        ids.append(dictionary.index[tok])
    return Message(tuple(ids))


@dataclass(frozen=True)
class WordGroup:
    """A fixed-size set of message positions, stored as a bitmask."""

    mask: int

    def __post_init__(self):
        if self.mask <= 0:
            raise ValueError("word group must be nonempty")

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    @property
    def positions(self) -> tuple[int, ...]:
        return mask_to_positions(self.mask)

    @classmethod
    def from_positions(cls, positions) -> "WordGroup":
        return cls(positions_to_mask(positions))


@dataclass(frozen=True)
class Grouping:
    """An ordered list of equal-size word groups.

    For the partition problems every group is disjoint and the union covers
    all positions; overcomplete groupings only guarantee this for the first
    ``disjoint_prefix`` groups, later groups may overlap earlier ones.
    """

    groups: tuple[WordGroup, ...]
    disjoint_prefix: int = 0

    def __post_init__(self):
        if not self.groups:
            raise ValueError("grouping must contain at least one group")
        sizes = {g.size for g in self.groups}
        if len(sizes) != 1:
            raise ValueError(f"groups must share one size, got {sorted(sizes)}")
        if not 0 <= self.disjoint_prefix <= len(self.groups):
            raise ValueError("disjoint_prefix out of range")
        acc = 0
        for g in self.groups[: self.disjoint_prefix]:
            if acc & g.mask:
                raise ValueError("leading groups are not pairwise disjoint")
            acc |= g.mask
        if len(set(self.groups)) != len(self.groups):
            raise ValueError("duplicate groups are not allowed")

    @property
    def group_size(self) -> int:
        return self.groups[0].size

    @property
    def union_mask(self) -> int:
        acc = 0
        for g in self.groups:
            acc |= g.mask
        return acc

    def __len__(self) -> int:
        return len(self.groups)

    def is_partition_of(self, length: int) -> bool:
        """True when groups are pairwise disjoint and cover ``length`` positions."""
        acc = 0
        for g in self.groups:
            if acc & g.mask:
                return False
            acc |= g.mask
        return acc == (1 << length) - 1

    @classmethod
    def partition(cls, masks) -> "Grouping":
        groups = tuple(WordGroup(m) for m in masks)
        return cls(groups, disjoint_prefix=len(groups))


@dataclass(frozen=True)
class ChannelParams:
    """Erasure probability and what a lost packet turns into."""

    p: float
    loss_mode: str = "drop"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"erasure probability must lie in [0,1], got {self.p}")
        if self.loss_mode not in ("drop", "subst"):
            raise ValueError(f"loss_mode must be 'drop' or 'subst', got {self.loss_mode!r}")


@dataclass(frozen=True)
class LatencyBudget:
    """Word-transmission limit and the bit budget it induces."""

    limit_words: int

    def __post_init__(self):
        if self.limit_words < 1:
            raise ValueError("word transmission limit must be >= 1")

    def bits(self, dictionary: Dictionary) -> int:
        return self.limit_words * dictionary.bits_per_word


def positions_to_mask(positions) -> int:
    mask = 0
    for pos in positions:
        if pos < 0:
            raise ValueError(f"negative position {pos}")
        mask |= 1 << pos
    return mask


def mask_to_positions(mask: int) -> tuple[int, ...]:
    out = []
    pos = 0
    while mask:
        if mask & 1:
            out.append(pos)
        mask >>= 1
        pos += 1
    return tuple(out)


def feasible_packet_sizes(length: int) -> set[int]:
    """All group sizes that divide the message length evenly."""
    if length < 1:
        raise ValueError("message length must be >= 1")
    return {m for m in range(1, length + 1) if length % m == 0}


def packet_bits(group: WordGroup, dictionary: Dictionary) -> int:
    """Encoded size of one packet: group size times bits per word index."""
    return group.size * dictionary.bits_per_word


def reconstruct_text(received_mask: int, msg: Message, dictionary: Dictionary) -> str:
    """Words at the received positions, in original message order."""
    if received_mask >> msg.length:
        raise ValueError("received positions outside the message")
    return " ".join(
        dictionary.words[msg.word_ids[k]]
        for k in range(msg.length)
        if received_mask >> k & 1
    )
