"""Semantic packet aggregation: expected-score objective and greedy grouping.

The exact objective sums phi over every delivery outcome of the packet set.
Grouping candidates are scored by two per-group quantities that do not
depend on the rest of the grouping: ``psi`` (expected score over all word
subsets containing the group, under independent word survival) and
``baseline_b`` (the same expectation restricted to outcomes that intersect
the group when every word travels alone). Greedy selection uses either
psi descending or the synergy gap ``baseline_b - psi`` ascending.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .message import Grouping, Message, WordGroup, feasible_packet_sizes
from .similarity import SubsetScoreTable

SUBSET_ENUM_CAP = 20
PARTITION_ENUM_CAP = 100_000


class EnumerationCapError(ValueError):
    """The requested exact enumeration exceeds the configured cap."""


def loss_pattern_prob(pattern_size: int, total_packets: int, p: float) -> float:
    """Probability that exactly this set of packets survives: one packet each."""
    if not 0 <= pattern_size <= total_packets:
        raise ValueError("pattern size out of range")
    if not 0.0 <= p <= 1.0:
        raise ValueError("erasure probability out of [0,1]")
    return (1.0 - p) ** pattern_size * p ** (total_packets - pattern_size)


def delivery_weighted_score(
    group_masks, success, failure, table: SubsetScoreTable
) -> float:
    """Sum of phi(union of delivered groups) over all delivery outcomes.

    ``success[i]`` / ``failure[i]`` are the per-group delivery and loss
    probabilities. Shared by the single-shot and repeated-transmission
    objectives so that the one-transmission case reduces bit-for-bit.
    """
    g = len(group_masks)
    if g > SUBSET_ENUM_CAP:
        raise EnumerationCapError(f"{g} groups exceed the enumeration cap of {SUBSET_ENUM_CAP}")
    total = 0.0
    for h in range(1 << g):
        prob = 1.0
        union = 0
        for i in range(g):
            if h >> i & 1:
                prob *= success[i]
                union |= group_masks[i]
            else:
                prob *= failure[i]
        if prob != 0.0:
            total += prob * table.phi(union)
    return total


def exact_expected_score(grouping: Grouping, p: float, table: SubsetScoreTable) -> float:
    """Expected similarity when every group is sent once over the erasure channel."""
    if not grouping.is_partition_of(table.msg.length):
        raise ValueError("grouping is not a partition of the message")
    masks = [g.mask for g in grouping.groups]
    success = [1.0 - p] * len(masks)
    failure = [p] * len(masks)
    return delivery_weighted_score(masks, success, failure, table)


def group_marginal_score(
    group: WordGroup, grouping: Grouping, p: float, table: SubsetScoreTable
) -> float:
    """The objective restricted to delivery outcomes that include ``group``."""
    try:
        fixed = grouping.groups.index(group)
    except ValueError:
        raise ValueError("group is not part of the grouping") from None
    masks = [g.mask for g in grouping.groups]
    g = len(masks)
    if g > SUBSET_ENUM_CAP:
        raise EnumerationCapError(f"{g} groups exceed the enumeration cap of {SUBSET_ENUM_CAP}")
    total = 0.0
    for h in range(1 << g):
        if not h >> fixed & 1:
            continue
        prob = 1.0
        union = 0
        for i in range(g):
            if h >> i & 1:
                prob *= 1.0 - p
                union |= masks[i]
            else:
                prob *= p
        if prob != 0.0:
            total += prob * table.phi(union)
    return total


def _submasks(mask: int):
    """Every submask of ``mask``, including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def psi(group: WordGroup, length: int, p: float, table: SubsetScoreTable) -> float:
    """Expected phi over all word subsets containing the group.

    Words survive independently here: the grouping context is projected away,
    which is what makes the score a function of the group alone.
    """
    if length > SUBSET_ENUM_CAP:
        raise EnumerationCapError(f"message length {length} exceeds cap {SUBSET_ENUM_CAP}")
    full = (1 << length) - 1
    if group.mask & ~full:
        raise ValueError("group positions outside the message")
    complement = full & ~group.mask
    total = 0.0
    for sub in _submasks(complement):
        s = group.mask | sub
        size = s.bit_count()
        q = (1.0 - p) ** size * p ** (length - size)
        if q != 0.0:
            total += q * table.phi(s)
    return total


def baseline_b(group: WordGroup, length: int, p: float, table: SubsetScoreTable) -> float:
    """Expected phi with one word per packet, restricted to outcomes hitting the group."""
    if length > SUBSET_ENUM_CAP:
        raise EnumerationCapError(f"message length {length} exceeds cap {SUBSET_ENUM_CAP}")
    full = (1 << length) - 1
    if group.mask & ~full:
        raise ValueError("group positions outside the message")
    total = 0.0
    for d in range(1, 1 << length):
        if d & group.mask == 0:
            continue
        size = d.bit_count()
        r = (1.0 - p) ** size * p ** (length - size)
        if r != 0.0:
            total += r * table.phi(d)
    return total


@dataclass(frozen=True)
class GroupScore:
    """psi, the individual-packet baseline, and their gap for one candidate group."""

    group: WordGroup
    psi: float
    baseline_b: float

    @property
    def synergy(self) -> float:
        return self.baseline_b - self.psi


def score_candidates(
    length: int, size: int, p: float, table: SubsetScoreTable
) -> dict[int, GroupScore]:
    """GroupScore for every size-``size`` position subset, keyed by bitmask."""
    out = {}
    for positions in combinations(range(length), size):
        group = WordGroup.from_positions(positions)
        out[group.mask] = GroupScore(
            group=group,
            psi=psi(group, length, p, table),
            baseline_b=baseline_b(group, length, p, table),
        )
    return out


def _greedy_partition(msg: Message, size: int, key, scores: dict[int, GroupScore]) -> Grouping:
    """Pick the best remaining candidate until positions are exhausted.

    Ties on the key resolve to the smallest candidate bitmask, which makes
    the result independent of candidate evaluation order.
    """
    remaining = msg.full_mask
    chosen = []
    while remaining:
        best_mask = -1
        best_key = None
        for positions in combinations([k for k in range(msg.length) if remaining >> k & 1], size):
            mask = 0
            for pos in positions:
                mask |= 1 << pos
            cand_key = key(scores[mask])
            if best_mask < 0 or cand_key < best_key or (cand_key == best_key and mask < best_mask):
                best_mask = mask
                best_key = cand_key
        chosen.append(best_mask)
        remaining &= ~best_mask
    return Grouping.partition(chosen)


def greedy_group_biased(msg: Message, size: int, p: float, table: SubsetScoreTable) -> Grouping:
    """Partition by repeatedly taking the remaining group with maximum psi."""
    if msg.length % size != 0:
        raise ValueError(f"group size {size} does not divide message length {msg.length}")
    scores = score_candidates(msg.length, size, p, table)
    return _greedy_partition(msg, size, lambda s: -s.psi, scores)


def greedy_group_synergy(msg: Message, size: int, p: float, table: SubsetScoreTable) -> Grouping:
    """Partition by repeatedly taking the group with the smallest baseline-psi gap.

    Grouping already-strong words concentrates loss risk in one packet; the
    gap is smallest where aggregation helps most relative to sending the
    words individually.
    """
    if msg.length % size != 0:
        raise ValueError(f"group size {size} does not divide message length {msg.length}")
    scores = score_candidates(msg.length, size, p, table)
    return _greedy_partition(msg, size, lambda s: s.synergy, scores)


@dataclass(frozen=True)
class SempaSolution:
    """Best packet size with its grouping and the score achieved per size."""

    grouping: Grouping
    size: int
    exact_score: float
    per_size_scores: dict[int, float]


def select_M(msg: Message, p: float, table: SubsetScoreTable) -> SempaSolution:
    """Try every feasible packet size with synergy grouping; keep the best.

    Equal scores resolve to the largest size (fewest packets).
    """
    best = None
    per_size: dict[int, float] = {}
    groupings: dict[int, Grouping] = {}
    for size in sorted(feasible_packet_sizes(msg.length)):
        grouping = greedy_group_synergy(msg, size, p, table)
        score = exact_expected_score(grouping, p, table)
        per_size[size] = score
        groupings[size] = grouping
        if best is None or score >= per_size[best]:
            best = size
    return SempaSolution(
        grouping=groupings[best],
        size=best,
        exact_score=per_size[best],
        per_size_scores=per_size,
    )


def partition_count(length: int, size: int) -> int:
    """Number of ways to split ``length`` positions into groups of ``size``."""
    if length % size != 0:
        raise ValueError(f"group size {size} does not divide {length}")
    n_groups = length // size
    return math.factorial(length) // (math.factorial(size) ** n_groups * math.factorial(n_groups))


def enumerate_partitions(length: int, size: int):
    """All partitions of ``range(length)`` into size-``size`` groups, canonical order.

    Each partition lists groups by ascending lowest member, so the stream is
    deterministic and free of duplicates.
    """
    full = (1 << length) - 1

    def rec(remaining: int, acc: list[int]):
        if remaining == 0:
            yield tuple(acc)
            return
        lowest = (remaining & -remaining).bit_length() - 1
        rest = [k for k in range(lowest + 1, length) if remaining >> k & 1]
        for partners in combinations(rest, size - 1):
            mask = 1 << lowest
            for pos in partners:
                mask |= 1 << pos
            acc.append(mask)
            yield from rec(remaining & ~mask, acc)
            acc.pop()

    yield from rec(full, [])


def exhaustive_partition_oracle(
    msg: Message, size: int, p: float, table: SubsetScoreTable
) -> tuple[Grouping, float]:
    """Best partition by direct enumeration; the reference for greedy quality."""
    count = partition_count(msg.length, size)
    if count > PARTITION_ENUM_CAP:
        raise EnumerationCapError(
            f"{count} partitions exceed the enumeration cap of {PARTITION_ENUM_CAP}"
        )
    best_masks = None
    best_score = -math.inf
    for masks in enumerate_partitions(msg.length, size):
        grouping = Grouping.partition(masks)
        score = exact_expected_score(grouping, p, table)
        if score > best_score:
            best_score = score
            best_masks = masks
    return Grouping.partition(best_masks), best_score
