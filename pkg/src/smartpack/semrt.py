"""Semantic repeated transmission: allocating a packet budget across groups.

Each group ``i`` is delivered when at least one of its ``n_i`` transmissions
survives, so its delivery probability is ``1 - p**n_i``. The expected score
sums phi over every delivery outcome, exactly as the single-shot objective
but with per-group survival probabilities; with all counts equal to one the
two objectives coincide bit-for-bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .message import Grouping, Message
from .sempa import (
    SUBSET_ENUM_CAP,
    EnumerationCapError,
    delivery_weighted_score,
    greedy_group_synergy,
    score_candidates,
)
from .similarity import SubsetScoreTable

COMPOSITION_ENUM_CAP = 1_000_000


@dataclass(frozen=True)
class RepetitionVector:
    """Per-group transmission counts under a total budget."""

    counts: tuple[int, ...]
    budget: int

    def __post_init__(self):
        if not self.counts:
            raise ValueError("repetition vector must not be empty")
        if any(c < 0 or c != int(c) for c in self.counts):
            raise ValueError("counts must be nonnegative integers")
        if sum(self.counts) > self.budget:
            raise ValueError(
                f"counts sum to {sum(self.counts)}, exceeding the budget {self.budget}"
            )

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class TransmissionPlan:
    """A grouping plus how many times each group is transmitted."""

    grouping: Grouping
    counts: RepetitionVector

    def __post_init__(self):
        if len(self.counts.counts) != len(self.grouping):
            raise ValueError("one count per group required")

    @property
    def words_transmitted(self) -> int:
        return self.grouping.group_size * self.counts.total


def rep_pattern_prob(received_mask: int, counts: Sequence[int], p: float) -> float:
    """Probability that exactly the groups in ``received_mask`` are delivered."""
    if received_mask >> len(counts):
        raise ValueError("received mask names more groups than there are counts")
    prob = 1.0
    for i, n in enumerate(counts):
        if received_mask >> i & 1:
            prob *= 1.0 - p**n
        else:
            prob *= p**n
    return prob


def rep_expected_score(
    grouping: Grouping, counts: Sequence[int], p: float, table: SubsetScoreTable
) -> float:
    """Expected similarity under per-group repetition counts.

    Overlapping groups are fine: the delivered position set is a union, so
    duplicates collapse before phi is evaluated.
    """
    counts = _coerce_counts(grouping, counts)
    masks = [g.mask for g in grouping.groups]
    success = [1.0 - p**n for n in counts]
    failure = [p**n for n in counts]
    return delivery_weighted_score(masks, success, failure, table)


def _coerce_counts(grouping: Grouping, counts) -> tuple[int, ...]:
    if isinstance(counts, RepetitionVector):
        counts = counts.counts
    counts = tuple(int(c) for c in counts)
    if len(counts) != len(grouping):
        raise ValueError(f"expected {len(grouping)} counts, got {len(counts)}")
    if any(c < 0 for c in counts):
        raise ValueError("counts must be nonnegative")
    return counts


def composition_count(total: int, parts: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


def enumerate_compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Every nonnegative integer vector of length ``parts`` summing to ``total``,
    in ascending lexicographic order."""
    if total < 0:
        raise ValueError("total must be nonnegative")
    if parts < 1:
        raise ValueError("parts must be >= 1")
    vec = [0] * parts

    def rec(i: int, remaining: int):
        if i == parts - 1:
            vec[i] = remaining
            yield tuple(vec)
            return
        for v in range(remaining + 1):
            vec[i] = v
            yield from rec(i + 1, remaining - v)

    yield from rec(0, total)


@dataclass(frozen=True)
class SemrtSolution:
    """Best repetition counts found for a grouping, with search accounting."""

    grouping: Grouping
    counts: RepetitionVector
    score: float
    candidates_evaluated: int
    elapsed_s: float

    @property
    def plan(self) -> TransmissionPlan:
        return TransmissionPlan(self.grouping, self.counts)


def _phi_by_group_subset(grouping: Grouping, table: SubsetScoreTable) -> np.ndarray:
    """phi of the position union for every subset of groups, indexed by subset mask."""
    g = len(grouping)
    masks = [grp.mask for grp in grouping.groups]
    unions = np.zeros(1 << g, dtype=np.int64)
    out = np.zeros(1 << g)
    for h in range(1, 1 << g):
        low = (h & -h).bit_length() - 1
        unions[h] = unions[h & (h - 1)] | masks[low]
        out[h] = table.phi(int(unions[h]))
    return out


def _fold_score(phi_by_subset: np.ndarray, failure: np.ndarray) -> float:
    """Contract the outcome tree one group at a time; bit i of the subset
    index is group i's delivery flag."""
    cur = phi_by_subset
    for i in range(len(failure)):
        cur = failure[i] * cur[0::2] + (1.0 - failure[i]) * cur[1::2]
    return float(cur[0])


def exhaustive_rep_search(
    grouping: Grouping, budget: int, p: float, table: SubsetScoreTable
) -> SemrtSolution:
    """Evaluate every composition of the budget over the groups; keep the best.

    Compositions are scanned in ascending lexicographic order and replaced
    only on strict improvement, so score ties resolve to the smallest vector.
    Only full-budget vectors are scanned: the objective never decreases when
    a count is raised, so slack is never optimal.
    """
    g = len(grouping)
    if g > SUBSET_ENUM_CAP:
        raise EnumerationCapError(f"{g} groups exceed the enumeration cap of {SUBSET_ENUM_CAP}")
    n_comps = composition_count(budget, g)
    if n_comps > COMPOSITION_ENUM_CAP:
        raise EnumerationCapError(
            f"{n_comps} compositions exceed the enumeration cap of {COMPOSITION_ENUM_CAP}"
        )
    start = time.perf_counter()
    phi_by_subset = _phi_by_group_subset(grouping, table)
    power = p ** np.arange(budget + 1)
    best_counts = None
    best_score = -math.inf
    evaluated = 0
    for counts in enumerate_compositions(budget, g):
        failure = power[list(counts)]
        score = _fold_score(phi_by_subset, failure)
        evaluated += 1
        if score > best_score:
            best_score = score
            best_counts = counts
    elapsed = time.perf_counter() - start
    exact = rep_expected_score(grouping, best_counts, p, table)
    return SemrtSolution(
        grouping=grouping,
        counts=RepetitionVector(best_counts, budget),
        score=exact,
        candidates_evaluated=evaluated,
        elapsed_s=elapsed,
    )


def select_groups_overcomplete(
    msg: Message, size: int, group_count: int, p: float, table: SubsetScoreTable
) -> Grouping:
    """Disjoint synergy partition first, then the best leftover groups.

    The first K/size groups cover the whole message; the extras are the
    remaining size-``size`` subsets in ascending order of their synergy gap.
    They may overlap anything already chosen but must be distinct as sets.
    When fewer distinct subsets exist than requested, the grouping is
    truncated to what is available.
    """
    if msg.length % size != 0:
        raise ValueError(f"group size {size} does not divide message length {msg.length}")
    n_disjoint = msg.length // size
    if group_count < n_disjoint:
        raise ValueError(
            f"group_count {group_count} is below the {n_disjoint} groups needed for coverage"
        )
    base = greedy_group_synergy(msg, size, p, table)
    chosen = list(base.groups)
    taken = {g.mask for g in chosen}
    scores = score_candidates(msg.length, size, p, table)
    extras = sorted(
        (s for m, s in scores.items() if m not in taken),
        key=lambda s: (s.synergy, s.group.mask),
    )
    for s in extras[: group_count - n_disjoint]:
        chosen.append(s.group)
    return Grouping(tuple(chosen), disjoint_prefix=n_disjoint)
