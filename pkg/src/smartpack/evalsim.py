"""Erasure-channel simulation and Monte Carlo evaluation of transmission plans.

Randomness is counter-based: every (master seed, message, scheme, p) cell
gets its own Philox stream keyed by hashing those identifiers, so results
do not depend on evaluation order and any cell can be recomputed alone.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .message import Dictionary, Grouping, Message, WordGroup, reconstruct_text
from .semrt import RepetitionVector, TransmissionPlan, exhaustive_rep_search, select_groups_overcomplete
from .sempa import select_M
from .similarity import SubsetScoreTable
from .surrogate import SurrogateModel, infer

PRINTABLE = [chr(c) for c in range(32, 127)]


def rng_stream(*key_parts) -> np.random.Generator:
    """Philox generator keyed by hashing the identifying parts."""
    digest = hashlib.sha256("|".join(map(str, key_parts)).encode()).digest()
    return np.random.Generator(np.random.Philox(key=int.from_bytes(digest[:16], "big")))


def erase_channel(packet: WordGroup, p: float, mode: str, rng: np.random.Generator, dictionary: Dictionary | None = None):
    """One packet through the channel: unchanged, dropped, or random words.

    Returns the packet itself on delivery; on loss, ``None`` in drop mode or
    a tuple of uniformly drawn dictionary word ids in substitute mode.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("erasure probability out of [0,1]")
    if rng.random() >= p:
        return packet
    if mode == "drop":
        return None
    if mode == "subst":
        if dictionary is None:
            raise ValueError("substitute mode needs a dictionary")
        return tuple(int(i) for i in rng.integers(0, dictionary.size, size=packet.size))
    raise ValueError(f"unknown loss mode {mode!r}")


@dataclass(frozen=True)
class TrialOutcome:
    """One simulated transmission: what arrived and how it scored."""

    received_positions: tuple[int, ...]
    decoded_text: str
    similarity: float
    packet_delivered: tuple[bool, ...]


@dataclass
class EvalEntry:
    scheme: str
    p: float
    mean_similarity: float
    stderr: float
    trials: int
    elapsed_ms: float = 0.0
    limit_words: int | None = None
    bits_budget: int | None = None


@dataclass
class EvalReport:
    entries: list[EvalEntry]
    per_scheme_elapsed_ms: dict[str, float]
    config: dict
    failures: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "entries": [vars(e) for e in self.entries],
            "per_scheme_elapsed_ms": self.per_scheme_elapsed_ms,
            "failures": self.failures,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        """Plot-ready series; deliberately excludes wall-clock fields so the
        bytes are reproducible for a fixed seed."""
        lines = ["scheme,p,mean_similarity,stderr,trials"]
        for e in sorted(self.entries, key=lambda e: (e.scheme, e.p)):
            lines.append(f"{e.scheme},{e.p!r},{e.mean_similarity!r},{e.stderr!r},{e.trials}")
        return "\n".join(lines) + "\n"


def _transmission_layout(counts: tuple[int, ...]) -> list[int]:
    """Group index of each transmission, in plan order."""
    layout = []
    for i, n in enumerate(counts):
        layout.extend([i] * n)
    return layout


def simulate_plan(
    plan: TransmissionPlan,
    p: float,
    trials: int,
    mode: str,
    seed,
    table: SubsetScoreTable,
    keep_outcomes: bool = False,
):
    """Monte Carlo estimate of a plan's expected similarity.

    A group is delivered when at least one of its transmissions survives. In
    substitute mode every lost packet turns into uniformly random dictionary
    words, appended after the correctly received text in packet order.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    counts = plan.counts.counts
    masks = [g.mask for g in plan.grouping.groups]
    layout = _transmission_layout(counts)
    rng = seed if isinstance(seed, np.random.Generator) else rng_stream(seed)
    survived = rng.random((trials, len(layout))) < (1.0 - p)
    delivered = np.zeros((trials, len(masks)), dtype=bool)
    for t_idx, g_idx in enumerate(layout):
        delivered[:, g_idx] |= survived[:, t_idx]
    received = np.zeros(trials, dtype=np.int64)
    for g_idx, mask in enumerate(masks):
        received |= np.where(delivered[:, g_idx], mask, 0)

    outcomes: list[TrialOutcome] = []
    if mode == "drop":
        uniq, inverse = np.unique(received, return_inverse=True)
        phi_by_mask = np.array([table.phi(int(m)) for m in uniq])
        scores = phi_by_mask[inverse]
        if keep_outcomes:
            for t in range(trials):
                text = reconstruct_text(int(received[t]), table.msg, table.dictionary)
                outcomes.append(
                    TrialOutcome(
                        received_positions=_received_multiset(survived[t], layout, masks),
                        decoded_text=text,
                        similarity=float(scores[t]),
                        packet_delivered=tuple(bool(x) for x in survived[t]),
                    )
                )
    elif mode == "subst":
        dictionary = table.dictionary
        scores = np.empty(trials)
        for t in range(trials):
            parts = [reconstruct_text(int(received[t]), table.msg, dictionary)]
            for t_idx, g_idx in enumerate(layout):
                if not survived[t, t_idx]:
                    ids = rng.integers(0, dictionary.size, size=plan.grouping.group_size)
                    parts.append(" ".join(dictionary.words[int(i)] for i in ids))
            text = " ".join(s for s in parts if s)
            scores[t] = table.phi_text(text, memo=False)
            if keep_outcomes:
                outcomes.append(
                    TrialOutcome(
                        received_positions=_received_multiset(survived[t], layout, masks),
                        decoded_text=text,
                        similarity=float(scores[t]),
                        packet_delivered=tuple(bool(x) for x in survived[t]),
                    )
                )
    else:
        raise ValueError(f"unknown loss mode {mode!r}")

    mean = float(scores.mean())
    stderr = float(scores.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    entry = EvalEntry(
        scheme="plan",
        p=p,
        mean_similarity=mean,
        stderr=stderr,
        trials=trials,
    )
    return (entry, outcomes) if keep_outcomes else entry


def _received_multiset(survived_row, layout, masks) -> tuple[int, ...]:
    received = []
    for t_idx, g_idx in enumerate(layout):
        if survived_row[t_idx]:
            mask = masks[g_idx]
            pos = 0
            while mask:
                if mask & 1:
                    received.append(pos)
                mask >>= 1
                pos += 1
    return tuple(sorted(received))


def character_baseline(
    msg: Message,
    dictionary: Dictionary,
    limit_words: int | None,
    p: float,
    trials: int,
    seed,
    table: SubsetScoreTable,
) -> EvalEntry:
    """Each character is its own 8-bit packet; erased characters are replaced
    by uniformly random printable characters. The bit budget is the word
    limit times bits-per-word, or unlimited when no limit is given."""
    text = msg.text(dictionary)
    if limit_words is None:
        n_chars = len(text)
        bits_budget = None
    else:
        bits_budget = limit_words * dictionary.bits_per_word
        n_chars = min(len(text), bits_budget // 8)
    kept = text[:n_chars]
    rng = seed if isinstance(seed, np.random.Generator) else rng_stream(seed)
    scores = np.empty(trials)
    if n_chars == 0:
        scores[:] = 0.0
    else:
        survived = rng.random((trials, n_chars)) < (1.0 - p)
        repl = rng.integers(0, len(PRINTABLE), size=(trials, n_chars))
        for t in range(trials):
            chars = [
                kept[i] if survived[t, i] else PRINTABLE[repl[t, i]] for i in range(n_chars)
            ]
            scores[t] = table.phi_text("".join(chars), memo=False)
    mean = float(scores.mean())
    stderr = float(scores.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return EvalEntry(
        scheme="character",
        p=p,
        mean_similarity=mean,
        stderr=stderr,
        trials=trials,
        limit_words=limit_words,
        bits_budget=bits_budget,
    )


def build_scheme_plan(
    scheme: str,
    msg: Message,
    p: float,
    table: SubsetScoreTable,
    limit_words: int,
    group_count: int,
    fixed_size: int | None = None,
    surrogate: SurrogateModel | None = None,
) -> TransmissionPlan:
    """Construct the transmission plan a scheme uses for one message."""
    if scheme == "full-aggregation":
        grouping = Grouping.partition([msg.full_mask])
        reps = limit_words // msg.length
        if reps < 1:
            raise ValueError("word limit below message length")
        return TransmissionPlan(grouping, RepetitionVector((reps,), reps))
    if scheme in ("smart-exhaustive", "smart-surrogate"):
        size = fixed_size if fixed_size is not None else select_M(msg, p, table).size
        budget = limit_words // size
        if budget * size < msg.length:
            raise ValueError("word limit cannot cover the message at this packet size")
        grouping = select_groups_overcomplete(msg, size, max(group_count, msg.length // size), p, table)
        if scheme == "smart-exhaustive":
            sol = exhaustive_rep_search(grouping, budget, p, table)
            return sol.plan
        if surrogate is None:
            raise ValueError("smart-surrogate needs a trained model")
        counts = infer(surrogate, grouping, table, budget)
        return TransmissionPlan(grouping, counts)
    raise ValueError(f"unknown plan scheme {scheme!r}")


def run_sweep(
    corpus: list[Message],
    dictionary: Dictionary,
    provider,
    schemes: list[str],
    p_grid: list[float],
    trials: int,
    master_seed: int,
    limit_words: int,
    group_count: int = 8,
    fixed_size: int | None = None,
    surrogate_models: dict[float, SurrogateModel] | None = None,
    mode: str = "drop",
    config_echo: dict | None = None,
) -> EvalReport:
    """Evaluate every scheme over the corpus and erasure grid.

    Per-message failures are recorded and skipped rather than aborting the
    sweep. Aggregation pools all trials of all messages for a (scheme, p)
    cell; the stderr is the pooled sample deviation over the pooled count.
    """
    entries: list[EvalEntry] = []
    per_scheme_elapsed: dict[str, float] = {}
    failures: list[dict] = []
    tables = [SubsetScoreTable(msg, dictionary, provider) for msg in corpus]
    for scheme in schemes:
        t_start = time.perf_counter()
        for p in p_grid:
            cell_stats = []
            cell_elapsed = 0.0
            for m_idx, (msg, table) in enumerate(zip(corpus, tables)):
                seed_key = rng_stream(master_seed, m_idx, scheme, repr(p))
                try:
                    t0 = time.perf_counter()
                    if scheme.startswith("character"):
                        limit = _character_limit(scheme, limit_words)
                        entry = character_baseline(msg, dictionary, limit, p, trials, seed_key, table)
                    else:
                        model = (surrogate_models or {}).get(p) if scheme == "smart-surrogate" else None
                        if scheme == "smart-surrogate" and model is None:
                            raise ValueError(f"no surrogate model configured for p={p}")
                        plan = build_scheme_plan(
                            scheme, msg, p, table, limit_words, group_count, fixed_size, model
                        )
                        entry = simulate_plan(plan, p, trials, mode, seed_key, table)
                    cell_elapsed += time.perf_counter() - t0
                    cell_stats.append((entry.mean_similarity, entry.stderr))
                except (ValueError, KeyError) as err:
                    failures.append(
                        {"message": m_idx, "scheme": scheme, "p": p, "error": str(err)}
                    )
            if cell_stats:
                means = np.array([m for m, _ in cell_stats])
                variances = np.array([(se * math.sqrt(trials)) ** 2 for _, se in cell_stats])
                grand_mean = float(means.mean())
                # law of total variance over the pooled trials
                grand_var = float(variances.mean() + means.var())
                pooled = len(cell_stats) * trials
                entries.append(
                    EvalEntry(
                        scheme=scheme,
                        p=p,
                        mean_similarity=grand_mean,
                        stderr=math.sqrt(grand_var / pooled),
                        trials=pooled,
                        elapsed_ms=cell_elapsed * 1000.0,
                        limit_words=_character_limit(scheme, limit_words)
                        if scheme.startswith("character")
                        else limit_words,
                        bits_budget=_bits_budget(scheme, limit_words, dictionary),
                    )
                )
        per_scheme_elapsed[scheme] = (time.perf_counter() - t_start) * 1000.0
    return EvalReport(
        entries=entries,
        per_scheme_elapsed_ms=per_scheme_elapsed,
        config=dict(config_echo or {}),
        failures=failures,
    )


def _character_limit(scheme: str, default_limit: int) -> int | None:
    if scheme == "character-unlimited":
        return None
    if scheme.startswith("character-l"):
        return int(scheme.split("character-l")[1])
    return default_limit


def _bits_budget(scheme: str, limit_words: int, dictionary: Dictionary) -> int | None:
    limit = _character_limit(scheme, limit_words) if scheme.startswith("character") else limit_words
    return None if limit is None else limit * dictionary.bits_per_word
