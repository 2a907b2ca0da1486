"""Regenerate the committed test fixtures: word list, caption corpus and the
golden grouping artifact.

Reruns reproduce the same files byte for byte. The golden groupings are
cross-checked against an independent pow-based enumeration before being
written. Run from the repository root:

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from smartpack.message import Dictionary, tokenize  # noqa: E402
from smartpack.sempa import select_M  # noqa: E402
from smartpack.similarity import SubsetScoreTable, deterministic_embedder  # noqa: E402
from smartpack.textgen import make_corpus, vocabulary  # noqa: E402

GOLDEN_P = 0.2


def independent_exact_score(table, group_masks, p):
    total = 0.0
    g = len(group_masks)
    for hbits in range(1 << g):
        union = 0
        received = 0
        for i in range(g):
            if hbits >> i & 1:
                union |= group_masks[i]
                received += 1
        phi = table.phi(union) if union else 0.0
        total += (1.0 - p) ** received * p ** (g - received) * phi
    return total


def main() -> None:
    data_dir = ROOT / "tests" / "data"
    data_dir.mkdir(parents=True, exist_ok=True)

    words = vocabulary()
    (data_dir / "words.txt").write_text("\n".join(words) + "\n", encoding="utf-8")

    captions = make_corpus(50, seed=42)
    (data_dir / "corpus_k6.txt").write_text("\n".join(captions) + "\n", encoding="utf-8")

    # sanity: all subset scores of every fixture message stay inside [0, 1]
    dictionary = Dictionary.from_file(data_dir / "words.txt")
    provider = deterministic_embedder(42, 64)
    low, high = 1.0, 0.0
    for cap in captions:
        msg = tokenize(cap, dictionary)
        table = SubsetScoreTable(msg, dictionary, provider)
        for mask in range(1, msg.full_mask + 1):
            score = table.phi(mask)
            low = min(low, score)
            high = max(high, score)
    print(f"wrote {len(captions)} captions, {len(words)} words; phi range [{low:.4f}, {high:.4f}]")
    if low < 0.0 or high > 1.0 + 1e-9:
        raise SystemExit("fixture corpus produced subset scores outside [0, 1]")

    results = []
    for cap in captions:
        msg = tokenize(cap, dictionary)
        table = SubsetScoreTable(msg, dictionary, provider)
        sol = select_M(msg, GOLDEN_P, table)
        check = independent_exact_score(table, [g.mask for g in sol.grouping.groups], GOLDEN_P)
        if abs(check - sol.exact_score) > 1e-9:
            raise SystemExit(f"oracle mismatch on {cap!r}: {check} vs {sol.exact_score}")
        results.append(
            {
                "message": msg.text(dictionary),
                "p": GOLDEN_P,
                "size": sol.size,
                "exact_score": sol.exact_score,
                "per_size_scores": {str(k): v for k, v in sol.per_size_scores.items()},
                "groups": [list(g.positions) for g in sol.grouping.groups],
            }
        )
    golden = data_dir / "golden_groupings.json"
    golden.write_text(json.dumps(results, indent=2), encoding="utf-8")
    print(f"wrote {golden} ({len(results)} oracle-checked entries)")


if __name__ == "__main__":
    main()
