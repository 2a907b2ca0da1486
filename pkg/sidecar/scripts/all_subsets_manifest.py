"""Write a manifest naming every nonempty position subset for a message length.

With this manifest, an exported cache covers every text the consumer's
subset score table can ask for, so the whole pipeline runs offline through
the cache provider.

    python3 scripts/all_subsets_manifest.py 6 manifest_k6.json
"""

from __future__ import annotations

import json
import sys


def main() -> None:
    if len(sys.argv) != 3:
        raise SystemExit(__doc__)
    length = int(sys.argv[1])
    subsets = [
        [k for k in range(length) if mask >> k & 1] for mask in range(1, 1 << length)
    ]
    with open(sys.argv[2], "w", encoding="utf-8") as fh:
        json.dump({"subsets": subsets}, fh)
    print(f"wrote {len(subsets)} subsets for length {length} to {sys.argv[2]}")


if __name__ == "__main__":
    main()
