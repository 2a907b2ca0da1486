"""End-to-end experiment: train surrogate models, then sweep all schemes.

Mirrors the evaluation protocol at desk scale: six-word captions, erasure
probabilities from 0.05 to 0.3, word budget L=6, eight overcomplete groups,
surrogate models trained per erasure probability on exhaustively labeled
datasets. Outputs land in --out as JSON/CSV plus one model file per p.

    python3 scripts/run_experiment.py --out out/experiment
    python3 scripts/run_experiment.py --train-size 3000 --messages 100  # paper scale
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from smartpack.evalsim import run_sweep  # noqa: E402
from smartpack.message import Dictionary, tokenize  # noqa: E402
from smartpack.similarity import deterministic_embedder  # noqa: E402
from smartpack.surrogate import SurrogateModel, generate_dataset, train  # noqa: E402
from smartpack.textgen import make_corpus, vocabulary  # noqa: E402


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/experiment")
    ap.add_argument("--messages", type=int, default=50, help="evaluation corpus size")
    ap.add_argument("--train-size", type=int, default=600, help="training examples per p")
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--p", default="0.05,0.1,0.15,0.2,0.25,0.3")
    ap.add_argument("--size", type=int, default=2, help="packet size for smart schemes")
    ap.add_argument("--group-count", type=int, default=8)
    return ap.parse_args()


def main() -> None:
    args = parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p_grid = [float(x) for x in args.p.split(",")]
    dictionary = Dictionary(tuple(vocabulary()))
    provider = deterministic_embedder(42, 64)

    eval_corpus = [tokenize(c, dictionary) for c in make_corpus(args.messages, seed=42)]
    train_corpus = [tokenize(c, dictionary) for c in make_corpus(args.train_size, seed=7)]
    budget = 6 // args.size

    models = {}
    for p in p_grid:
        t0 = time.perf_counter()
        dataset = generate_dataset(
            train_corpus, dictionary, args.group_count, args.size, budget, p, provider
        )
        model = SurrogateModel(
            input_dim=(1 << args.group_count) - 1,
            output_dim=args.group_count,
            seed=args.seed,
            meta={
                "group_count": args.group_count,
                "N": budget,
                "p": p,
                "provider": provider.name,
                "seed": args.seed,
            },
        )
        model, history = train(
            model, dataset, epochs=args.epochs, lr=1e-3, batch_size=32, seed=args.seed
        )
        path = out / f"surrogate_p{p:g}.json"
        model.save(path)
        models[p] = model
        print(
            f"p={p:g}: {len(dataset)} examples, loss {history[0]:.3f} -> {history[-1]:.3f} "
            f"({time.perf_counter() - t0:.0f}s) -> {path}"
        )

    report = run_sweep(
        eval_corpus,
        dictionary,
        provider,
        schemes=[
            "smart-exhaustive",
            "smart-surrogate",
            "full-aggregation",
            "character-l12",
            "character-unlimited",
        ],
        p_grid=p_grid,
        trials=args.trials,
        master_seed=args.seed,
        limit_words=6,
        group_count=args.group_count,
        fixed_size=args.size,
        surrogate_models=models,
        config_echo={"messages": args.messages, "train_size": args.train_size, "seed": args.seed},
    )
    (out / "sweep.json").write_text(report.to_json(), encoding="utf-8")
    (out / "sweep.csv").write_text(report.to_csv(), encoding="utf-8")
    print(f"wrote {out / 'sweep.csv'}")
    for entry in sorted(report.entries, key=lambda e: (e.scheme, e.p)):
        print(f"  {entry.scheme:20s} p={entry.p:<5g} mean={entry.mean_similarity:.4f}")
    if report.failures:
        print(f"{len(report.failures)} per-message failures; see sweep.json")


if __name__ == "__main__":
    main()
