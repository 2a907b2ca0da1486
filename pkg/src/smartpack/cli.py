"""Command-line front end: group, plan, train and sweep subcommands.

Configuration is one JSON document; any field can be overridden by a flag
(the flag wins). Every artifact written embeds the resolved config and the
master seed that produced it. Exit codes: 0 success, 1 config validation
failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .evalsim import run_sweep
from .message import Dictionary, tokenize
from .semrt import exhaustive_rep_search, rep_expected_score, select_groups_overcomplete
from .sempa import select_M
from .similarity import SubsetScoreTable, provider_from_spec
from .surrogate import SurrogateModel, generate_dataset, infer, save_dataset, train

DEFAULT_P_GRID = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
DEFAULT_SCHEMES = ["smart-exhaustive", "full-aggregation", "character-l12", "character-unlimited"]


class ConfigError(ValueError):
    """Configuration rejected before any computation started."""


@dataclass
class RunConfig:
    corpus: str = ""
    dictionary: str = ""
    provider: str = "det:42:64"
    p_grid: list[float] = field(default_factory=lambda: list(DEFAULT_P_GRID))
    limit_words: int | None = None
    trials: int = 1000
    schemes: list[str] = field(default_factory=lambda: list(DEFAULT_SCHEMES))
    group_count: int = 8
    size: int | None = None
    budget: int | None = None
    surrogate_model: str | None = None
    surrogate_models: dict[str, str] = field(default_factory=dict)
    out_dir: str = "out"
    seed: int = 0
    mode: str = "drop"
    epochs: int = 100
    lr: float = 1e-3
    batch_size: int = 32
    train_p: float = 0.2
    method: str = "exhaustive"

    def validate(self, need_model: bool = False) -> None:
        if not self.corpus or not Path(self.corpus).is_file():
            raise ConfigError(f"corpus: no such file: {self.corpus!r}")
        if not self.dictionary or not Path(self.dictionary).is_file():
            raise ConfigError(f"dictionary: no such file: {self.dictionary!r}")
        for p in self.p_grid:
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"p_grid: value {p} outside [0,1]")
        if not self.p_grid:
            raise ConfigError("p_grid: must not be empty")
        if self.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if self.mode not in ("drop", "subst"):
            raise ConfigError(f"mode: expected drop or subst, got {self.mode!r}")
        if self.method not in ("exhaustive", "surrogate"):
            raise ConfigError(f"method: expected exhaustive or surrogate, got {self.method!r}")
        if not 0.0 <= self.train_p <= 1.0:
            raise ConfigError(f"train_p: value {self.train_p} outside [0,1]")
        if need_model and self.method == "surrogate" and not self.surrogate_model:
            raise ConfigError("surrogate_model: required when method is surrogate")
        if self.surrogate_model and not Path(self.surrogate_model).is_file():
            raise ConfigError(f"surrogate_model: no such file: {self.surrogate_model!r}")
        for key, path in self.surrogate_models.items():
            try:
                float(key)
            except ValueError:
                raise ConfigError(f"surrogate_models: key {key!r} is not a probability") from None
            if not Path(path).is_file():
                raise ConfigError(f"surrogate_models[{key}]: no such file: {path!r}")
        try:
            provider_from_spec_dry(self.provider)
        except ValueError as err:
            raise ConfigError(f"provider: {err}") from None


def provider_from_spec_dry(spec: str) -> None:
    """Shape-check a provider spec without touching the filesystem/network."""
    kind, _, rest = spec.partition(":")
    if kind == "det":
        seed, _, dim = rest.partition(":")
        if not (seed.lstrip("-").isdigit() and dim.isdigit()):
            raise ValueError(f"expected det:SEED:DIM, got {spec!r}")
    elif kind == "cache":
        if not rest:
            raise ValueError("cache provider needs a path")
        if not Path(rest).is_file():
            raise ValueError(f"no such cache file: {rest!r}")
    elif kind == "remote":
        if not rest:
            raise ValueError("remote provider needs a URL")
    else:
        raise ValueError(f"unknown provider spec {spec!r}")


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config: no such file: {args.config!r}")
        payload = json.loads(path.read_text(encoding="utf-8"))
        unknown = set(payload) - set(vars(cfg))
        if unknown:
            raise ConfigError(f"config: unknown fields {sorted(unknown)}")
        for key, value in payload.items():
            setattr(cfg, key, value)
    overrides = {
        "corpus": args.corpus,
        "dictionary": args.dictionary,
        "provider": args.provider,
        "out_dir": args.out,
        "seed": args.seed,
        "trials": args.trials,
        "mode": args.mode,
        "p_grid": [float(x) for x in args.p.split(",")] if args.p else None,
        "method": getattr(args, "method", None),
        "surrogate_model": getattr(args, "model", None),
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def _load_inputs(cfg: RunConfig):
    dictionary = Dictionary.from_file(cfg.dictionary)
    with open(cfg.corpus, encoding="utf-8") as fh:
        captions = [line.strip() for line in fh if line.strip()]
    corpus = [tokenize(line, dictionary) for line in captions]
    provider = provider_from_spec(cfg.provider)
    return dictionary, corpus, provider


def _write_artifact(cfg: RunConfig, name: str, payload: dict) -> Path:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"config": asdict(cfg), "seed": cfg.seed, **payload}
    path = out_dir / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return path


def cmd_group(cfg: RunConfig) -> int:
    cfg.validate()
    dictionary, corpus, provider = _load_inputs(cfg)
    results = []
    errors = []
    for p in cfg.p_grid:
        for idx, msg in enumerate(corpus):
            try:
                table = SubsetScoreTable(msg, dictionary, provider)
                sol = select_M(msg, p, table)
                results.append(
                    {
                        "message": msg.text(dictionary),
                        "p": p,
                        "size": sol.size,
                        "exact_score": sol.exact_score,
                        "per_size_scores": {str(k): v for k, v in sol.per_size_scores.items()},
                        "groups": [list(g.positions) for g in sol.grouping.groups],
                    }
                )
            except ValueError as err:
                errors.append({"message": idx, "p": p, "error": str(err)})
    path = _write_artifact(cfg, "groupings.json", {"results": results, "errors": errors})
    print(f"wrote {path}")
    return 0


def cmd_plan(cfg: RunConfig) -> int:
    cfg.validate(need_model=True)
    dictionary, corpus, provider = _load_inputs(cfg)
    model = SurrogateModel.load(cfg.surrogate_model) if cfg.method == "surrogate" else None
    plans = []
    errors = []
    for p in cfg.p_grid:
        for idx, msg in enumerate(corpus):
            try:
                table = SubsetScoreTable(msg, dictionary, provider)
                size = cfg.size if cfg.size is not None else select_M(msg, p, table).size
                limit = cfg.limit_words if cfg.limit_words is not None else msg.length
                budget = cfg.budget if cfg.budget is not None else limit // size
                grouping = select_groups_overcomplete(
                    msg, size, max(cfg.group_count, msg.length // size), p, table
                )
                t0 = time.perf_counter()
                if cfg.method == "surrogate":
                    counts = infer(model, grouping, table, budget)
                    score = rep_expected_score(grouping, counts, p, table)
                    counts_out = counts.counts
                else:
                    sol = exhaustive_rep_search(grouping, budget, p, table)
                    score = sol.score
                    counts_out = sol.counts.counts
                elapsed_ms = (time.perf_counter() - t0) * 1000.0
                plans.append(
                    {
                        "message": msg.text(dictionary),
                        "p": p,
                        "size": size,
                        "budget": budget,
                        "groups": [list(g.positions) for g in grouping.groups],
                        "counts": list(counts_out),
                        "score": score,
                        "method": cfg.method,
                        "elapsed_ms": elapsed_ms,
                    }
                )
            except ValueError as err:
                errors.append({"message": idx, "p": p, "error": str(err)})
    path = _write_artifact(cfg, "plans.json", {"plans": plans, "errors": errors})
    print(f"wrote {path}")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    cfg.validate()
    dictionary, corpus, provider = _load_inputs(cfg)
    if cfg.size is None:
        raise ConfigError("size: required for training (fixes the label budget)")
    lengths = {msg.length for msg in corpus}
    if len(lengths) != 1:
        raise ConfigError(f"corpus: training needs uniform message length, got {sorted(lengths)}")
    length = lengths.pop()
    limit = cfg.limit_words if cfg.limit_words is not None else length
    budget = cfg.budget if cfg.budget is not None else limit // cfg.size
    dataset = generate_dataset(
        corpus, dictionary, cfg.group_count, cfg.size, budget, cfg.train_p, provider
    )
    model = SurrogateModel(
        input_dim=(1 << cfg.group_count) - 1,
        output_dim=cfg.group_count,
        seed=cfg.seed,
        meta={
            "group_count": cfg.group_count,
            "N": budget,
            "p": cfg.train_p,
            "provider": provider.name,
            "seed": cfg.seed,
        },
    )
    model, history = train(
        model, dataset, epochs=cfg.epochs, lr=cfg.lr, batch_size=cfg.batch_size, seed=cfg.seed
    )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "surrogate_model.json"
    model.save(model_path)
    save_dataset(dataset, out_dir / "train_dataset.jsonl")
    _write_artifact(cfg, "train_history.json", {"loss_history": history, "model": str(model_path)})
    print(f"wrote {model_path} (final loss {history[-1]:.6f})")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    cfg.validate()
    dictionary, corpus, provider = _load_inputs(cfg)
    lengths = {msg.length for msg in corpus}
    limit = cfg.limit_words if cfg.limit_words is not None else max(lengths)
    models = {}
    for key, path in cfg.surrogate_models.items():
        models[float(key)] = SurrogateModel.load(path)
    if cfg.surrogate_model and "smart-surrogate" in cfg.schemes:
        single = SurrogateModel.load(cfg.surrogate_model)
        for p in cfg.p_grid:
            models.setdefault(p, single)
    report = run_sweep(
        corpus,
        dictionary,
        provider,
        schemes=cfg.schemes,
        p_grid=cfg.p_grid,
        trials=cfg.trials,
        master_seed=cfg.seed,
        limit_words=limit,
        group_count=cfg.group_count,
        fixed_size=cfg.size,
        surrogate_models=models or None,
        mode=cfg.mode,
        config_echo={**asdict(cfg), "limit_words": limit},
    )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.json").write_text(report.to_json(), encoding="utf-8")
    (out_dir / "sweep.csv").write_text(report.to_csv(), encoding="utf-8")
    print(f"wrote {out_dir / 'sweep.json'} and {out_dir / 'sweep.csv'}")
    if report.failures:
        print(f"{len(report.failures)} per-message failures recorded in the report")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smartpack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("group", cmd_group),
        ("plan", cmd_plan),
        ("train", cmd_train),
        ("sweep", cmd_sweep),
    ):
        cmd = sub.add_parser(name)
        cmd.set_defaults(func=fn)
        cmd.add_argument("--config", default=None, help="JSON config file")
        cmd.add_argument("--corpus", default=None)
        cmd.add_argument("--dictionary", default=None)
        cmd.add_argument("--provider", default=None, help="det:SEED:DIM | cache:PATH | remote:URL")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--trials", type=int, default=None)
        cmd.add_argument("--p", default=None, help="comma-separated erasure probabilities")
        cmd.add_argument("--mode", choices=["drop", "subst"], default=None)
        if name == "plan":
            cmd.add_argument("--method", choices=["exhaustive", "surrogate"], default=None)
            cmd.add_argument("--model", default=None, help="surrogate model file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return args.func(cfg)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
