"""Learned replacement for exhaustive repetition search.

A small fully connected regressor maps the phi scores of every nonempty
group subset to predicted per-group transmission counts. Labels come from
exhaustive search, training minimizes batch-mean squared error with Adam,
and real-valued predictions are snapped to a valid integer allocation that
spends the budget exactly.

Everything here is plain numpy so the analytic gradients can be checked
against finite differences directly.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .message import Dictionary, Grouping, Message
from .semrt import (
    RepetitionVector,
    _phi_by_group_subset,
    exhaustive_rep_search,
    select_groups_overcomplete,
)
from .similarity import SubsetScoreTable

FEATURE_GROUP_CAP = 16


def build_features(grouping: Grouping, table: SubsetScoreTable) -> np.ndarray:
    """phi of every nonempty group subset, ascending subset-bitmask order."""
    if len(grouping) > FEATURE_GROUP_CAP:
        raise ValueError(f"{len(grouping)} groups exceed the feature cap of {FEATURE_GROUP_CAP}")
    return _phi_by_group_subset(grouping, table)[1:].copy()


@dataclass(frozen=True)
class TrainingExample:
    """Subset-score features with the exhaustively optimal counts as label."""

    x: np.ndarray
    y: np.ndarray


def generate_dataset(
    corpus: list[Message],
    dictionary: Dictionary,
    group_count: int,
    size: int,
    budget: int,
    p: float,
    provider,
) -> list[TrainingExample]:
    """Group each message, score its subsets, and label with the search optimum.

    Every message must admit exactly ``group_count`` distinct groups so the
    feature dimension is uniform across the dataset.
    """
    examples = []
    for idx, msg in enumerate(corpus):
        try:
            table = SubsetScoreTable(msg, dictionary, provider)
            grouping = select_groups_overcomplete(msg, size, group_count, p, table)
            if len(grouping) != group_count:
                raise ValueError(
                    f"only {len(grouping)} distinct groups available, need {group_count}"
                )
            x = build_features(grouping, table)
            sol = exhaustive_rep_search(grouping, budget, p, table)
            examples.append(TrainingExample(x=x, y=np.array(sol.counts.counts, dtype=float)))
        except ValueError as err:
            raise ValueError(f"message {idx}: {err}") from err
    return examples


def save_dataset(examples: list[TrainingExample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps({"x": list(map(float, ex.x)), "y": list(map(float, ex.y))}) + "\n")


def load_dataset(path) -> list[TrainingExample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = json.loads(line)
                out.append(TrainingExample(np.asarray(rec["x"], float), np.asarray(rec["y"], float)))
    return out


class SurrogateModel:
    """Two hidden blocks of affine, batch-norm, ReLU and dropout, then an
    affine readout.

    Training-mode forward normalizes with batch statistics and applies
    inverted dropout; inference uses running statistics and no dropout, so
    it is deterministic. Models are tied to the (group_count, budget, p,
    provider) they were trained for via ``meta``.
    """

    def __init__(
        self,
        input_dim: int,
        hidden_dims: tuple[int, int] = (256, 256),
        output_dim: int = 8,
        dropout: float = 0.2,
        momentum: float = 0.9,
        eps: float = 1e-5,
        seed: int = 0,
        meta: dict | None = None,
    ):
        if not 0.0 <= dropout < 1.0:
            raise ValueError("dropout rate must lie in [0,1)")
        self.dims = (int(input_dim), int(hidden_dims[0]), int(hidden_dims[1]), int(output_dim))
        self.dropout = float(dropout)
        self.momentum = float(momentum)
        self.eps = float(eps)
        self.meta = dict(meta or {})
        rng = np.random.default_rng(seed)
        self.W = [
            rng.standard_normal((d_in, d_out)) * np.sqrt(2.0 / d_in)
            for d_in, d_out in zip(self.dims[:-1], self.dims[1:])
        ]
        self.b = [np.zeros(d) for d in self.dims[1:]]
        self.gamma = [np.ones(d) for d in self.dims[1:3]]
        self.beta = [np.zeros(d) for d in self.dims[1:3]]
        self.run_mean = [np.zeros(d) for d in self.dims[1:3]]
        self.run_var = [np.ones(d) for d in self.dims[1:3]]

    # parameter bookkeeping -------------------------------------------------

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i in range(3):
            out.append((f"W{i}", self.W[i]))
            out.append((f"b{i}", self.b[i]))
        for i in range(2):
            out.append((f"gamma{i}", self.gamma[i]))
            out.append((f"beta{i}", self.beta[i]))
        return out

    # forward / backward ----------------------------------------------------

    def forward(self, x: np.ndarray, training: bool = False, rng: np.random.Generator | None = None):
        """Returns (output, cache); cache is None outside training mode."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dims[0]:
            raise ValueError(f"expected input dim {self.dims[0]}, got {x.shape[1]}")
        if training and self.dropout > 0.0 and rng is None:
            raise ValueError("training-mode forward with dropout needs an rng")
        cache = {"x": x} if training else None
        h = x
        for i in range(2):
            z = h @ self.W[i] + self.b[i]
            if training:
                mean = z.mean(axis=0)
                var = z.var(axis=0)
                self.run_mean[i] = self.momentum * self.run_mean[i] + (1 - self.momentum) * mean
                self.run_var[i] = self.momentum * self.run_var[i] + (1 - self.momentum) * var
            else:
                mean = self.run_mean[i]
                var = self.run_var[i]
            std = np.sqrt(var + self.eps)
            z_hat = (z - mean) / std
            bn = self.gamma[i] * z_hat + self.beta[i]
            act = np.maximum(bn, 0.0)
            if training and self.dropout > 0.0:
                mask = (rng.random(act.shape) >= self.dropout) / (1.0 - self.dropout)
            else:
                mask = None
            out = act * mask if mask is not None else act
            if training:
                cache[f"h{i}"] = h
                cache[f"z_hat{i}"] = z_hat
                cache[f"std{i}"] = std
                cache[f"bn{i}"] = bn
                cache[f"mask{i}"] = mask
            h = out
        y = h @ self.W[2] + self.b[2]
        if training:
            cache["h2"] = h
        return y, cache

    def loss_and_grads(self, x: np.ndarray, y_true: np.ndarray, rng=None):
        """Batch-mean squared-error loss and analytic parameter gradients."""
        y_true = np.atleast_2d(np.asarray(y_true, dtype=float))
        y_pred, cache = self.forward(x, training=True, rng=rng)
        batch = y_pred.shape[0]
        diff = y_pred - y_true
        loss = float((diff**2).sum() / batch)
        grads: dict[str, np.ndarray] = {}
        d_y = 2.0 * diff / batch
        grads["W2"] = cache["h2"].T @ d_y
        grads["b2"] = d_y.sum(axis=0)
        d_h = d_y @ self.W[2].T
        for i in (1, 0):
            if cache[f"mask{i}"] is not None:
                d_h = d_h * cache[f"mask{i}"]
            d_bn = d_h * (cache[f"bn{i}"] > 0.0)
            z_hat = cache[f"z_hat{i}"]
            grads[f"gamma{i}"] = (d_bn * z_hat).sum(axis=0)
            grads[f"beta{i}"] = d_bn.sum(axis=0)
            d_z_hat = d_bn * self.gamma[i]
            d_z = (
                d_z_hat * batch - d_z_hat.sum(axis=0) - z_hat * (d_z_hat * z_hat).sum(axis=0)
            ) / (batch * cache[f"std{i}"])
            grads[f"W{i}"] = cache[f"h{i}"].T @ d_z
            grads[f"b{i}"] = d_z.sum(axis=0)
            d_h = d_z @ self.W[i].T
        return loss, grads

    def predict(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward(x, training=False)
        return y[0] if np.asarray(x).ndim == 1 else y

    # persistence -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "weights": [w.tolist() for w in self.W],
            "biases": [b.tolist() for b in self.b],
            "bn": {
                "gamma": [g.tolist() for g in self.gamma],
                "beta": [b.tolist() for b in self.beta],
                "running_mean": [m.tolist() for m in self.run_mean],
                "running_var": [v.tolist() for v in self.run_var],
                "momentum": self.momentum,
                "eps": self.eps,
            },
            "dropout": self.dropout,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SurrogateModel":
        dims = payload["dims"]
        model = cls(
            input_dim=dims[0],
            hidden_dims=(dims[1], dims[2]),
            output_dim=dims[3],
            dropout=payload["dropout"],
            momentum=payload["bn"]["momentum"],
            eps=payload["bn"]["eps"],
            meta=payload.get("meta"),
        )
        model.W = [np.asarray(w, float) for w in payload["weights"]]
        model.b = [np.asarray(b, float) for b in payload["biases"]]
        model.gamma = [np.asarray(g, float) for g in payload["bn"]["gamma"]]
        model.beta = [np.asarray(b, float) for b in payload["bn"]["beta"]]
        model.run_mean = [np.asarray(m, float) for m in payload["bn"]["running_mean"]]
        model.run_var = [np.asarray(v, float) for v in payload["bn"]["running_var"]]
        return model

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "SurrogateModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class AdamOptimizer:
    """Adaptive moment estimation over a model's named parameters."""

    def __init__(self, model: SurrogateModel, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.model = model
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p) for name, p in model.parameters()}
        self.v = {name: np.zeros_like(p) for name, p in model.parameters()}

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, param in self.model.parameters():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g**2
            m_hat = self.m[name] / (1 - self.beta1**self.t)
            v_hat = self.v[name] / (1 - self.beta2**self.t)
            param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def train(
    model: SurrogateModel,
    dataset: list[TrainingExample],
    epochs: int = 100,
    lr: float = 1e-3,
    batch_size: int = 32,
    seed: int = 0,
) -> tuple[SurrogateModel, list[float]]:
    """Minimize batch-mean MSE with Adam; returns per-epoch mean loss."""
    if not dataset:
        raise ValueError("training dataset is empty")
    x_all = np.stack([ex.x for ex in dataset])
    y_all = np.stack([ex.y for ex in dataset])
    rng = np.random.default_rng(seed)
    optimizer = AdamOptimizer(model, lr=lr)
    history = []
    for epoch in range(epochs):
        order = rng.permutation(len(dataset))
        losses = []
        for start in range(0, len(dataset), batch_size):
            idx = order[start : start + batch_size]
            loss, grads = model.loss_and_grads(x_all[idx], y_all[idx], rng=rng)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss {loss} at epoch {epoch}, batch starting {start}"
                )
            optimizer.step(grads)
            losses.append(loss)
        history.append(float(np.mean(losses)))
    return model, history


def adjust_counts(y_hat, budget: int) -> RepetitionVector:
    """Snap real-valued predictions to nonnegative integers summing to the budget.

    Entries are clamped to [0, budget] and rounded half-up; while the sum is
    short the entry with the largest clamp-and-round residual is incremented,
    while it overshoots the positive entry with the smallest residual is
    decremented. Residuals are fixed at rounding time and ties go to the
    lowest index, so the degenerate all-tied case pours into index 0.
    """
    y = np.asarray(y_hat, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("expected a nonempty 1-D vector of predictions")
    clamped = np.clip(y, 0.0, float(budget))
    counts = np.floor(clamped + 0.5).astype(int)
    residual = clamped - counts
    while counts.sum() < budget:
        counts[int(np.argmax(residual))] += 1
    while counts.sum() > budget:
        eligible = np.where(counts > 0, residual, np.inf)
        counts[int(np.argmin(eligible))] -= 1
    return RepetitionVector(tuple(int(c) for c in counts), budget)


def infer(
    model: SurrogateModel, grouping: Grouping, table: SubsetScoreTable, budget: int
) -> RepetitionVector:
    """Features, inference-mode forward, then budget-exact integer counts."""
    expected_in = (1 << len(grouping)) - 1
    if model.dims[0] != expected_in or model.dims[3] != len(grouping):
        raise ValueError(
            f"model dims {model.dims} do not fit {len(grouping)} groups "
            f"(need input {expected_in}, output {len(grouping)})"
        )
    meta_budget = model.meta.get("N")
    if meta_budget is not None and int(meta_budget) != int(budget):
        raise ValueError(f"model was trained for budget {meta_budget}, got {budget}")
    meta_provider = model.meta.get("provider")
    table_provider = getattr(table.provider, "name", None)
    if meta_provider is not None and table_provider is not None and meta_provider != table_provider:
        raise ValueError(
            f"model was trained on provider {meta_provider!r}, table uses {table_provider!r}"
        )
    x = build_features(grouping, table)
    y_hat = model.predict(x)
    return adjust_counts(y_hat, budget)


def timed_infer(model, grouping, table, budget, repeats: int = 20) -> tuple[RepetitionVector, float]:
    """Median wall-clock seconds for one inference, plus its result."""
    times = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = infer(model, grouping, table, budget)
        times.append(time.perf_counter() - start)
    return result, float(np.median(times))
