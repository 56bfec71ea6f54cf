"""Embedding + MLP recommender with a softmax head, written directly in numpy.

Each raw feature is bucketed (see :class:`~systolic_dse.data.EncoderSpec`) and
looked up in its own embedding table; the looked-up vectors are concatenated
and fed through one ReLU hidden layer and a softmax over the label table.
``baseline_mode`` replaces the embeddings with z-scored raw features so the
two variants share the same MLP core.

Everything runs in float64 so that finite-difference checks are meaningful
and repeated runs are bit-identical.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .data import Dataset, EncoderSpec, encode
from .errors import CheckpointError, EncodingError, ShapeError

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "systolic-dse-checkpoint"
CHECKPOINT_VERSION = 1
EMBED_INIT = 0.05


@dataclass(frozen=True)
class ModelSpec:
    encoder: EncoderSpec
    num_classes: int
    embedding_dim: int = 16
    hidden_units: int = 256
    baseline_mode: bool = False

    def __post_init__(self):
        if self.num_classes < 2:
            raise ShapeError("need at least two classes")
        if min(self.embedding_dim, self.hidden_units, len(self.encoder)) < 1:
            raise ShapeError("embedding_dim, hidden_units and feature count must be >= 1")

    @property
    def num_features(self) -> int:
        return len(self.encoder)

    @property
    def input_width(self) -> int:
        return self.num_features if self.baseline_mode else self.num_features * self.embedding_dim

    def to_json(self) -> dict:
        return {
            "encoder": self.encoder.to_json(),
            "num_classes": self.num_classes,
            "embedding_dim": self.embedding_dim,
            "hidden_units": self.hidden_units,
            "baseline_mode": self.baseline_mode,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelSpec":
        return cls(
            EncoderSpec.from_json(obj["encoder"]), int(obj["num_classes"]),
            int(obj["embedding_dim"]), int(obj["hidden_units"]), bool(obj["baseline_mode"]),
        )

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        shapes: dict[str, tuple[int, ...]] = {}
        if self.baseline_mode:
            shapes["input_mean"] = (self.num_features,)
            shapes["input_scale"] = (self.num_features,)
        else:
            for i, vocab in enumerate(self.encoder.vocab_sizes):
                shapes[f"embedding_{i}"] = (vocab, self.embedding_dim)
        shapes["hidden_w"] = (self.input_width, self.hidden_units)
        shapes["hidden_b"] = (self.hidden_units,)
        shapes["output_w"] = (self.hidden_units, self.num_classes)
        shapes["output_b"] = (self.num_classes,)
        return shapes


# Fixed by the training data, not by gradient descent.
FROZEN = ("input_mean", "input_scale")


@dataclass
class RecommenderModel:
    spec: ModelSpec
    params: dict[str, np.ndarray]
    meta: dict[str, Any] = field(default_factory=dict)

    def trainable(self) -> list[str]:
        return [name for name in self.params if name not in FROZEN]

    def prepare(self, raw_features) -> np.ndarray:
        """Raw feature rows -> network input (bucket ids, or raw values in baseline mode)."""
        ids = encode(np.atleast_2d(raw_features), self.spec.encoder)  # domain check in both modes
        if self.spec.baseline_mode:
            return np.atleast_2d(np.asarray(raw_features, dtype=np.float64))
        return ids


def init_model(spec: ModelSpec, seed: int = 0, meta: dict | None = None) -> RecommenderModel:
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in spec.tensor_shapes().items():
        if name == "input_mean" or name.endswith("_b"):
            params[name] = np.zeros(shape)
        elif name == "input_scale":
            params[name] = np.ones(shape)
        elif name.startswith("embedding_"):
            params[name] = rng.uniform(-EMBED_INIT, EMBED_INIT, shape)
        else:
            bound = math.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-bound, bound, shape)
    return RecommenderModel(spec, params, dict(meta or {}))


def _input_layer(model: RecommenderModel, x: np.ndarray) -> np.ndarray:
    spec, p = model.spec, model.params
    if x.ndim != 2 or x.shape[1] != spec.num_features:
        raise ShapeError(f"expected {spec.num_features} features per row, got shape {x.shape}")
    if spec.baseline_mode:
        return (x - p["input_mean"]) / p["input_scale"]
    ids = np.asarray(x, dtype=np.int64)
    for i, vocab in enumerate(spec.encoder.vocab_sizes):
        col = ids[:, i]
        if col.size and (col.min() < 0 or col.max() >= vocab):
            raise EncodingError(f"feature {i}: bucket id outside [0, {vocab})")
    return np.concatenate([p[f"embedding_{i}"][ids[:, i]] for i in range(spec.num_features)], axis=1)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    return z


def _forward_all(model: RecommenderModel, x: np.ndarray):
    p = model.params
    a0 = _input_layer(model, x)
    pre = a0 @ p["hidden_w"] + p["hidden_b"]
    h = np.maximum(pre, 0.0)
    probs = _softmax(h @ p["output_w"] + p["output_b"])
    return a0, pre, h, probs


def forward(model: RecommenderModel, inputs) -> np.ndarray:
    """Class probabilities for prepared inputs (one row or a batch)."""
    x = np.asarray(inputs)
    single = x.ndim == 1
    probs = _forward_all(model, np.atleast_2d(x))[-1]
    return probs[0] if single else probs


def loss_and_grad(model: RecommenderModel, inputs, labels) -> tuple[float, dict[str, np.ndarray]]:
    """Mean categorical cross-entropy and its gradient for every trainable tensor."""
    loss, grads, _ = _loss_grad_probs(model, inputs, labels)
    return loss, grads


def _loss_grad_probs(model, inputs, labels):
    x = np.atleast_2d(np.asarray(inputs))
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if len(y) == 0 or len(y) != len(x):
        raise ShapeError(f"batch of {len(x)} inputs with {len(y)} labels")
    spec, p = model.spec, model.params
    a0, pre, h, probs = _forward_all(model, x)
    rows = np.arange(len(y))
    loss = float(-np.log(probs[rows, y]).mean())

    d_logits = probs.copy()
    d_logits[rows, y] -= 1.0
    d_logits /= len(y)
    grads = {
        "output_w": h.T @ d_logits,
        "output_b": d_logits.sum(axis=0),
    }
    d_pre = (d_logits @ p["output_w"].T) * (pre > 0)
    grads["hidden_w"] = a0.T @ d_pre
    grads["hidden_b"] = d_pre.sum(axis=0)
    if not spec.baseline_mode:
        d_a0 = d_pre @ p["hidden_w"].T
        e = spec.embedding_dim
        ids = np.asarray(x, dtype=np.int64)
        for i in range(spec.num_features):
            g = np.zeros_like(p[f"embedding_{i}"])
            np.add.at(g, ids[:, i], d_a0[:, i * e : (i + 1) * e])
            grads[f"embedding_{i}"] = g
    return loss, grads, probs


def predict(model: RecommenderModel, raw_features) -> np.ndarray | int:
    """Label id(s) for raw feature row(s); ties go to the smallest id."""
    raw = np.asarray(raw_features)
    probs = forward(model, model.prepare(raw))
    out = np.argmax(np.atleast_2d(probs), axis=1)
    return int(out[0]) if raw.ndim == 1 else out


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 15
    batch_size: int = 256
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.validation_fraction < 1:
            raise ShapeError("validation_fraction must lie in (0, 1)")
        if self.epochs < 1 or self.batch_size < 1:
            raise ShapeError("epochs and batch_size must be >= 1")


@dataclass
class TrainReport:
    initial_loss: float
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    checkpoint: str | None = None

    def log_lines(self) -> list[str]:
        return [
            f"{e + 1},{loss:.6f},{tacc:.6f},{vacc:.6f}"
            for e, (loss, tacc, vacc) in enumerate(
                zip(self.train_loss, self.train_accuracy, self.val_accuracy)
            )
        ]


class Adam:
    def __init__(self, params: dict[str, np.ndarray], names, cfg: TrainConfig):
        self.cfg = cfg
        self.params = params
        self.names = list(names)
        self.m = {n: np.zeros_like(params[n]) for n in self.names}
        self.v = {n: np.zeros_like(params[n]) for n in self.names}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray]) -> None:
        cfg = self.cfg
        self.t += 1
        lr = cfg.learning_rate * math.sqrt(1 - cfg.adam_beta2**self.t) / (1 - cfg.adam_beta1**self.t)
        for n in self.names:
            g, m, v = grads[n], self.m[n], self.v[n]
            m *= cfg.adam_beta1
            m += (1 - cfg.adam_beta1) * g
            v *= cfg.adam_beta2
            v += (1 - cfg.adam_beta2) * g * g
            self.params[n] -= lr * m / (np.sqrt(v) + cfg.adam_eps)


def split_indices(n: int, fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(train, validation) after a seeded shuffle; validation is the first slice."""
    perm = rng.permutation(n)
    n_val = max(1, int(round(n * fraction)))
    return perm[n_val:], perm[:n_val]


def _accuracy(model: RecommenderModel, x: np.ndarray, y: np.ndarray, chunk: int = 8192) -> float:
    hits = 0
    for i in range(0, len(y), chunk):
        probs = forward(model, x[i : i + chunk])
        hits += int((np.argmax(probs, axis=1) == y[i : i + chunk]).sum())
    return hits / len(y)


def _mean_loss(model: RecommenderModel, x: np.ndarray, y: np.ndarray, chunk: int = 8192) -> float:
    total = 0.0
    for i in range(0, len(y), chunk):
        probs = forward(model, x[i : i + chunk])
        total += float(-np.log(probs[np.arange(len(probs)), y[i : i + chunk]]).sum())
    return total / len(y)


def train(model: RecommenderModel, dataset: Dataset, cfg: TrainConfig = TrainConfig(),
          checkpoint_path=None) -> TrainReport:
    """Fit ``model`` in place with Adam on a seeded 90:10 style split."""
    spec = model.spec
    case = model.meta.get("case")
    if case is not None and case != dataset.case_id:
        raise ShapeError(f"model is for case {case}, dataset is case {dataset.case_id}")
    if dataset.features.shape[1] != spec.num_features:
        raise ShapeError(
            f"dataset has {dataset.features.shape[1]} features, model expects {spec.num_features}"
        )
    if len(dataset) and (dataset.labels.min() < 0 or dataset.labels.max() >= spec.num_classes):
        raise ShapeError(f"labels outside [0, {spec.num_classes})")

    rng = np.random.default_rng(cfg.seed)
    x_all = model.prepare(dataset.features)
    y_all = dataset.labels
    tr, va = split_indices(len(y_all), cfg.validation_fraction, rng)
    if spec.baseline_mode:
        model.params["input_mean"] = x_all[tr].mean(axis=0)
        scale = x_all[tr].std(axis=0)
        scale[scale == 0] = 1.0
        model.params["input_scale"] = scale
    x_tr, y_tr, x_va, y_va = x_all[tr], y_all[tr], x_all[va], y_all[va]

    report = TrainReport(initial_loss=_mean_loss(model, x_tr, y_tr))
    opt = Adam(model.params, model.trainable(), cfg)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(y_tr))
        loss_sum, hits = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x_tr[idx], y_tr[idx]
            loss, grads, probs = _loss_grad_probs(model, xb, yb)
            # Running accuracy, measured before this batch's update.
            hits += int((np.argmax(probs, axis=1) == yb).sum())
            loss_sum += loss * len(idx)
            opt.step(grads)
        report.train_loss.append(loss_sum / len(order))
        report.train_accuracy.append(hits / len(order))
        report.val_accuracy.append(_accuracy(model, x_va, y_va))
        log.info("epoch %d: loss %.4f train_acc %.4f val_acc %.4f", epoch + 1,
                 report.train_loss[-1], report.train_accuracy[-1], report.val_accuracy[-1])
    if checkpoint_path is not None:
        save_checkpoint(model, checkpoint_path)
        report.checkpoint = str(checkpoint_path)
    return report


# Checkpoints: one JSON header line, then little-endian float64 tensors in header order.

def save_checkpoint(model: RecommenderModel, path) -> None:
    shapes = model.spec.tensor_shapes()
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "spec": model.spec.to_json(),
        "meta": model.meta,
        "tensors": [{"name": n, "shape": list(s)} for n, s in shapes.items()],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for name in shapes:
            fh.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())


def load_checkpoint(path) -> RecommenderModel:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    newline = blob.find(b"\n")
    if newline < 0:
        raise CheckpointError(f"{path}: missing header")
    try:
        header = json.loads(blob[:newline])
    except ValueError:
        raise CheckpointError(f"{path}: header is not valid JSON") from None
    if header.get("format") != CHECKPOINT_FORMAT or header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint {header.get('format')!r} v{header.get('version')}"
        )
    try:
        spec = ModelSpec.from_json(header["spec"])
    except (KeyError, TypeError, ValueError, ShapeError) as exc:
        raise CheckpointError(f"{path}: bad model spec: {exc}") from None
    expected = spec.tensor_shapes()
    declared = {t["name"]: tuple(t["shape"]) for t in header.get("tensors", [])}
    if declared != expected or [t["name"] for t in header["tensors"]] != list(expected):
        raise CheckpointError(f"{path}: tensor table does not match the model spec")
    data = blob[newline + 1 :]
    need = sum(math.prod(s) for s in expected.values()) * 8
    if len(data) != need:
        raise CheckpointError(f"{path}: expected {need} bytes of tensor data, found {len(data)}")
    params, offset = {}, 0
    for name, shape in expected.items():
        size = math.prod(shape)
        params[name] = np.frombuffer(data, dtype="<f8", count=size, offset=offset * 8).reshape(shape).astype(np.float64)
        offset += size
    if not all(np.isfinite(v).all() for v in params.values()):
        raise CheckpointError(f"{path}: non-finite parameter values")
    return RecommenderModel(spec, params, header.get("meta", {}))
