"""Minibatch training and confusion-matrix evaluation."""
from __future__ import annotations

import copy
import csv
import io as _io
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .. import io
from ..errors import ConfigurationError, TrainingDiverged
from ..nn import (
    AdamHyper,
    Dense,
    Network,
    ReLU,
    adam_step,
    init_params,
    load_checkpoint,
    save_checkpoint,
    softmax_cross_entropy,
)
from ..twostream import TwoStreamModel
from .dataset import LABEL_KINDS, Dataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 16
    lr: float = 2e-3
    schedule: str = "cosine"  # or "constant"
    weight_decay: float = 0.5  # decoupled; keeps the depth branch from memorising pixel noise
    seed: int = 0

    def __post_init__(self):
        if self.schedule not in ("cosine", "constant"):
            raise ConfigurationError(f"schedule must be cosine or constant, got {self.schedule!r}")
        if self.epochs < 1 or self.batch_size < 1 or not self.lr > 0:
            raise ConfigurationError("epochs, batch_size and lr must be positive")

    def lr_at(self, epoch: int) -> float:
        """Learning rate for 1-based ``epoch``; cosine decays to zero over the run."""
        if self.schedule == "constant":
            return self.lr
        return 0.5 * self.lr * (1.0 + math.cos(math.pi * (epoch - 1) / self.epochs))

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown training keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class ModelSpec:
    """What to train: ``two-stream`` (with a fusion ``modality``) or the hand-feature ``mlp``."""

    type: str = "two-stream"
    label_kind: str = "joint"
    modality: str = "fused"
    hidden: int = 32  # mlp only

    def __post_init__(self):
        if self.type not in ("two-stream", "mlp"):
            raise ConfigurationError(f"unknown model type {self.type!r}")
        if self.label_kind not in LABEL_KINDS:
            raise ConfigurationError(f"label kind must be one of {LABEL_KINDS}")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown model keys: {sorted(unknown)}")
        return cls(**d)


def build_model(spec: ModelSpec, ds: Dataset, seed: int):
    kind = spec.label_kind
    n = ds.n_classes(kind)
    labels = ds.manifest["classes"][kind]
    if spec.type == "two-stream":
        size = ds.depth.shape[-1]
        return TwoStreamModel(n, size, size, ds.force.shape[-1], modality=spec.modality, labels=labels).init(seed)
    net = Network([Dense(ds.features.shape[1], spec.hidden), ReLU(), Dense(spec.hidden, n)], (ds.features.shape[1],), name="mlp")
    return init_params(net, seed)


def _feature_stats(ds: Dataset):
    tr = ds.features[ds.indices("train")]
    mean = tr.mean(axis=0)
    std = tr.std(axis=0)
    return mean, np.where(std > 0, std, 1.0)


def _batch_logits(model, ds: Dataset, idx, fstats=None):
    if isinstance(model, TwoStreamModel):
        logits, _ = model.forward(ds.depth[idx], ds.force[idx])
        return logits
    mean, std = fstats
    return model((ds.features[idx] - mean) / std)


def predict(model, ds: Dataset, idx, fstats=None, batch=64):
    out = []
    for s in range(0, len(idx), batch):
        out.append(_batch_logits(model, ds, idx[s : s + batch], fstats))
    return np.concatenate(out) if out else np.zeros((0, 1))


@dataclass
class TrainResult:
    checkpoint: Path
    history: list
    best_epoch: int
    model: object = field(repr=False, default=None)


def fit(model, batch_loss, n_train, validate, hyper: "TrainConfig", out_dir, meta: dict) -> TrainResult:
    """Generic minibatch Adam loop.

    ``batch_loss(model, idx) -> (loss, grads)`` over training rows ``idx``;
    ``validate(model) -> (score, loss)`` where a higher score is better.
    The best-validation parameters are written to ``checkpoint.bin`` and the
    per-epoch history to ``history.json``. A non-finite loss saves the last
    good parameters and raises :class:`TrainingDiverged`.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "checkpoint.bin"
    rng = np.random.default_rng(np.random.SeedSequence([hyper.seed, 1]))
    state = None
    history = []
    best = (-math.inf, math.inf)
    best_params = copy.deepcopy(model.params)
    best_epoch = 0
    meta = dict(meta, train=asdict(hyper))
    for epoch in range(1, hyper.epochs + 1):
        order = rng.permutation(n_train)
        adam = AdamHyper(lr=hyper.lr_at(epoch), weight_decay=hyper.weight_decay)
        total = 0.0
        for s in range(0, n_train, hyper.batch_size):
            idx = order[s : s + hyper.batch_size]
            loss, grads = batch_loss(model, idx)
            if not math.isfinite(loss):
                model.set_params(best_params)
                save_checkpoint(ckpt, model, dict(meta, epoch=best_epoch, diverged_at=epoch))
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}", checkpoint=ckpt)
            params, state = adam_step(model.params, grads, state, adam)
            model.set_params(params)
            total += loss * idx.size
        score, val_loss = validate(model)
        history.append({"epoch": epoch, "train_loss": total / n_train, "val_loss": val_loss, "val_score": score})
        log.info("epoch %d train_loss %.5f val_loss %.5f val_score %.4f", epoch, total / n_train, val_loss, score)
        if (score, -val_loss) > (best[0], -best[1]):
            best = (score, val_loss)
            best_params = copy.deepcopy(model.params)
            best_epoch = epoch
    model.set_params(best_params)
    save_checkpoint(ckpt, model, dict(meta, epoch=best_epoch))
    io.write_json(out / "history.json", history)
    return TrainResult(checkpoint=ckpt, history=history, best_epoch=best_epoch, model=model)


def train(spec: ModelSpec, ds: Dataset, hyper: TrainConfig, out_dir) -> TrainResult:
    """Classifier training over softmax cross-entropy; validation score is accuracy."""
    model = build_model(spec, ds, hyper.seed)
    y = ds.labels[spec.label_kind]
    tr, va = ds.indices("train"), ds.indices("val")
    if tr.size == 0:
        raise ConfigurationError("dataset has no training split")
    fstats = _feature_stats(ds) if spec.type == "mlp" else None
    meta = {
        "model_spec": asdict(spec),
        "dataset_seed": ds.manifest.get("seed"),
        "labels": ds.manifest["classes"][spec.label_kind],
        "label_kind": spec.label_kind,
    }
    if fstats is not None:
        meta["feature_mean"] = fstats[0].tolist()
        meta["feature_std"] = fstats[1].tolist()

    def batch_loss(model, i):
        idx = tr[i]
        if isinstance(model, TwoStreamModel):
            logits, tape = model.forward(ds.depth[idx], ds.force[idx])
        else:
            logits, tape = model.forward((ds.features[idx] - fstats[0]) / fstats[1])
        loss, dlogits = softmax_cross_entropy(logits, y[idx])
        return loss, model.backward(tape, dlogits)

    def validate(model):
        if va.size == 0:
            return 0.0, 0.0
        logits = predict(model, ds, va, fstats)
        loss, _ = softmax_cross_entropy(logits, y[va])
        return float(np.mean(logits.argmax(axis=1) == y[va])), loss

    return fit(model, batch_loss, tr.size, validate, hyper, out_dir, meta)


# -- evaluation ---------------------------------------------------------------


@dataclass
class EvalReport:
    label_kind: str
    labels: list
    confusion: np.ndarray  # rows: true class, columns: predicted

    @classmethod
    def from_predictions(cls, label_kind, labels, y_true, y_pred):
        C = len(labels)
        cm = np.zeros((C, C), dtype=int)
        np.add.at(cm, (np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)), 1)
        return cls(label_kind, list(labels), cm)

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.total) if self.total else 0.0

    @property
    def per_class_accuracy(self) -> list:
        rows = self.confusion.sum(axis=1)
        return [float(self.confusion[i, i] / r) if r else None for i, r in enumerate(rows)]

    def to_dict(self) -> dict:
        return {
            "label_kind": self.label_kind,
            "labels": self.labels,
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "per_class_accuracy": self.per_class_accuracy,
            "total": self.total,
        }

    def confusion_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true\\pred"] + self.labels)
        for lab, row in zip(self.labels, self.confusion.tolist()):
            w.writerow([lab] + row)
        return buf.getvalue()

    def save(self, out_dir, stem="report"):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        io.write_json(out / f"{stem}.json", self.to_dict())
        (out / f"{stem}_confusion.csv").write_text(self.confusion_csv())


def _project(joint_pred, kind, n_hardness):
    if kind == "shape":
        return joint_pred // n_hardness
    if kind == "hardness":
        return joint_pred % n_hardness
    return joint_pred


def evaluate(model, ds: Dataset, split: str = "test", label_kind: str = "joint", model_kind: str | None = None, meta=None) -> EvalReport:
    """Confusion matrix of ``model`` on one split.

    A model trained on joint labels can be scored on ``shape`` or ``hardness``
    by projecting its joint prediction.
    """
    if label_kind not in LABEL_KINDS:
        raise ConfigurationError(f"label kind must be one of {LABEL_KINDS}")
    if isinstance(model, (str, Path)):
        model, meta = load_checkpoint(model)
    meta = meta or {}
    model_kind = model_kind or meta.get("label_kind") or "joint"
    fstats = None
    if "feature_mean" in meta:
        fstats = (np.array(meta["feature_mean"]), np.array(meta["feature_std"]))
    idx = ds.indices(split)
    pred = predict(model, ds, idx, fstats).argmax(axis=1)
    if model_kind != label_kind:
        if model_kind != "joint":
            raise ConfigurationError(f"a {model_kind} model cannot be scored on {label_kind} labels")
        pred = _project(pred, label_kind, ds.n_classes("hardness"))
    return EvalReport.from_predictions(label_kind, ds.manifest["classes"][label_kind], ds.labels[label_kind][idx], pred)
