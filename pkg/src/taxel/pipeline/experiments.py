"""Experiment recipes: force-regressor training, the modality ablation and
the hand-crafted-feature baseline."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .. import io
from ..contact import DEFAULT_K2
from ..errors import ConfigurationError
from ..nn import mse_loss
from ..optics import FrameGeom, GradientField, LightRig, ShapeSpec, height_field, normals_from_height, render
from ..optics.geometry import DEFAULT_AREA, SHAPES
from ..optics.render import PIXEL_NOISE_SIGMA
from ..twostream import FORCE_FULL_SCALE, MODALITIES, ForceRegressor
from .dataset import Dataset
from .simulate import PressScenario, simulate_press
from .training import EvalReport, ModelSpec, TrainConfig, TrainResult, evaluate, fit, train

log = logging.getLogger(__name__)

REGRESSOR_SHAPES = SHAPES + ("sphere",)


# -- force regressor ----------------------------------------------------------


@dataclass(frozen=True)
class RegressorConfig:
    n_train: int = 1200
    n_val: int = 200
    n_test: int = 300
    max_force: float = FORCE_FULL_SCALE
    k2: float = DEFAULT_K2
    shapes: tuple = ("sphere",)  # the calibration probe
    area: float = DEFAULT_AREA
    pixel_noise: float = PIXEL_NOISE_SIGMA
    jitter_mm: float = 0.1  # the calibration rig fixes the contact position
    rotation_deg: float = 10.0
    height: int = 64
    width: int = 64
    pitch: float = 0.08
    net_size: int = 32

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        bad = set(self.shapes) - set(REGRESSOR_SHAPES)
        if bad:
            raise ConfigurationError(f"unknown shapes {sorted(bad)}")
        if min(self.n_train, self.n_val, self.n_test) < 1:
            raise ConfigurationError("regressor splits must be non-empty")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown regressor config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        d["shapes"] = list(self.shapes)
        return d

    @property
    def geom(self):
        return FrameGeom(self.height, self.width, self.pitch)


def regressor_presses(cfg: RegressorConfig, n: int, seed, rig: LightRig = LightRig()):
    """``n`` random static presses -> (difference images (n,H,W,3), forces in N).

    The elastomer spring carries the contact force, so ``F = k2 * x2`` for an
    imprint of depth ``x2``; imprints are drawn uniformly over ``[0, max_force/k2]``.
    """
    geom = cfg.geom
    diffs = np.empty((n, geom.height, geom.width, 3))
    forces = np.empty(n)
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([*np.atleast_1d(seed).tolist(), i]))
        kind = cfg.shapes[rng.integers(len(cfg.shapes))]
        x2 = rng.uniform(0.0, cfg.max_force / cfg.k2)
        offset = tuple(rng.uniform(-cfg.jitter_mm, cfg.jitter_mm, size=2))
        rotation = rng.uniform(-cfg.rotation_deg, cfg.rotation_deg)
        s_ref, s_frame = rng.integers(0, 2**31 - 1, size=2)
        shape = ShapeSpec(kind, area=cfg.area, offset=offset, rotation=rotation)
        frame = render(normals_from_height(height_field(shape, x2, geom)), rig, cfg.pixel_noise, int(s_frame))
        ref = render(GradientField.zeros((geom.height, geom.width), geom.pitch), rig, cfg.pixel_noise, int(s_ref))
        diffs[i] = frame.quantized().pixels - ref.quantized().pixels
        forces[i] = cfg.k2 * x2
    return diffs, forces


REGRESSOR_TRAIN = TrainConfig(epochs=40, batch_size=16, lr=4e-3, weight_decay=0.0)


def train_regressor(cfg: RegressorConfig, out_dir, hyper: TrainConfig = REGRESSOR_TRAIN, seed: int = 0):
    """Train a :class:`ForceRegressor` on MSE of force / full scale.

    Returns ``(TrainResult, metrics)``; metrics hold the held-out MAE in N.
    """
    model = ForceRegressor(cfg.net_size, cfg.net_size, full_scale=cfg.max_force).init(hyper.seed)
    sets = {}
    for k, name in enumerate(("train", "val", "test")):
        diffs, forces = regressor_presses(cfg, getattr(cfg, f"n_{name}"), [seed, k])
        sets[name] = (model.prepare(diffs), forces)
    x_tr, f_tr = sets["train"]
    target = f_tr / model.full_scale

    def batch_loss(m, idx):
        y, tape = m.forward(x_tr[idx])
        loss, dy = mse_loss(y, target[idx])
        return loss, m.backward(tape, dy)

    def validate(m):
        x, f = sets["val"]
        pred = _predict_prepared(m, x)
        loss, _ = mse_loss(pred / m.full_scale, f / m.full_scale)
        return -float(np.mean(np.abs(pred - f))), loss

    meta = {"config": cfg.to_dict(), "seed": seed, "target": "force_N"}
    result = fit(model, batch_loss, f_tr.size, validate, hyper, out_dir, meta)
    x_te, f_te = sets["test"]
    pred = _predict_prepared(result.model, x_te)
    err = np.abs(pred - f_te)
    metrics = {
        "test_mae_N": float(err.mean()),
        "test_max_error_N": float(err.max()),
        "n_test": int(f_te.size),
        "force_range_N": [float(f_te.min()), float(f_te.max())],
        "best_epoch": result.best_epoch,
    }
    io.write_json(Path(out_dir) / "metrics.json", metrics)
    return result, metrics


def _predict_prepared(model: ForceRegressor, x, batch=128):
    out = [model.forward(x[s : s + batch])[0] for s in range(0, len(x), batch)]
    return np.concatenate(out) * model.full_scale


@dataclass
class PressSweep:
    t: np.ndarray
    truth: np.ndarray
    predicted: np.ndarray
    expected_slope: float  # k_total * v, N/s

    @property
    def slope(self) -> float:
        return float(np.polyfit(self.t, self.predicted, 1)[0])

    @property
    def max_drop(self) -> float:
        """Largest fall of the prediction below its running maximum (N)."""
        return float(np.max(np.maximum.accumulate(self.predicted) - self.predicted))

    @property
    def mae(self) -> float:
        return float(np.mean(np.abs(self.predicted - self.truth)))


def press_sweep(model: ForceRegressor, scenario: PressScenario, rig: LightRig = LightRig()) -> PressSweep:
    """Regress force on every frame of a simulated press against its first frame."""
    w, seq, _ = simulate_press(scenario, rig)
    ref = w.reference.pixels
    pred = model.predict(np.stack([f.pixels - ref for f in w.frames]))
    return PressSweep(w.timestamps, seq.F, pred, scenario.model.k_total * scenario.v)


# -- ablation and baseline ------------------------------------------------------


def ablate(ds: Dataset, hyper: TrainConfig, out_dir, label_kind: str = "joint") -> dict:
    """Train fused, geometry-only and force-only models under one budget.

    Returns ``{modality: EvalReport}`` on the test split and writes one report
    per modality plus ``summary.json``.
    """
    out = Path(out_dir)
    reports = {}
    for modality in MODALITIES:
        spec = ModelSpec(label_kind=label_kind, modality=modality)
        res = train(spec, ds, hyper, out / modality)
        rep = evaluate(res.model, ds, "test", label_kind, model_kind=label_kind)
        rep.save(out / modality)
        reports[modality] = rep
        log.info("%s %s accuracy %.4f", modality, label_kind, rep.accuracy)
    io.write_json(out / "summary.json", ablation_summary(reports))
    return reports


def ablation_summary(reports: dict) -> dict:
    acc = {m: r.accuracy for m, r in reports.items()}
    single = max(acc["geometry"], acc["force"])
    return {
        "label_kind": reports["fused"].label_kind,
        "accuracy": acc,
        "fused_margin": acc["fused"] - single,
        "fused_dominates": acc["fused"] >= acc["geometry"] and acc["fused"] >= acc["force"],
    }


BASELINE_TRAIN = TrainConfig(epochs=300, batch_size=32, lr=1e-2, weight_decay=0.0)


def manual_baseline(ds: Dataset, out_dir, hyper: TrainConfig = BASELINE_TRAIN, label_kind: str = "joint") -> tuple[TrainResult, EvalReport]:
    """Two hand-crafted features (contact radius, inferred stiffness) -> small MLP."""
    res = train(ModelSpec(type="mlp", label_kind=label_kind), ds, hyper, out_dir)
    rep = evaluate(res.checkpoint, ds, "test", label_kind)
    rep.save(out_dir)
    return res, rep
