"""Sample construction and on-disk synthetic datasets.

Layout of a dataset directory::

    manifest.json          schema-versioned index: config, seeds, labels, splits, normalisation
    lut.bin                lookup table used for decoding
    samples/<id>/          frame_XX.png, force.csv, depth.raw(+.json), gradients.raw(+.json), gt.json
"""
from __future__ import annotations

import csv
import io as _io
import logging
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .. import io
from ..contact import DEFAULT_K2, DEFAULT_N, ForceSequence, infer_stiffness
from ..errors import ConfigurationError, DomainError, InfeasibleModelError
from ..optics import (
    CalibrationLUT,
    FrameGeom,
    background_level,
    calibrate_default,
    decode_depth,
    fit_contact_region,
)
from ..optics.geometry import DEFAULT_AREA, SHAPES
from ..twostream import FORCE_DT, FORCE_FULL_SCALE, FORCE_WINDOW, ForceRegressor, downsample
from .simulate import FRAME_RATE, PRESS_SPEED, FrameWindow, PressScenario, force_window, select_frames, simulate_press

log = logging.getLogger(__name__)

SCHEMA = "taxel-dataset/1"
HARDNESS_GRADES = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0)
PRESS_DEPTHS = (0.2, 0.4, 0.6, 0.8, 1.0)
LABEL_KINDS = ("shape", "hardness", "joint")
#: Contact fit for hand-crafted features: fraction of the decoded peak depth.
FEATURE_FIT_FRACTION = 0.1


@dataclass(frozen=True)
class DatasetConfig:
    shapes: tuple = SHAPES
    hardness: tuple = HARDNESS_GRADES
    depths: tuple = PRESS_DEPTHS
    repetitions: int = 5
    k2: float = DEFAULT_K2
    N: float = DEFAULT_N
    v: float = PRESS_SPEED
    area: float = DEFAULT_AREA
    frame_rate: float = FRAME_RATE
    height: int = 64
    width: int = 64
    pitch: float = 0.08
    net_size: int = 32
    pixel_noise: float = 0.005
    force_noise: float = 0.0
    jitter_mm: float = 0.3
    rotation_deg: float = 10.0
    force_mode: str = "oracle"  # or "regressor"
    regressor: str | None = None  # checkpoint path, required in regressor mode
    lut: str | None = None  # LUT path; calibrated from sphere presses when absent
    split: tuple = (0.70, 0.15, 0.15)
    write_frames: bool = True

    def __post_init__(self):
        for name in ("shapes", "hardness", "depths", "split"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        unknown = set(self.shapes) - set(SHAPES)
        if unknown:
            raise ConfigurationError(f"unknown shapes {sorted(unknown)}")
        if self.force_mode not in ("oracle", "regressor"):
            raise ConfigurationError(f"force_mode must be oracle or regressor, got {self.force_mode!r}")
        if self.force_mode == "regressor" and not self.regressor:
            raise ConfigurationError("regressor force mode needs a regressor checkpoint path")
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be >= 1")
        if abs(sum(self.split) - 1.0) > 1e-9 or len(self.split) != 3:
            raise ConfigurationError("split must be three fractions summing to 1")
        if self.height % self.net_size or self.width % self.net_size or self.net_size % 32:
            raise ConfigurationError("net_size must be a multiple of 32 dividing the frame size")

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown dataset config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}

    @property
    def geom(self) -> FrameGeom:
        return FrameGeom(self.height, self.width, self.pitch)

    @property
    def n_classes(self) -> dict:
        ns, nh = len(self.shapes), len(self.hardness)
        return {"shape": ns, "hardness": nh, "joint": ns * nh}

    def class_labels(self, kind: str) -> list:
        if kind == "shape":
            return list(self.shapes)
        if kind == "hardness":
            return [f"{h:g}HA" for h in self.hardness]
        return [f"{s}/{h:g}HA" for s in self.shapes for h in self.hardness]

    def grid(self):
        """Scenario grid in canonical order: shape, hardness, depth, repetition."""
        for si, s in enumerate(self.shapes):
            for hi, h in enumerate(self.hardness):
                for d in self.depths:
                    for r in range(self.repetitions):
                        yield si, hi, s, h, d, r


@dataclass
class Sample:
    id: str
    depth: np.ndarray  # H x W decoded depth, border level at 0 (mm)
    gx: np.ndarray
    gy: np.ndarray
    force: ForceSequence  # per-frame force sequence feeding the force stream
    force_input: np.ndarray  # (T,) in N, fixed-grid window with dwell
    labels: dict
    features: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def depth_input(self, size: int) -> np.ndarray:
        """Unnormalised 3 x size x size stack (depth, gx, gy)."""
        return downsample(np.stack([self.depth, self.gx, self.gy]), size, size)


def build_sample(
    w: FrameWindow,
    seq: ForceSequence,
    lut: CalibrationLUT,
    reference=None,
    mode: str = "oracle",
    regressor: ForceRegressor | None = None,
    v: float = PRESS_SPEED,
    k2: float = DEFAULT_K2,
    labels: dict | None = None,
    sample_id: str = "",
    provenance: dict | None = None,
) -> Sample:
    """Decode the external stream into a depth input and the internal stream into a force window."""
    provenance = provenance or {}
    try:
        (first, last), internal = select_frames(w)
        ref = reference if reference is not None else first
        g, d = decode_depth(last, ref, lut)
        depth = d.depth - background_level(d)
        if mode == "oracle":
            used = seq
        elif mode == "regressor":
            if regressor is None:
                raise ConfigurationError("regressor mode needs a trained ForceRegressor")
            diffs = np.stack([f.pixels - ref.pixels for f in internal])
            F = regressor.predict(diffs)
            used = ForceSequence(F=F, dt=float(w.timestamps[1] - w.timestamps[0]))
        else:
            raise ConfigurationError(f"unknown force mode {mode!r}")
        features = hand_features(depth, d.pitch, used, v, k2)
    except DomainError as exc:
        if exc.provenance is None:
            exc.provenance = provenance or sample_id
        raise
    return Sample(
        id=sample_id,
        depth=depth,
        gx=g.gx,
        gy=g.gy,
        force=used,
        force_input=force_window(used, FORCE_WINDOW, FORCE_DT),
        labels=labels or {},
        features=features,
        provenance=provenance,
    )


def hand_features(depth, pitch, seq: ForceSequence, v, k2) -> dict:
    """Fitted contact radius and inferred object stiffness (the hand-crafted baseline inputs)."""
    from ..optics import DepthMap

    peak = float(depth.max())
    fit = None
    if peak > 0:
        fit = fit_contact_region(DepthMap(depth, pitch), FEATURE_FIT_FRACTION * peak, baseline=0.0)
    radius = fit.radius if fit is not None else 0.0
    try:
        k1 = infer_stiffness(seq, v, k2) if len(seq) >= 3 else 0.0
    except InfeasibleModelError:
        k1 = 1e3  # saturated: indistinguishable from rigid
    except DomainError:
        k1 = 0.0  # no force build-up, nothing to push against
    return {"radius": float(radius), "stiffness": float(k1)}


# -- generation ---------------------------------------------------------------


def _scenario(cfg: DatasetConfig, index: int, s: str, h: float, d: float, seed: int) -> PressScenario:
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    offset = tuple(float(x) for x in rng.uniform(-cfg.jitter_mm, cfg.jitter_mm, size=2))
    rotation = float(rng.uniform(-cfg.rotation_deg, cfg.rotation_deg))
    sample_seed = int(rng.integers(0, 2**31 - 1))
    return PressScenario(
        shape=s,
        hardness=h,
        depth=d,
        k2=cfg.k2,
        v=cfg.v,
        N=cfg.N,
        area=cfg.area,
        offset=offset,
        rotation=rotation,
        seed=sample_seed,
        pixel_noise=cfg.pixel_noise,
        force_noise=cfg.force_noise,
        frame_rate=cfg.frame_rate,
        geom=cfg.geom,
    )


def sample_id(index: int) -> str:
    return f"s{index:05d}"


def _write_sample(root: Path, sid: str, w: FrameWindow, sample: Sample, scenario: PressScenario, gt_depth, write_frames: bool):
    final = root / "samples" / sid
    tmp = root / "samples" / f".{sid}.tmp"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    if write_frames:
        for i, frame in enumerate(w.frames):
            io.write_png(tmp / f"frame_{i:02d}.png", frame.pixels)
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "F"])
    for t, F in zip(sample.force.t, sample.force.F):
        writer.writerow([f"{t:.6f}", repr(float(F))])
    (tmp / "force.csv").write_text(buf.getvalue())
    io.write_raw(tmp / "depth.raw", sample.depth, scenario.geom.pitch, kind="depth")
    io.write_raw(tmp / "gradients.raw", np.stack([sample.gx, sample.gy]), scenario.geom.pitch, kind="gradients")
    gt = {
        "scenario": scenario.to_dict(),
        "labels": sample.labels,
        "k1": scenario.k1,
        "k_total": scenario.model.k_total,
        "final_imprint_mm": float(gt_depth.depth.max()),
        "features": sample.features,
        "n_frames": len(w),
    }
    io.write_json(tmp / "gt.json", gt)
    if final.exists():
        shutil.rmtree(final)
    os.replace(tmp, final)


# per-process state for pool workers
_WORKER = {}


def _init_worker(cfg_dict, root, seed, lut_path):
    cfg = DatasetConfig.from_dict(cfg_dict)
    regressor = None
    if cfg.force_mode == "regressor":
        from ..nn import load_checkpoint

        regressor, _ = load_checkpoint(cfg.regressor)
    _WORKER.update(cfg=cfg, root=Path(root), seed=seed, lut=io.load_lut(lut_path), regressor=regressor)


def _generate_one(job):
    index, si, hi, s, h, d, r = job
    cfg, root, seed = _WORKER["cfg"], _WORKER["root"], _WORKER["seed"]
    sc = _scenario(cfg, index, s, h, d, seed)
    sid = sample_id(index)
    labels = {"shape": si, "hardness": hi, "joint": si * len(cfg.hardness) + hi}
    prov = {"sample": sid, "shape": s, "hardness": h, "depth": d, "repetition": r, "seed": sc.seed}
    w, seq, gt_depth = simulate_press(sc)
    sample = build_sample(
        w, seq, _WORKER["lut"], mode=cfg.force_mode, regressor=_WORKER["regressor"],
        v=cfg.v, k2=cfg.k2, labels=labels, sample_id=sid, provenance=prov,
    )
    _write_sample(root, sid, w, sample, sc, gt_depth, cfg.write_frames)
    # stats are computed from the float32 values that were written
    full = np.stack([sample.depth, sample.gx, sample.gy]).astype(np.float32).astype(float)
    x = downsample(full, cfg.net_size, cfg.net_size)
    entry = {
        "id": sid,
        "shape": s,
        "hardness": h,
        "depth": d,
        "repetition": r,
        "seed": sc.seed,
        "labels": labels,
        "n_frames": len(w),
    }
    return entry, x


def stratified_split(labels, fractions, seed):
    """Per-class seeded shuffle; counts by largest remainder so every class splits the same way."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 7919]))
    out = np.empty(labels.size, dtype=object)
    names = ("train", "val", "test")
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        raw = np.array(fractions) * idx.size
        counts = np.floor(raw).astype(int)
        rem = idx.size - counts.sum()
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:rem]] += 1
        start = 0
        for name, n in zip(names, counts):
            out[idx[start : start + n]] = name
            start += n
    return out.tolist()


def _manifest(cfg, seed, entries, lut, complete, stats=None, splits=None):
    m = {
        "schema": SCHEMA,
        "seed": seed,
        "config": cfg.to_dict(),
        "complete": complete,
        "lut": {"path": "lut.bin", **lut.header()},
        "classes": {k: cfg.class_labels(k) for k in LABEL_KINDS},
        "force": {"T": FORCE_WINDOW, "dt": FORCE_DT, "full_scale": FORCE_FULL_SCALE},
        "samples": entries,
        "n_samples": len(entries),
    }
    if splits is not None:
        m["splits"] = {k: sorted(e["id"] for e in entries if e["split"] == k) for k in ("train", "val", "test")}
    if stats is not None:
        m["normalization"] = stats
    return m


def gen_dataset(config: DatasetConfig, out_dir, seed: int = 0, jobs: int = 1) -> Path:
    """Generate the full scenario grid into ``out_dir``; deterministic in (config, seed)."""
    root = Path(out_dir)
    (root / "samples").mkdir(parents=True, exist_ok=True)
    if config.lut:
        lut = io.load_lut(config.lut)
    else:
        lut, _ = calibrate_default(config.geom)
    lut_path = root / "lut.bin"
    io.save_lut(lut_path, lut)

    jobs_list = [(i,) + g for i, g in enumerate(config.grid())]
    entries, inputs = [], []
    init = (config.to_dict(), str(root), seed, str(lut_path))
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=init) as pool:
                for entry, x in pool.map(_generate_one, jobs_list, chunksize=8):
                    entries.append(entry)
                    inputs.append(x)
        else:
            _init_worker(*init)
            for job in jobs_list:
                entry, x = _generate_one(job)
                entries.append(entry)
                inputs.append(x)
    except BaseException:
        io.write_json(root / "manifest.json", _manifest(config, seed, entries, lut, complete=False))
        raise

    splits = stratified_split([e["labels"]["joint"] for e in entries], config.split, seed)
    for e, s in zip(entries, splits):
        e["split"] = s
    train = np.stack([x for x, s in zip(inputs, splits) if s == "train"])
    mean = train.mean(axis=(0, 2, 3))
    std = train.std(axis=(0, 2, 3))
    stats = {"depth_mean": mean.tolist(), "depth_std": np.where(std > 0, std, 1.0).tolist(), "force_scale": FORCE_FULL_SCALE}
    io.write_json(root / "manifest.json", _manifest(config, seed, entries, lut, True, stats, splits))
    log.info("wrote %d samples to %s", len(entries), root)
    return root


# -- loading ------------------------------------------------------------------


@dataclass
class Dataset:
    root: Path
    manifest: dict
    depth: np.ndarray  # (N, 3, s, s) normalised
    force: np.ndarray  # (N, 1, T) normalised by full scale
    labels: dict  # kind -> (N,) int
    split: np.ndarray  # (N,) str
    features: np.ndarray  # (N, 2) radius, stiffness
    ids: list

    @property
    def config(self) -> DatasetConfig:
        return DatasetConfig.from_dict(self.manifest["config"])

    def indices(self, split: str) -> np.ndarray:
        return np.flatnonzero(self.split == split)

    def n_classes(self, kind: str) -> int:
        return len(self.manifest["classes"][kind])


def read_force_csv(path) -> ForceSequence:
    rows = list(csv.reader(Path(path).read_text().splitlines()))
    t = np.array([float(r[0]) for r in rows[1:]])
    F = np.array([float(r[1]) for r in rows[1:]])
    dt = float(t[1] - t[0]) if t.size > 1 else 1.0
    return ForceSequence(F=F, dt=dt)


def load_dataset(path) -> Dataset:
    root = Path(path)
    manifest = io.read_json(root / "manifest.json")
    if manifest.get("schema") != SCHEMA:
        raise DomainError(f"{root}: unsupported dataset schema {manifest.get('schema')!r}")
    if not manifest.get("complete"):
        raise DomainError(f"{root}: dataset generation did not complete")
    cfg = DatasetConfig.from_dict(manifest["config"])
    stats = manifest["normalization"]
    mean = np.array(stats["depth_mean"])[:, None, None]
    std = np.array(stats["depth_std"])[:, None, None]
    depth, force, feats = [], [], []
    labels = {k: [] for k in LABEL_KINDS}
    for e in manifest["samples"]:
        sdir = root / "samples" / e["id"]
        d, _ = io.read_raw(sdir / "depth.raw")
        g, _ = io.read_raw(sdir / "gradients.raw")
        x = downsample(np.stack([d, g[0], g[1]]), cfg.net_size, cfg.net_size)
        depth.append((x - mean) / std)
        seq = read_force_csv(sdir / "force.csv")
        force.append(force_window(seq)[None] / stats["force_scale"])
        gt = io.read_json(sdir / "gt.json")
        feats.append([gt["features"]["radius"], gt["features"]["stiffness"]])
        for k in LABEL_KINDS:
            labels[k].append(e["labels"][k])
    return Dataset(
        root=root,
        manifest=manifest,
        depth=np.stack(depth),
        force=np.stack(force),
        labels={k: np.array(v) for k, v in labels.items()},
        split=np.array([e["split"] for e in manifest["samples"]]),
        features=np.array(feats),
        ids=[e["id"] for e in manifest["samples"]],
    )
