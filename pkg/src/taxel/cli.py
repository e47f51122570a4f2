"""``taxel`` command-line entry point.

Exit status: 0 on success, 1 on a domain error, 2 on a usage error.
Verbosity comes from ``TAXEL_LOG`` (error, warn, info, debug).
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from .errors import ConfigurationError, DomainError, UsageError

log = logging.getLogger("taxel")

RUN_SCHEMA = "taxel-run/1"
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


# -- helpers ------------------------------------------------------------------


def _setup_logging():
    name = os.environ.get("TAXEL_LOG", "warn").strip().lower()
    if name not in LOG_LEVELS:
        raise UsageError(f"TAXEL_LOG must be one of {sorted(LOG_LEVELS)}, got {name!r}")
    root = logging.getLogger("taxel")
    root.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(LOG_LEVELS[name])
    root.propagate = False


def _load_config(path, allowed) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file {p} not found")
    try:
        cfg = io.read_json(p)
    except ValueError as exc:
        raise UsageError(f"{p} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"{p} must hold a JSON object")
    unknown = set(cfg) - set(allowed)
    if unknown:
        raise UsageError(f"{p}: unknown config keys {sorted(unknown)}; allowed: {sorted(allowed)}")
    return cfg


def _parse(factory, d, what):
    try:
        return factory(d)
    except ConfigurationError as exc:
        raise UsageError(f"{what}: {exc}") from exc
    except TypeError as exc:
        raise UsageError(f"{what}: {exc}") from exc


def _need(path, what, is_dir=False):
    p = Path(path)
    ok = p.is_dir() if is_dir else p.is_file()
    if not ok:
        raise UsageError(f"{what} {p} not found")
    return p


def _out_dir(path) -> Path:
    out = Path(path)
    if out.exists() and (not out.is_dir() or any(out.iterdir())):
        raise UsageError(f"output directory {out} already exists and is not empty")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolved(out: Path, args, config: dict, inputs: dict | None = None):
    io.write_json(
        out / "config.resolved.json",
        {
            "schema": RUN_SCHEMA,
            "taxel_version": __version__,
            "command": args.command,
            "seed": args.seed,
            "jobs": args.jobs,
            "config": config,
            "inputs": {k: str(v) for k, v in (inputs or {}).items()},
        },
    )


# -- commands -------------------------------------------------------------------


def cmd_gen_data(args):
    from .pipeline.dataset import DatasetConfig, gen_dataset

    raw = _load_config(args.config, DatasetConfig.__dataclass_fields__)
    cfg = _parse(DatasetConfig.from_dict, raw, "dataset config")
    out = _out_dir(args.out)
    _resolved(out, args, cfg.to_dict())
    gen_dataset(cfg, out, seed=args.seed, jobs=args.jobs)
    print(f"wrote {sum(1 for _ in cfg.grid())} samples to {out}")


CALIBRATE_KEYS = {"height", "width", "pitch", "bins", "depths", "radius"}


def cmd_calibrate(args):
    from .optics import FrameGeom, recon_mae
    from .optics.calibration import CALIBRATION_DEPTHS, CALIBRATION_RADIUS, calibrate_default, hertz_sweep
    from .optics.lut import DEFAULT_BINS

    raw = _load_config(args.config, CALIBRATE_KEYS)
    cfg = {"height": 64, "width": 64, "pitch": 0.08, "bins": DEFAULT_BINS,
           "depths": list(CALIBRATION_DEPTHS), "radius": CALIBRATION_RADIUS, **raw}
    geom = _parse(lambda c: FrameGeom(c["height"], c["width"], c["pitch"]), cfg, "calibration config")
    out = _out_dir(args.out)
    _resolved(out, args, cfg)
    lut, ref = calibrate_default(geom, depths=tuple(cfg["depths"]), R=cfg["radius"], bins=cfg["bins"])
    io.save_lut(out / "lut.bin", lut)
    io.write_png(out / "reference.png", ref.pixels)
    sweep = hertz_sweep(lut, ref, tuple(cfg["depths"]), cfg["radius"], geom)
    evals = [p.eval for p in sweep]
    mae = recon_mae(evals)
    rows = [["Z_mm", "expected_area_mm2", "estimated_area_mm2", "expected_radius_mm", "estimated_radius_mm"]]
    for p in sweep:
        rows.append([repr(p.Z), repr(p.eval.S_A), repr(p.eval.S_E), repr(p.expected_radius),
                     repr(p.fit.radius if p.fit else 0.0)])
    _write_csv(out / "sweep.csv", rows)
    io.write_json(out / "calibration.json", {
        "lut": lut.header(), "fill_fraction": lut.fill_fraction, "area_mae": mae, "depths": cfg["depths"],
    })
    print(f"lut fill {lut.fill_fraction:.3f}, normalised area MAE {mae:.4f}")


def cmd_reconstruct(args):
    from .optics import TactileFrame
    from .optics.calibration import decode_depth

    frame = TactileFrame(io.read_png(_need(args.frame, "frame")), args.pitch)
    ref = TactileFrame(io.read_png(_need(args.ref, "reference frame")), args.pitch)
    lut = io.load_lut(_need(args.lut, "lookup table"))
    if frame.pixels.shape != ref.pixels.shape:
        raise DomainError(f"frame {frame.pixels.shape} and reference {ref.pixels.shape} differ in size")
    dest = Path(args.out)
    if dest.exists():
        raise UsageError(f"output {dest} already exists")
    dest.parent.mkdir(parents=True, exist_ok=True)
    g, d = decode_depth(frame, ref, lut)
    io.write_raw(dest, d.depth, args.pitch, kind="depth")
    if args.gradients:
        io.write_raw(args.gradients, np.stack([g.gx, g.gy]), args.pitch, kind="gradients")
    _resolved(dest.parent, args, {"pitch": args.pitch},
              {"frame": args.frame, "ref": args.ref, "lut": args.lut, "out": args.out})
    print(f"depth range {d.depth.min():.4f}..{d.depth.max():.4f} mm -> {dest}")


def cmd_press(args):
    from .optics import FrameGeom
    from .pipeline.simulate import PressScenario, simulate_press

    fields = set(PressScenario.__dataclass_fields__) - {"seed"}
    raw = _load_config(args.config, fields)
    for name in ("shape", "hardness", "depth"):
        v = getattr(args, name)
        if v is not None:
            raw[name] = v
    if "shape" not in raw or "hardness" not in raw:
        raise UsageError("press needs a shape and a hardness (flags or --config)")

    def build(d):
        d = dict(d, seed=args.seed)
        if "geom" in d:
            d["geom"] = FrameGeom(**d["geom"])
        for k in ("offset", "hardness_range"):
            if k in d:
                d[k] = tuple(d[k])
        return PressScenario(**d)

    scenario = _parse(build, raw, "press scenario")
    out = _out_dir(args.out)
    _resolved(out, args, scenario.to_dict())
    w, seq, gt = simulate_press(scenario)
    for i, f in enumerate(w.frames):
        io.write_png(out / f"frame_{i:02d}.png", f.pixels)
    _write_csv(out / "force.csv", [["t", "F"]] + [[f"{t:.6f}", repr(float(F))] for t, F in zip(seq.t, seq.F)])
    io.write_raw(out / "depth_gt.raw", gt.depth, gt.pitch, kind="depth")
    io.write_json(out / "scenario.json", {
        "scenario": scenario.to_dict(), "k1": scenario.k1, "k_total": scenario.model.k_total, "n_frames": len(w),
    })
    print(f"{len(w)} frames, peak force {seq.F.max():.4f} N -> {out}")


def cmd_train(args):
    from .pipeline.experiments import REGRESSOR_TRAIN, RegressorConfig, train_regressor
    from .pipeline.training import ModelSpec, TrainConfig, train

    raw = _load_config(args.config, {"task", "model", "train", "regressor"})
    task = raw.get("task", "classifier")
    if task not in ("classifier", "regressor"):
        raise UsageError(f"task must be classifier or regressor, got {task!r}")
    defaults = REGRESSOR_TRAIN.__dict__ if task == "regressor" else TrainConfig().__dict__
    train_d = {**defaults, **raw.get("train", {}), "seed": args.seed}
    hyper = _parse(TrainConfig.from_dict, train_d, "train config")
    if task == "regressor":
        if "model" in raw:
            raise UsageError("'model' does not apply to the regressor task")
        rcfg = _parse(RegressorConfig.from_dict, raw.get("regressor", {}), "regressor config")
        out = _out_dir(args.out)
        _resolved(out, args, {"task": task, "train": train_d, "regressor": rcfg.to_dict()})
        _, metrics = train_regressor(rcfg, out, hyper, seed=args.seed)
        print(f"held-out force MAE {metrics['test_mae_N']:.4f} N -> {out / 'checkpoint.bin'}")
        return
    if "regressor" in raw:
        raise UsageError("'regressor' applies only to the regressor task")
    if args.data is None:
        raise UsageError("train needs --data for the classifier task")
    ds = _load_data(args.data)
    spec = _parse(ModelSpec.from_dict, raw.get("model", {}), "model config")
    out = _out_dir(args.out)
    _resolved(out, args, {"task": task, "train": train_d, "model": spec.__dict__}, {"data": args.data})
    res = train(spec, ds, hyper, out)
    print(f"best epoch {res.best_epoch}, val accuracy {res.history[res.best_epoch - 1]['val_score']:.4f}")


def cmd_eval(args):
    from .nn import load_checkpoint
    from .pipeline.training import evaluate

    ck = _need(args.checkpoint, "checkpoint")
    ds = _load_data(args.data)
    model, meta = load_checkpoint(ck)
    if "label_kind" not in meta:
        raise UsageError(f"{ck} is not a classifier checkpoint")
    out = _out_dir(args.out)
    _resolved(out, args, {"split": args.split, "label_kind": args.label_kind},
              {"checkpoint": args.checkpoint, "data": args.data})
    rep = evaluate(model, ds, args.split, args.label_kind, meta=meta)
    rep.save(out)
    print(f"{args.label_kind} accuracy {rep.accuracy:.4f} on {rep.total} {args.split} samples")


def cmd_ablate(args):
    from .pipeline.experiments import ablate
    from .pipeline.training import TrainConfig

    raw = _load_config(args.config, {"train", "label_kind"})
    train_d = {**TrainConfig().__dict__, **raw.get("train", {}), "seed": args.seed}
    hyper = _parse(TrainConfig.from_dict, train_d, "train config")
    kind = raw.get("label_kind", "joint")
    ds = _load_data(args.data)
    out = _out_dir(args.out)
    _resolved(out, args, {"train": train_d, "label_kind": kind}, {"data": args.data})
    reports = ablate(ds, hyper, out, kind)
    for m, r in reports.items():
        (out / f"confusion_{m}.csv").write_text(r.confusion_csv())
    print(" ".join(f"{m}={r.accuracy:.4f}" for m, r in reports.items()))


def cmd_baseline(args):
    from .pipeline.experiments import BASELINE_TRAIN, manual_baseline
    from .pipeline.training import TrainConfig

    raw = _load_config(args.config, {"train", "label_kind"})
    train_d = {**BASELINE_TRAIN.__dict__, **raw.get("train", {}), "seed": args.seed}
    hyper = _parse(TrainConfig.from_dict, train_d, "train config")
    kind = raw.get("label_kind", "joint")
    ds = _load_data(args.data)
    out = _out_dir(args.out)
    _resolved(out, args, {"train": train_d, "label_kind": kind}, {"data": args.data})
    _, rep = manual_baseline(ds, out, hyper, kind)
    print(f"hand-feature baseline {kind} accuracy {rep.accuracy:.4f}")


# metric files the report command knows how to collate
_REPORT_SOURCES = ("report.json", "summary.json", "metrics.json", "calibration.json")


def collect_metrics(roots) -> list:
    """Flatten scalar metrics found under ``roots`` into sorted (source, metric, value) rows."""
    rows = []
    for root in roots:
        root = Path(root)
        for name in _REPORT_SOURCES:
            for path in sorted(root.rglob(name)):
                data = io.read_json(path)
                src = path.relative_to(root).parent.as_posix()
                src = f"{root.as_posix()}/{src}" if src != "." else root.as_posix()
                for key, value in _flatten(data):
                    rows.append((src, f"{path.stem}.{key}", value))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def _flatten(d, prefix=""):
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, bool) or isinstance(v, (int, float)):
            yield key, v


def cmd_report(args):
    roots = [_need(p, "input directory", is_dir=True) for p in args.inputs]
    rows = collect_metrics(roots)
    if not rows:
        raise UsageError("no metric files (report/summary/metrics/calibration .json) under the inputs")
    out = _out_dir(args.out)
    _resolved(out, args, {}, {f"input{i}": p for i, p in enumerate(args.inputs)})
    _write_csv(out / "metrics.csv", [["source", "metric", "value"]] + [[s, m, repr(v)] for s, m, v in rows])
    io.write_json(out / "metrics.json", [{"source": s, "metric": m, "value": v} for s, m, v in rows])
    print(f"{len(rows)} metrics -> {out}")


def _write_csv(path, rows):
    buf = _io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    Path(path).write_text(buf.getvalue())


def _load_data(path):
    from .pipeline.dataset import load_dataset

    return load_dataset(_need(path, "dataset directory", is_dir=True))


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed for all randomness (default 0)")
    common.add_argument("--jobs", type=int, default=1, help="maximum worker processes (default 1)")

    p = argparse.ArgumentParser(prog="taxel", description="Simulated visuotactile shape and hardness perception.")
    p.add_argument("--version", action="version", version=f"taxel {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help, config=True, out=True):
        sp = sub.add_parser(name, parents=[common], help=help, description=help)
        if config:
            sp.add_argument("--config", help="JSON config; unknown keys are rejected")
        if out:
            sp.add_argument("--out", required=True, help="output directory (created; must be empty)")
        sp.set_defaults(func=func)
        return sp

    add("gen-data", cmd_gen_data, "generate the synthetic press dataset")
    add("calibrate", cmd_calibrate, "build the RGB->gradient lookup table from sphere presses")
    sp = add("reconstruct", cmd_reconstruct, "decode one frame into a depth map", config=False, out=False)
    sp.add_argument("--frame", required=True, help="contact frame PNG")
    sp.add_argument("--ref", required=True, help="non-contact reference PNG")
    sp.add_argument("--lut", required=True, help="lookup table from 'calibrate'")
    sp.add_argument("--out", required=True, help="output depth .raw file (sidecar written alongside)")
    sp.add_argument("--gradients", help="also write the gx, gy planes to this .raw file")
    sp.add_argument("--pitch", type=float, default=0.08, help="pixel pitch in mm (default 0.08)")
    sp = add("press", cmd_press, "simulate one press and dump frames, force and ground truth")
    sp.add_argument("--shape", help="circle, square, triangle, t-shape or sphere")
    sp.add_argument("--hardness", type=float, help="Shore A hardness")
    sp.add_argument("--depth", type=float, help="total press displacement in mm")
    sp = add("train", cmd_train, "train a classifier (default) or the force regressor")
    sp.add_argument("--data", help="dataset directory (classifier task)")
    sp = add("eval", cmd_eval, "score a classifier checkpoint on one split", config=False)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--split", default="test", choices=("train", "val", "test"))
    sp.add_argument("--label-kind", default="joint", choices=("shape", "hardness", "joint"))
    sp = add("ablate", cmd_ablate, "fused vs geometry-only vs force-only under one training budget")
    sp.add_argument("--data", required=True)
    sp = add("baseline", cmd_baseline, "hand-crafted radius + stiffness features into a small MLP")
    sp.add_argument("--data", required=True)
    sp = add("report", cmd_report, "collate metrics from run directories into CSV and JSON", config=False)
    sp.add_argument("inputs", nargs="+", help="run directories to scan")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _setup_logging()
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        args.func(args)
    except UsageError as exc:
        print(f"taxel {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"taxel {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
