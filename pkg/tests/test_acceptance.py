"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The heavy criteria share module fixtures: the default dataset is generated
once and the fused model trained on it is reused by the ablation.
"""
import os
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from helpers import check_gradients, network_loss, verdict
from taxel.cli import main
from taxel.contact import PressTrajectory, SpringModel, infer_stiffness, synth_force_sequence
from taxel.nn import init_params, load_checkpoint, save_checkpoint, softmax, softmax_cross_entropy
from taxel.optics import DepthMap, FrameGeom, normals_from_height, poisson_reconstruct, recon_mae
from taxel.optics.calibration import calibrate_default, hertz_sweep
from taxel.optics.geometry import GradientField
from taxel.optics.render import PIXEL_NOISE_SIGMA
from taxel.pipeline.dataset import DatasetConfig, gen_dataset, load_dataset
from taxel.pipeline.experiments import RegressorConfig, ablation_summary, press_sweep, train_regressor
from taxel.pipeline.simulate import PressScenario
from taxel.pipeline.training import EvalReport, ModelSpec, TrainConfig, evaluate, train
from taxel.twostream import FEATURE_DIM, TwoStreamModel, attention_fuse, gate_net
from test_nn import LAYER_NETS

pytestmark = pytest.mark.slow
JOBS = os.cpu_count() or 1


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def default_data(tmp_path_factory):
    root = tmp_path_factory.mktemp("default")
    t0 = time.perf_counter()
    gen_dataset(DatasetConfig(), root / "ds", seed=0, jobs=JOBS)
    return root, load_dataset(root / "ds"), time.perf_counter() - t0


@pytest.fixture(scope="module")
def fused(default_data):
    root, ds, gen_seconds = default_data
    t0 = time.perf_counter()
    res = train(ModelSpec(), ds, TrainConfig(), root / "fused")
    return res, gen_seconds + time.perf_counter() - t0


def test_hertz_sweep_area_mae():
    t0 = time.perf_counter()
    lut, ref = calibrate_default()
    sweep = hertz_sweep(lut, ref, depths=(0.2, 0.4, 0.6, 0.8, 1.0))
    mae = recon_mae([p.eval for p in sweep])
    dt = time.perf_counter() - t0
    ok = mae < 0.05 and dt < 30
    verdict(1, "sphere sweep normalised area MAE < 0.05 in < 30 s", ok, f"MAE {mae:.4f}, {dt:.1f} s")
    assert ok


def test_poisson_round_trip_and_linearity():
    t0 = time.perf_counter()
    geom = FrameGeom(64, 64, 0.08)
    X, Y = geom.grid()
    z = 0.8 - (X**2 + Y**2) / 5.0
    rec = poisson_reconstruct(normals_from_height(DepthMap(z, geom.pitch))).depth
    rmse = float(np.sqrt(np.mean(((rec - rec.mean()) - (z - z.mean())) ** 2)) / np.ptp(z))
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(5):
        g1, g2 = (GradientField(rng.normal(size=(64, 64)), rng.normal(size=(64, 64)), 0.08) for _ in range(2))
        a, b = rng.uniform(-3, 3, size=2)
        lhs = poisson_reconstruct(GradientField(a * g1.gx + b * g2.gx, a * g1.gy + b * g2.gy, 0.08)).depth
        rhs = a * poisson_reconstruct(g1).depth + b * poisson_reconstruct(g2).depth
        worst = max(worst, float(np.abs(lhs - rhs).max() / max(1.0, np.abs(rhs).max())))
    dt = time.perf_counter() - t0
    ok = rmse <= 1e-3 and worst <= 1e-10 and dt < 1
    verdict(2, "Poisson paraboloid RMSE <= 1e-3 of range, linearity 1e-10, < 1 s", ok,
            f"RMSE {rmse:.2e}, linearity {worst:.1e}, {dt:.2f} s")
    assert ok


def test_stiffness_round_trip():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    clean, noisy = [], []
    for _ in range(100):
        # hardness 10-90 HA at N = 0.2, elastomer around its nominal 12 N/mm
        k1, k2, v = 0.2 * rng.uniform(10, 90), rng.uniform(8, 16), rng.uniform(0.25, 1.0)
        traj = PressTrajectory.to_depth(v, 1.0, 0.1)
        springs = SpringModel(k1, k2)
        clean.append(abs(infer_stiffness(synth_force_sequence(springs, traj), v, k2) / k1 - 1))
        seq = synth_force_sequence(springs, traj, noise=0.01, seed=int(rng.integers(2**31)))
        noisy.append(abs(infer_stiffness(seq, v, k2) / k1 - 1))
    dt = time.perf_counter() - t0
    ok = max(clean) < 1e-9 and max(noisy) < 0.10 and dt < 1
    verdict(3, "stiffness round trip over 100 draws, < 1e-9 clean and < 10% at 1% noise, < 1 s", ok,
            f"clean {max(clean):.1e}, noisy worst {max(noisy):.3f} mean {np.mean(noisy):.3f}, {dt:.2f} s")
    assert ok


def test_gradient_check_suite():
    t0 = time.perf_counter()
    worst = {}
    rng = np.random.default_rng(1)
    for name, make in sorted(LAYER_NETS.items()):
        net = init_params(make(), seed=3)
        for k, p in net.params.items():
            if k.endswith("bias"):
                net.set_params({**net.params, k: rng.normal(size=p.shape) * 0.1})
        x = rng.normal(size=(2,) + net.input_shape)
        w = rng.normal(size=(2,) + net.output_shape)
        worst[name] = max(check_gradients(net, network_loss(net, w), {"x": x}).values())

    model = TwoStreamModel(4, 32, 32, 16).init(0)
    labels = np.array([1, 3])

    def chain(inputs):
        logits, tape = model.forward(inputs["depth"], inputs["force"])
        loss, d = softmax_cross_entropy(logits, labels)
        return loss, model.backward(tape, d)

    inputs = {"depth": rng.normal(size=(2, 3, 32, 32)), "force": rng.normal(size=(2, 1, 16))}
    worst["chain"] = max(check_gradients(model, chain, inputs, limit=6).values())
    dt = time.perf_counter() - t0
    top = max(worst, key=worst.get)
    ok = worst[top] < 1e-4 and dt < 60
    verdict(4, "finite-difference checks on every layer kind and the full chain < 1e-4, < 60 s", ok,
            f"worst {top} {worst[top]:.1e}, {dt:.1f} s")
    assert ok


def test_force_regression(tmp_path):
    t0 = time.perf_counter()
    res, metrics = train_regressor(RegressorConfig(), tmp_path)
    sweeps = [press_sweep(res.model, PressScenario("sphere", h, 1.0, pixel_noise=PIXEL_NOISE_SIGMA, seed=s))
              for s, h in enumerate((20.0, 50.0, 80.0))]
    dt = time.perf_counter() - t0
    drop = max(s.max_drop for s in sweeps)
    slope = max(abs(s.slope / s.expected_slope - 1) for s in sweeps)
    ok = metrics["test_mae_N"] <= 0.12 and drop <= 0.2 and slope < 0.10 and dt < 300
    verdict(5, "held-out force MAE <= 0.12 N over 0-12 N, presses monotone within 0.2 N, < 5 min", ok,
            f"MAE {metrics['test_mae_N']:.3f} N, max drop {drop:.3f} N, slope error {slope:.3f}, {dt:.0f} s")
    assert ok


def test_classification_suite(default_data, fused):
    _, ds, _ = default_data
    res, seconds = fused
    t0 = time.perf_counter()
    shape = evaluate(res.checkpoint, ds, "test", "shape").accuracy
    hard = evaluate(res.checkpoint, ds, "test", "hardness").accuracy
    seconds += time.perf_counter() - t0
    ok = len(ds.labels["joint"]) == 800 and shape >= 0.95 and hard >= 0.90 and seconds < 600
    verdict(6, "default dataset shape >= 0.95 and hardness >= 0.90, < 10 min end to end", ok,
            f"shape {shape:.3f}, hardness {hard:.3f}, {seconds:.0f} s")
    assert ok


def test_fusion_dominance(default_data, fused):
    root, ds, _ = default_data
    reports = {"fused": evaluate(fused[0].checkpoint, ds, "test", "joint")}
    for modality in ("geometry", "force"):
        res = train(ModelSpec(modality=modality), ds, TrainConfig(), root / modality)
        reports[modality] = evaluate(res.checkpoint, ds, "test", "joint")
    s = ablation_summary(reports)
    acc = s["accuracy"]
    ok = s["fused_dominates"] and s["fused_margin"] >= 0.05
    verdict(7, "fused joint accuracy >= each single modality + 5 pp", ok,
            f"fused {acc['fused']:.3f}, geometry {acc['geometry']:.3f}, force {acc['force']:.3f}")
    assert ok


@given(hnp.arrays(float, FEATURE_DIM, elements=st.floats(-1e3, 1e3)), hnp.arrays(float, FEATURE_DIM, elements=st.floats(-1e3, 1e3)))
def _attention_weights_open_interval(g, f):
    _, w = attention_fuse(g, f, _GATE)
    assert np.all((w > 0) & (w < 1))


@given(hnp.arrays(float, st.integers(2, 40), elements=st.floats(-700, 700)))
def _softmax_normalised(logits):
    assert abs(softmax(logits).sum() - 1.0) <= 1e-12


@given(st.integers(2, 10).flatmap(lambda C: st.tuples(st.just(C), st.lists(st.tuples(st.integers(0, C - 1), st.integers(0, C - 1)), max_size=100))))
def _confusion_accounting(data):
    C, pairs = data
    yt, yp = [p[0] for p in pairs], [p[1] for p in pairs]
    rep = EvalReport.from_predictions("joint", [str(i) for i in range(C)], yt, yp)
    assert rep.total == len(pairs) == rep.confusion.sum()
    assert rep.confusion.sum(axis=1).tolist() == np.bincount(yt, minlength=C).tolist()
    assert rep.confusion.sum(axis=0).tolist() == np.bincount(yp, minlength=C).tolist()


_GATE = init_params(gate_net(), 0)


def test_determinism_and_formats(default_data, fused, tmp_path):
    root, ds, _ = default_data
    checks = {}

    gen_dataset(DatasetConfig(), tmp_path / "ds", seed=0, jobs=JOBS)
    checks["dataset"] = tree(root / "ds") == tree(tmp_path / "ds")

    short = TrainConfig(epochs=2)
    for name in ("a", "b"):
        train(ModelSpec(), ds, short, tmp_path / name)
    checks["training"] = tree(tmp_path / "a") == tree(tmp_path / "b")

    ck = fused[0].checkpoint
    for name in ("ra", "rb"):
        evaluate(ck, ds, "test", "joint").save(tmp_path / name)
        assert main(["report", str(tmp_path / "ra"), "--out", str(tmp_path / f"{name}_cli")]) == 0
    checks["report"] = tree(tmp_path / "ra") == tree(tmp_path / "rb") and tree(tmp_path / "ra_cli") == tree(tmp_path / "rb_cli")

    model, meta = load_checkpoint(ck)
    save_checkpoint(tmp_path / "again.bin", model, meta)
    checks["checkpoint"] = (tmp_path / "again.bin").read_bytes() == ck.read_bytes()

    for name, prop in (("attention", _attention_weights_open_interval), ("softmax", _softmax_normalised),
                       ("confusion", _confusion_accounting)):
        try:
            prop()
            checks[name] = True
        except AssertionError:
            checks[name] = False

    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    verdict(8, "byte-identical generation, training and reports; exact checkpoint round trip; invariants", ok,
            "all checks hold" if ok else f"failed: {', '.join(failed)}")
    assert ok, checks
