import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from helpers import check_gradients
from taxel.errors import ConfigurationError
from taxel.nn import init_params, load_checkpoint, save_checkpoint, softmax_cross_entropy
from taxel.twostream import (
    FEATURE_DIM,
    ForceRegressor,
    TwoStreamModel,
    attention_fuse,
    classify,
    depth_encoder,
    depth_encoder_net,
    downsample,
    force_encoder,
    force_encoder_net,
    force_regressor,
    gate_net,
    head_net,
)

feature = hnp.arrays(float, FEATURE_DIM, elements=st.floats(-1e3, 1e3))


@pytest.fixture(scope="module")
def gate():
    return init_params(gate_net(), 0)


def test_depth_encoder_on_96_input():
    net = init_params(depth_encoder_net(96, 96), 0)
    x = np.random.default_rng(0).normal(size=(3, 96, 96))
    assert depth_encoder(x, net).shape == (FEATURE_DIM,)
    assert np.array_equal(depth_encoder(x, net), depth_encoder(x, net))
    # spatial size after the five pools, just before global averaging
    assert net.shapes[-3] == (128, 3, 3)


def test_depth_encoder_rejects_bad_size():
    with pytest.raises(ConfigurationError):
        depth_encoder_net(48, 64)


def test_force_encoder_trace():
    net = init_params(force_encoder_net(64), 0)
    lengths = [s[-1] for s, layer in zip(net.shapes[1:], net.layers) if layer.kind == "maxpool1d"]
    assert lengths == [32, 16, 8]
    assert force_encoder(np.random.default_rng(0).normal(size=(1, 64)), net).shape == (FEATURE_DIM,)
    with pytest.raises(ConfigurationError):
        force_encoder_net(60)


def test_zero_force_with_zero_biases_gives_zero_features():
    net = init_params(force_encoder_net(64), 0)
    assert not force_encoder(np.zeros((1, 64)), net).any()


@given(feature, feature)
def test_fusion_is_a_convex_blend(gate, g, f):
    joint, w = attention_fuse(g, f, gate)
    assert np.all((w > 0) & (w < 1))
    lo, hi = np.minimum(g, f), np.maximum(g, f)
    tol = 1e-9 * (1 + np.abs(g) + np.abs(f))
    assert np.all(joint >= lo - tol) and np.all(joint <= hi + tol)


@given(feature)
def test_fusion_of_identical_features_is_identity(gate, g):
    joint, _ = attention_fuse(g, g, gate)
    assert np.allclose(joint, g, rtol=1e-12, atol=1e-9)


def test_gate_override_endpoints(gate):
    rng = np.random.default_rng(1)
    g, f = rng.normal(size=FEATURE_DIM), rng.normal(size=FEATURE_DIM)
    assert np.array_equal(attention_fuse(g, f, gate, override=1.0)[0], g)
    assert np.array_equal(attention_fuse(g, f, gate, override=0.0)[0], f)
    with pytest.raises(ConfigurationError):
        attention_fuse(g[:10], f, gate)


def test_zero_head_is_uniform():
    head = head_net(6)
    head.set_params({k: np.zeros_like(v) for k, v in head.params.items()})
    p = classify(np.random.default_rng(0).normal(size=FEATURE_DIM), head)
    assert np.allclose(p, 1 / 6) and abs(p.sum() - 1) <= 1e-12


def test_head_permutation_permutes_probabilities():
    head = init_params(head_net(5), 2)
    x = np.random.default_rng(0).normal(size=FEATURE_DIM)
    perm = np.array([3, 0, 4, 1, 2])
    p = dict(head.params)
    p["2.dense.weight"] = p["2.dense.weight"][perm]
    p["2.dense.bias"] = p["2.dense.bias"][perm]
    permuted = head_net(5)
    permuted.set_params(p)
    assert np.allclose(classify(x, permuted), classify(x, head)[perm], atol=1e-15)


def _small_model(modality="fused"):
    return TwoStreamModel(4, 32, 32, 16, modality=modality).init(0)


def _chain_loss(model, labels):
    def f(inputs):
        logits, tape = model.forward(inputs["depth"], inputs["force"])
        loss, d = softmax_cross_entropy(logits, labels)
        return loss, model.backward(tape, d)

    return f


def test_end_to_end_gradient_check():
    model = _small_model()
    rng = np.random.default_rng(0)
    inputs = {"depth": rng.normal(size=(2, 3, 32, 32)), "force": rng.normal(size=(2, 1, 16))}
    errors = check_gradients(model, _chain_loss(model, np.array([1, 3])), inputs, limit=6)
    assert max(errors.values()) < 1e-4, errors


@pytest.mark.parametrize("modality", ["geometry", "force"])
def test_ablated_stream_gets_no_gradient(modality):
    model = _small_model(modality)
    rng = np.random.default_rng(0)
    logits, tape = model.forward(rng.normal(size=(2, 3, 32, 32)), rng.normal(size=(2, 1, 16)))
    _, d = softmax_cross_entropy(logits, np.array([0, 2]))
    grads = model.backward(tape, d)
    dead = "force" if modality == "geometry" else "depth"
    assert all(not v.any() for k, v in grads.items() if k.startswith(dead + "/"))
    assert not grads[f"input/{dead}"].any()


def test_two_stream_checkpoint_round_trip(tmp_path):
    model = _small_model()
    model.labels = ["a", "b", "c", "d"]
    save_checkpoint(tmp_path / "m.bin", model, {"k": 1})
    loaded, meta = load_checkpoint(tmp_path / "m.bin")
    assert isinstance(loaded, TwoStreamModel) and loaded.labels == model.labels
    rng = np.random.default_rng(0)
    xd, xf = rng.normal(size=(3, 3, 32, 32)), rng.normal(size=(3, 1, 16))
    assert np.array_equal(loaded.forward(xd, xf)[0], model.forward(xd, xf)[0])


def test_probabilities_normalised():
    model = _small_model()
    rng = np.random.default_rng(0)
    p = model.predict_proba(rng.normal(size=(5, 3, 32, 32)), rng.normal(size=(5, 1, 16)))
    assert np.all(np.abs(p.sum(axis=1) - 1) <= 1e-12)


def test_regressor_zero_difference_predicts_zero():
    model = ForceRegressor().init(0)
    assert force_regressor(np.zeros((64, 64, 3)), model) == 0.0


def test_regressor_gradients():
    model = ForceRegressor().init(1)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 3, 32, 32))
    target = np.array([0.2, 0.7])

    def f(inputs):
        y, tape = model.forward(inputs["x"])
        d = 2 * (y - target) / y.size
        grads = model.backward(tape, d)
        grads["input/x"] = np.zeros_like(inputs["x"])  # input gradient not exposed
        return float(np.mean((y - target) ** 2)), grads

    errors = check_gradients(model, f, {"x": x}, limit=8)
    errors.pop("input/x")
    assert max(errors.values()) < 1e-4, errors


def test_downsample_box_average():
    x = np.arange(16.0).reshape(4, 4)
    assert downsample(x, 2, 2).tolist() == [[2.5, 4.5], [10.5, 12.5]]
    assert downsample(x, 4, 4) is x
