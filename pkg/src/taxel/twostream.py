"""Depth-map and force-sequence encoders, attention fusion, MLP head and the
image-difference force regressor."""
from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DomainError
from .nn import (
    Conv1d,
    Conv2d,
    Dense,
    GlobalAvgPool,
    MaxPool1d,
    MaxPool2d,
    Network,
    ReLU,
    Sigmoid,
    init_params,
    register_model,
    softmax,
)

FEATURE_DIM = 128
FORCE_WINDOW = 64  # samples per force window
FORCE_DT = 0.05  # s between force samples
FORCE_FULL_SCALE = 12.0  # N
MODALITIES = ("fused", "geometry", "force")


def depth_encoder_net(height: int, width: int) -> Network:
    """conv3x3 3-16-32-64 then 64-128-128, a 2x2 max-pool after each (H/32 x W/32), GAP, dense 128."""
    if height % 32 or width % 32:
        raise ConfigurationError(f"depth input must be a multiple of 32 on each side, got {height}x{width}")
    layers = []
    for c_in, c_out in [(3, 16), (16, 32), (32, 64), (64, 128), (128, 128)]:
        layers += [Conv2d(c_in, c_out, 3), ReLU(), MaxPool2d()]
    layers += [GlobalAvgPool(), Dense(128, FEATURE_DIM)]
    return Network(layers, (3, height, width), name="depth")


def force_encoder_net(T: int = FORCE_WINDOW) -> Network:
    """1-D CNN: 32 k3, 64 k5, 128 k3 kernels, each followed by ReLU and 2x pooling, then GAP."""
    if T % 8:
        raise ConfigurationError(f"force window must be a multiple of 8, got {T}")
    layers = []
    for c_in, c_out, k in [(1, 32, 3), (32, 64, 5), (64, 128, 3)]:
        layers += [Conv1d(c_in, c_out, k), ReLU(), MaxPool1d()]
    layers.append(GlobalAvgPool())
    return Network(layers, (1, T), name="force")


def gate_net() -> Network:
    return Network(
        [Dense(2 * FEATURE_DIM, FEATURE_DIM), ReLU(), Dense(FEATURE_DIM, FEATURE_DIM), Sigmoid()],
        (2 * FEATURE_DIM,),
        name="gate",
    )


def head_net(n_classes: int) -> Network:
    if n_classes < 2:
        raise ConfigurationError(f"classifier needs at least 2 classes, got {n_classes}")
    return Network([Dense(FEATURE_DIM, 64), ReLU(), Dense(64, n_classes)], (FEATURE_DIM,), name="head")


def depth_encoder(x, net: Network):
    return net(x)


def force_encoder(x, net: Network):
    return net(x)


def attention_fuse(g, f, gate: Network, override=None):
    """Convex per-dimension blend ``w*g + (1-w)*f`` with ``w`` from the gate network.

    ``override`` replaces the gate output (scalar or 128-vector), for tests
    and ablations.
    """
    g = np.asarray(g, dtype=float)
    f = np.asarray(f, dtype=float)
    if g.shape[-1] != FEATURE_DIM or f.shape[-1] != FEATURE_DIM:
        raise ConfigurationError("fusion expects two 128-dimensional feature vectors")
    if override is None:
        w = gate(np.concatenate([g, f], axis=-1))
    else:
        w = np.broadcast_to(np.asarray(override, dtype=float), g.shape)
    return w * g + (1.0 - w) * f, w


def classify(joint, head: Network):
    return softmax(head(joint))


class _Composite:
    """Named sub-networks sharing one prefixed parameter registry."""

    parts: dict

    @property
    def version(self):
        return sum(net.version for net in self.parts.values())

    @property
    def params(self):
        return {f"{p}/{k}": v for p, net in self.parts.items() for k, v in net.params.items()}

    def set_params(self, values):
        for p, net in self.parts.items():
            sub = {k.split("/", 1)[1]: v for k, v in values.items() if k.split("/", 1)[0] == p}
            net.set_params(sub)

    @property
    def n_params(self):
        return sum(net.n_params for net in self.parts.values())

    def init(self, seed):
        init_params(self, seed)
        return self


@register_model("two-stream")
class TwoStreamModel(_Composite):
    """Depth encoder + force encoder -> attention fusion -> MLP classifier."""

    def __init__(self, n_classes, height=32, width=32, T=FORCE_WINDOW, modality="fused", labels=None):
        if modality not in MODALITIES:
            raise ConfigurationError(f"modality must be one of {MODALITIES}, got {modality!r}")
        self.n_classes, self.height, self.width, self.T = n_classes, height, width, T
        self.modality = modality
        self.labels = list(labels) if labels is not None else [str(i) for i in range(n_classes)]
        self.parts = {
            "depth": depth_encoder_net(height, width),
            "force": force_encoder_net(T),
            "gate": gate_net(),
            "head": head_net(n_classes),
        }
        self.gate_override = None

    def spec(self):
        return {
            "n_classes": self.n_classes,
            "height": self.height,
            "width": self.width,
            "T": self.T,
            "modality": self.modality,
            "labels": self.labels,
        }

    @classmethod
    def from_spec(cls, spec):
        return cls(**spec)

    def forward(self, xd, xf):
        """Batched logits for depth inputs (N,3,H,W) and force inputs (N,1,T)."""
        P = self.parts
        g, tg = P["depth"].forward(xd)
        f, tf = P["force"].forward(xf)
        if self.modality == "geometry":
            f = np.zeros_like(f)
        elif self.modality == "force":
            g = np.zeros_like(g)
        if self.gate_override is None:
            w, tw = P["gate"].forward(np.concatenate([g, f], axis=-1))
        else:
            w, tw = np.broadcast_to(np.asarray(self.gate_override, dtype=float), g.shape), None
        joint = w * g + (1.0 - w) * f
        logits, th = P["head"].forward(joint)
        return logits, dict(tapes=(tg, tf, tw, th), g=g, f=f, w=w, joint=joint)

    def predict_proba(self, xd, xf):
        return softmax(self.forward(xd, xf)[0])

    def backward(self, tape, dlogits):
        tg, tf, tw, th = tape["tapes"]
        g, f, w = tape["g"], tape["f"], tape["w"]
        P = self.parts
        grads = {}

        def put(prefix, d):
            for k, v in d.items():
                if k != "input":
                    grads[f"{prefix}/{k}"] = v

        dh = P["head"].backward(th, dlogits)
        put("head", dh)
        djoint = dh["input"]
        dg = djoint * w
        df = djoint * (1.0 - w)
        if tw is not None:
            dw = djoint * (g - f)
            dgw = P["gate"].backward(tw, dw)
            put("gate", dgw)
            dg = dg + dgw["input"][:, :FEATURE_DIM]
            df = df + dgw["input"][:, FEATURE_DIM:]
        # zeroed streams pass no gradient
        if self.modality == "geometry":
            df = np.zeros_like(df)
        elif self.modality == "force":
            dg = np.zeros_like(dg)
        dd = P["depth"].backward(tg, dg)
        put("depth", dd)
        dfo = P["force"].backward(tf, df)
        put("force", dfo)
        grads["input/depth"] = dd["input"]
        grads["input/force"] = dfo["input"]
        return grads


def force_regressor_net(height=32, width=32) -> Network:
    """conv3x3 3-16-32-64 with a pool after each (/8), GAP, dense 64->1."""
    layers = []
    for c_in, c_out in [(3, 16), (16, 32), (32, 64)]:
        layers += [Conv2d(c_in, c_out, 3), ReLU(), MaxPool2d()]
    layers += [GlobalAvgPool(), Dense(64, 1)]
    return Network(layers, (3, height, width), name="regressor")


@register_model("force-regressor")
class ForceRegressor(_Composite):
    """Contact-frame minus reference-frame difference -> contact force (N)."""

    def __init__(self, height=32, width=32, full_scale=FORCE_FULL_SCALE, input_scale=10.0):
        self.height, self.width = height, width
        self.full_scale = full_scale
        self.input_scale = input_scale  # difference images are ~0.1; scale to O(1)
        self.parts = {"net": force_regressor_net(height, width)}

    def spec(self):
        return {"height": self.height, "width": self.width, "full_scale": self.full_scale, "input_scale": self.input_scale}

    @classmethod
    def from_spec(cls, spec):
        return cls(**spec)

    def prepare(self, diff):
        """(H,W,3) or (N,H,W,3) difference image(s) -> scaled (N,3,h,w) network input."""
        diff = np.asarray(diff, dtype=float)
        if diff.ndim == 3:
            diff = diff[None]
        x = diff.transpose(0, 3, 1, 2)
        return downsample(x, self.height, self.width) * self.input_scale

    def forward(self, x):
        y, tape = self.parts["net"].forward(x)
        return y[:, 0], tape

    def backward(self, tape, dy):
        d = self.parts["net"].backward(tape, np.asarray(dy)[:, None])
        return {f"net/{k}": v for k, v in d.items() if k != "input"}

    def predict(self, diff):
        """Force in N for one or more difference images."""
        y, _ = self.forward(self.prepare(diff))
        return y * self.full_scale


def force_regressor(frame_diff, model: ForceRegressor) -> float:
    return float(model.predict(frame_diff)[0])


def downsample(x, height, width):
    """Box-average the trailing two axes down to ``height`` x ``width``."""
    H, W = x.shape[-2:]
    if H % height or W % width:
        raise DomainError(f"cannot box-downsample {H}x{W} to {height}x{width}")
    fh, fw = H // height, W // width
    if fh == fw == 1:
        return x
    return x.reshape(x.shape[:-2] + (height, fh, width, fw)).mean(axis=(-3, -1))
