"""Layer kernels with explicit forward/backward passes.

All layers take a leading batch axis: dense (N, F), conv1d/pool1d (N, C, T),
conv2d/pool2d (N, C, H, W). ``forward`` returns ``(output, cache)`` and
``backward`` returns ``(grad_input, {param_name: grad})``.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigurationError


class Layer:
    kind = "layer"

    def __init__(self):
        self.params = {}

    def out_shape(self, in_shape):
        return in_shape

    def spec(self) -> dict:
        return {"kind": self.kind}

    def fan_in(self):
        return None


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in, n_out):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.params = {"weight": np.zeros((n_out, n_in)), "bias": np.zeros(n_out)}

    def spec(self):
        return {"kind": self.kind, "n_in": self.n_in, "n_out": self.n_out}

    def fan_in(self):
        return self.n_in

    def out_shape(self, in_shape):
        if in_shape != (self.n_in,):
            raise ConfigurationError(f"dense expects ({self.n_in},), got {in_shape}")
        return (self.n_out,)

    def forward(self, x):
        return x @ self.params["weight"].T + self.params["bias"], x

    def backward(self, dy, x):
        grads = {"weight": dy.T @ x, "bias": dy.sum(axis=0)}
        return dy @ self.params["weight"], grads


class Conv2d(Layer):
    """Stride-1 convolution with 'same' zero padding (odd kernels)."""

    kind = "conv2d"

    def __init__(self, c_in, c_out, kernel=3):
        super().__init__()
        if kernel % 2 == 0:
            raise ConfigurationError("same padding needs an odd kernel size")
        self.c_in, self.c_out, self.k = c_in, c_out, kernel
        self.params = {"weight": np.zeros((c_out, c_in, kernel, kernel)), "bias": np.zeros(c_out)}

    def spec(self):
        return {"kind": self.kind, "c_in": self.c_in, "c_out": self.c_out, "kernel": self.k}

    def fan_in(self):
        return self.c_in * self.k * self.k

    def out_shape(self, in_shape):
        if len(in_shape) != 3 or in_shape[0] != self.c_in:
            raise ConfigurationError(f"conv2d expects ({self.c_in}, H, W), got {in_shape}")
        return (self.c_out,) + tuple(in_shape[1:])

    def forward(self, x):
        N, C, H, W = x.shape
        p = self.k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        win = sliding_window_view(xp, (self.k, self.k), axis=(2, 3))  # N,C,H,W,k,k
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(N * H * W, C * self.k * self.k)
        w = self.params["weight"].reshape(self.c_out, -1)
        y = cols @ w.T + self.params["bias"]
        return y.reshape(N, H, W, self.c_out).transpose(0, 3, 1, 2), (cols, x.shape)

    def backward(self, dy, cache):
        cols, (N, C, H, W) = cache
        k, p = self.k, self.k // 2
        d = dy.transpose(0, 2, 3, 1).reshape(-1, self.c_out)
        w = self.params["weight"].reshape(self.c_out, -1)
        grads = {"weight": (d.T @ cols).reshape(self.params["weight"].shape), "bias": d.sum(axis=0)}
        dcols = (d @ w).reshape(N, H, W, C, k, k)
        dxp = np.zeros((N, C, H + 2 * p, W + 2 * p))
        for a in range(k):
            for b in range(k):
                dxp[:, :, a : a + H, b : b + W] += dcols[:, :, :, :, a, b].transpose(0, 3, 1, 2)
        return dxp[:, :, p : p + H, p : p + W], grads


class Conv1d(Layer):
    """Stride-1 1-D convolution with 'same' zero padding (odd kernels)."""

    kind = "conv1d"

    def __init__(self, c_in, c_out, kernel=3):
        super().__init__()
        if kernel % 2 == 0:
            raise ConfigurationError("same padding needs an odd kernel size")
        self.c_in, self.c_out, self.k = c_in, c_out, kernel
        self.params = {"weight": np.zeros((c_out, c_in, kernel)), "bias": np.zeros(c_out)}

    def spec(self):
        return {"kind": self.kind, "c_in": self.c_in, "c_out": self.c_out, "kernel": self.k}

    def fan_in(self):
        return self.c_in * self.k

    def out_shape(self, in_shape):
        if len(in_shape) != 2 or in_shape[0] != self.c_in:
            raise ConfigurationError(f"conv1d expects ({self.c_in}, T), got {in_shape}")
        return (self.c_out, in_shape[1])

    def forward(self, x):
        N, C, T = x.shape
        p = self.k // 2
        xp = np.pad(x, ((0, 0), (0, 0), (p, p)))
        win = sliding_window_view(xp, self.k, axis=2)  # N,C,T,k
        cols = win.transpose(0, 2, 1, 3).reshape(N * T, C * self.k)
        w = self.params["weight"].reshape(self.c_out, -1)
        y = cols @ w.T + self.params["bias"]
        return y.reshape(N, T, self.c_out).transpose(0, 2, 1), (cols, x.shape)

    def backward(self, dy, cache):
        cols, (N, C, T) = cache
        k, p = self.k, self.k // 2
        d = dy.transpose(0, 2, 1).reshape(-1, self.c_out)
        w = self.params["weight"].reshape(self.c_out, -1)
        grads = {"weight": (d.T @ cols).reshape(self.params["weight"].shape), "bias": d.sum(axis=0)}
        dcols = (d @ w).reshape(N, T, C, k)
        dxp = np.zeros((N, C, T + 2 * p))
        for a in range(k):
            dxp[:, :, a : a + T] += dcols[:, :, :, a].transpose(0, 2, 1)
        return dxp[:, :, p : p + T], grads


class MaxPool2d(Layer):
    kind = "maxpool2d"

    def out_shape(self, in_shape):
        C, H, W = in_shape
        if H % 2 or W % 2:
            raise ConfigurationError(f"maxpool2d needs even spatial dims, got {H}x{W}")
        return (C, H // 2, W // 2)

    def forward(self, x):
        N, C, H, W = x.shape
        blocks = x.reshape(N, C, H // 2, 2, W // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(N, C, H // 2, W // 2, 4)
        idx = blocks.argmax(axis=-1)
        y = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
        return y, (idx, x.shape)

    def backward(self, dy, cache):
        idx, (N, C, H, W) = cache
        dblocks = np.zeros((N, C, H // 2, W // 2, 4))
        np.put_along_axis(dblocks, idx[..., None], dy[..., None], axis=-1)
        dx = dblocks.reshape(N, C, H // 2, W // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(N, C, H, W)
        return dx, {}


class MaxPool1d(Layer):
    kind = "maxpool1d"

    def out_shape(self, in_shape):
        C, T = in_shape
        if T % 2:
            raise ConfigurationError(f"maxpool1d needs an even length, got {T}")
        return (C, T // 2)

    def forward(self, x):
        N, C, T = x.shape
        blocks = x.reshape(N, C, T // 2, 2)
        idx = blocks.argmax(axis=-1)
        y = np.take_along_axis(blocks, idx[..., None], axis=-1)[..., 0]
        return y, (idx, x.shape)

    def backward(self, dy, cache):
        idx, shape = cache
        dblocks = np.zeros(shape[:2] + (shape[2] // 2, 2))
        np.put_along_axis(dblocks, idx[..., None], dy[..., None], axis=-1)
        return dblocks.reshape(shape), {}


class GlobalAvgPool(Layer):
    """Mean over every axis after the channel axis."""

    kind = "global-avg-pool"

    def out_shape(self, in_shape):
        return (in_shape[0],)

    def forward(self, x):
        axes = tuple(range(2, x.ndim))
        return x.mean(axis=axes), x.shape

    def backward(self, dy, shape):
        count = int(np.prod(shape[2:]))
        return np.broadcast_to(dy.reshape(dy.shape + (1,) * (len(shape) - 2)) / count, shape).copy(), {}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, dy, mask):
        return dy * mask, {}


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x):
        y = sigmoid(x)
        return y, y

    def backward(self, dy, y):
        return dy * y * (1 - y), {}


def sigmoid(x):
    # split by sign so neither branch overflows
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    # keep the open interval (0, 1) even where float64 would round to an endpoint
    return np.clip(out, _TINY, _ONE_MINUS)


_TINY = np.finfo(float).tiny
_ONE_MINUS = np.nextafter(1.0, 0.0)


LAYER_KINDS = {
    cls.kind: cls for cls in (Dense, Conv2d, Conv1d, MaxPool2d, MaxPool1d, GlobalAvgPool, ReLU, Sigmoid)
}


def layer_from_spec(spec: dict) -> Layer:
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind not in LAYER_KINDS:
        raise ConfigurationError(f"unknown layer kind {kind!r}")
    cls = LAYER_KINDS[kind]
    if kind == "dense":
        return cls(spec["n_in"], spec["n_out"])
    if kind in ("conv2d", "conv1d"):
        return cls(spec["c_in"], spec["c_out"], spec["kernel"])
    return cls()
