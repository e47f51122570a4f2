"""Sequential networks, the autodiff tape, and parameter initialisation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, UsageError
from .layers import Layer, layer_from_spec


@dataclass
class Tape:
    """Per-layer caches recorded by one forward pass; consumed by one backward."""

    owner: object
    version: int
    caches: list
    batched: bool
    used: bool = field(default=False)

    def consume(self):
        if self.used:
            raise UsageError("tape already consumed by a backward pass")
        if self.version != self.owner.version:
            raise UsageError("tape is stale: parameters changed since the forward pass")
        self.used = True


class Network:
    def __init__(self, layers: list[Layer], input_shape, name: str = "net"):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)
        self.name = name
        self.version = 0
        shape = self.input_shape
        self.shapes = [shape]
        for layer in self.layers:
            shape = tuple(layer.out_shape(shape))
            self.shapes.append(shape)
        self.output_shape = shape

    # parameter registry -------------------------------------------------
    def _keys(self):
        for i, layer in enumerate(self.layers):
            for pname in layer.params:
                yield f"{i}.{layer.kind}.{pname}", layer, pname

    @property
    def params(self) -> dict:
        return {key: layer.params[p] for key, layer, p in self._keys()}

    def set_params(self, values: dict):
        keys = list(self._keys())
        if set(values) != {k for k, _, _ in keys}:
            raise ConfigurationError(f"{self.name}: parameter names do not match the registry")
        for key, layer, p in keys:
            v = np.asarray(values[key], dtype=float)
            if v.shape != layer.params[p].shape:
                raise ConfigurationError(f"{key}: shape {v.shape} != {layer.params[p].shape}")
            layer.params[p] = v.copy()
        self.version += 1

    @property
    def n_params(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def spec(self) -> dict:
        return {"name": self.name, "input_shape": list(self.input_shape), "layers": [l.spec() for l in self.layers]}

    @classmethod
    def from_spec(cls, spec: dict) -> "Network":
        return cls([layer_from_spec(s) for s in spec["layers"]], spec["input_shape"], spec.get("name", "net"))

    # passes -------------------------------------------------------------
    def forward(self, x):
        x = np.asarray(x, dtype=float)
        batched = x.ndim == len(self.input_shape) + 1
        if not batched:
            x = x[None]
        if tuple(x.shape[1:]) != self.input_shape:
            raise ConfigurationError(f"{self.name}: input shape {x.shape[1:]} != declared {self.input_shape}")
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return (x if batched else x[0]), Tape(self, self.version, caches, batched)

    def backward(self, tape: Tape, grad):
        tape.consume()
        g = np.asarray(grad, dtype=float)
        if not tape.batched:
            g = g[None]
        grads = {}
        keys = {id(layer): i for i, layer in enumerate(self.layers)}
        for layer, cache in zip(reversed(self.layers), reversed(tape.caches)):
            g, pg = layer.backward(g, cache)
            i = keys[id(layer)]
            for p, v in pg.items():
                grads[f"{i}.{layer.kind}.{p}"] = v
        grads["input"] = g if tape.batched else g[0]
        return grads

    def __call__(self, x):
        return self.forward(x)[0]


def forward(net, x):
    """Run ``net`` on ``x``; returns ``(output, tape)``."""
    return net.forward(x)


def backward(tape: Tape, loss_grad):
    """Gradients of every parameter (and ``"input"``) given dLoss/dOutput."""
    return tape.owner.backward(tape, loss_grad)


def init_params(net, seed):
    """He-uniform weights (bound sqrt(6/fan_in)), zero biases. Mutates and returns ``net``."""
    rng = np.random.default_rng(seed)
    values = {}
    for key, value in net.params.items():
        if key.endswith(".bias"):
            values[key] = np.zeros_like(value)
        else:
            fan_in = int(np.prod(value.shape[1:]))
            bound = np.sqrt(6.0 / fan_in)
            values[key] = rng.uniform(-bound, bound, size=value.shape)
    net.set_params(values)
    return net
