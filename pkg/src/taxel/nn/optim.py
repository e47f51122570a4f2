from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0  # decoupled: p -= lr * wd * p


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState | None = None, hyper: AdamHyper = AdamHyper()):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``.

    Parameters without an entry in ``grads`` are treated as having zero gradient.
    """
    state = state or AdamState()
    t = state.step + 1
    new_params, m_new, v_new = {}, {}, {}
    c1 = 1.0 - hyper.beta1**t
    c2 = 1.0 - hyper.beta2**t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p)
        m = hyper.beta1 * state.m.get(name, np.zeros_like(p)) + (1 - hyper.beta1) * g
        v = hyper.beta2 * state.v.get(name, np.zeros_like(p)) + (1 - hyper.beta2) * g * g
        step = (m / c1) / (np.sqrt(v / c2) + hyper.eps)
        if hyper.weight_decay:
            step = step + hyper.weight_decay * p
        new_params[name] = p - hyper.lr * step
        m_new[name], v_new[name] = m, v
    return new_params, AdamState(step=t, m=m_new, v=v_new)
