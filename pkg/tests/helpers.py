"""Finite-difference gradient checking shared by the nn tests and the acceptance suite."""
import numpy as np


def rel_error(a, b):
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / scale)


def _sample(size, rng, limit):
    if size <= limit:
        return np.arange(size)
    return np.sort(rng.choice(size, limit, replace=False))


def check_gradients(model, loss_and_grads, inputs: dict, eps=1e-5, limit=40, seed=0):
    """Relative error of analytic vs central-difference gradients, per tensor.

    ``loss_and_grads(inputs) -> (loss, grads)`` must evaluate the model on
    ``inputs`` (name -> array) and return gradients keyed by parameter name
    plus ``"input/<name>"`` for every entry in ``inputs``. At most ``limit``
    entries of each tensor are probed.
    """
    rng = np.random.default_rng(seed)
    _, grads = loss_and_grads(inputs)
    base = {k: v.copy() for k, v in model.params.items()}
    errors = {}
    for name, value in base.items():
        idx = _sample(value.size, rng, limit)
        num = np.empty(idx.size)
        for j, i in enumerate(idx):
            vals = []
            for sign in (1, -1):
                p = dict(base)
                w = value.copy()
                w.flat[i] += sign * eps
                p[name] = w
                model.set_params(p)
                vals.append(loss_and_grads(inputs)[0])
            num[j] = (vals[0] - vals[1]) / (2 * eps)
        model.set_params(base)
        errors[name] = rel_error(grads[name].ravel()[idx], num)
    for name, x in inputs.items():
        idx = _sample(x.size, rng, limit)
        num = np.empty(idx.size)
        for j, i in enumerate(idx):
            vals = []
            for sign in (1, -1):
                xi = x.copy()
                xi.flat[i] += sign * eps
                vals.append(loss_and_grads({**inputs, name: xi})[0])
            num[j] = (vals[0] - vals[1]) / (2 * eps)
        errors[f"input/{name}"] = rel_error(grads[f"input/{name}"].ravel()[idx], num)
    return errors


def network_loss(net, weights):
    """Scalar probe loss sum(out * weights) for a plain Network."""

    def f(inputs):
        out, tape = net.forward(inputs["x"])
        loss = float(np.sum(out * weights))
        g = net.backward(tape, weights)
        g["input/x"] = g.pop("input")
        return loss, g

    return f


VERDICTS: list[str] = []


def verdict(number: int, title: str, ok: bool, detail: str) -> None:
    """Record one acceptance line; conftest prints them in the terminal summary."""
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    VERDICTS.append(line)
    print(line)
