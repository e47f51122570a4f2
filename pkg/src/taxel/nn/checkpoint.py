"""Checkpoint files: JSON header (model description, tensor registry, format
version) followed by the little-endian float64 parameter blob."""
from __future__ import annotations

from ..errors import DomainError
from ..io import read_container, write_container
from .network import Network

FORMAT = "taxel-ckpt/1"

_MODEL_TYPES = {"network": Network}


def register_model(name):
    def deco(cls):
        _MODEL_TYPES[name] = cls
        cls.model_type = name
        return cls

    return deco


def save_checkpoint(path, model, meta: dict | None = None):
    model_type = getattr(model, "model_type", "network")
    header = {"format": FORMAT, "model_type": model_type, "model": model.spec(), "meta": meta or {}}
    write_container(path, header, model.params)


def load_checkpoint(path):
    """Returns ``(model, meta)``."""
    header, tensors = read_container(path)
    if header.get("format") != FORMAT:
        raise DomainError(f"{path}: unsupported checkpoint format {header.get('format')!r}")
    cls = _MODEL_TYPES.get(header["model_type"])
    if cls is None:
        raise DomainError(f"{path}: unknown model type {header['model_type']!r}")
    model = cls.from_spec(header["model"])
    model.set_params(tensors)
    return model, header["meta"]
