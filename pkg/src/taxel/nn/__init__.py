"""Minimal numpy neural-network kernels with reverse-mode differentiation."""
from .checkpoint import load_checkpoint, register_model, save_checkpoint
from .layers import (
    Conv1d,
    Conv2d,
    Dense,
    GlobalAvgPool,
    Layer,
    MaxPool1d,
    MaxPool2d,
    ReLU,
    Sigmoid,
    sigmoid,
)
from .losses import mse_loss, softmax, softmax_cross_entropy
from .network import Network, Tape, backward, forward, init_params
from .optim import AdamHyper, AdamState, adam_step

__all__ = [
    "AdamHyper",
    "AdamState",
    "Conv1d",
    "Conv2d",
    "Dense",
    "GlobalAvgPool",
    "Layer",
    "MaxPool1d",
    "MaxPool2d",
    "Network",
    "ReLU",
    "Sigmoid",
    "Tape",
    "adam_step",
    "backward",
    "forward",
    "init_params",
    "load_checkpoint",
    "mse_loss",
    "register_model",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "softmax_cross_entropy",
]
