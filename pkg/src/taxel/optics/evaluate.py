"""Contact-region fitting and projected-area error against Hertz theory."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..contact import ReconEval
from ..errors import DomainError
from .geometry import DepthMap


@dataclass(frozen=True)
class ContactFit:
    area: float  # mm^2
    radius: float  # mm, radius of the equal-area disc
    centroid: tuple  # mm, (x, y) from the frame centre
    pixels: int


def background_level(d: DepthMap) -> float:
    """Median of the one-pixel frame border, taken as the non-contact level."""
    z = d.depth
    ring = np.concatenate([z[0, :], z[-1, :], z[1:-1, 0], z[1:-1, -1]])
    return float(np.median(ring))


def fit_contact_region(d: DepthMap, depth_threshold: float, baseline: float | None = None):
    """Fit the contact region as the set of pixels deeper than ``depth_threshold``.

    Depth is measured from ``baseline`` (default: the frame-border median, so
    zero-mean reconstructions work directly). Returns ``None`` when nothing
    exceeds the threshold.
    """
    if not depth_threshold > 0:
        raise DomainError(f"depth threshold must be > 0, got {depth_threshold}")
    if baseline is None:
        baseline = background_level(d)
    region = (d.depth - baseline) > depth_threshold
    n = int(region.sum())
    if n == 0:
        return None
    area = n * d.pitch**2
    H, W = d.shape
    rows, cols = np.nonzero(region)
    cx = (cols.mean() - (W - 1) / 2) * d.pitch
    cy = (rows.mean() - (H - 1) / 2) * d.pitch
    return ContactFit(area=area, radius=math.sqrt(area / math.pi), centroid=(float(cx), float(cy)), pixels=n)


def recon_mae(evals: Sequence[ReconEval], normalizer: float | None = None) -> float:
    """Mean |S_E - S_A| divided by ``normalizer`` (default: the largest S_A)."""
    if len(evals) == 0:
        raise DomainError("recon_mae needs at least one evaluation")
    if normalizer is None:
        normalizer = max(e.S_A for e in evals)
    if not normalizer > 0:
        raise DomainError(f"normalizer must be > 0, got {normalizer}")
    return float(np.mean([abs(e.S_E - e.S_A) for e in evals]) / normalizer)
