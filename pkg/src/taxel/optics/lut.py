"""Colour-change -> surface-gradient lookup table."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import CalibrationError, DomainError
from .geometry import GradientField
from .render import TactileFrame

DEFAULT_BINS = 16
#: ||dRGB||_2 above which a pixel counts as in contact.
CONTACT_THRESHOLD = 0.03
LUT_VERSION = "taxel-lut/1"


@dataclass
class CalibrationLUT:
    bins: int
    lo: np.ndarray  # (3,) lower edge of the dRGB range per channel
    hi: np.ndarray  # (3,)
    table: np.ndarray  # (bins, bins, bins, 2) mean (gx, gy) per cell
    counts: np.ndarray  # (bins, bins, bins) calibration pixels per cell

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        filled = self.counts > 0
        if not filled.any():
            raise CalibrationError("lookup table has no filled cells")
        # nearest filled cell for every cell, resolved once
        _, idx = ndimage.distance_transform_edt(~filled, return_indices=True)
        self._resolved = self.table[idx[0], idx[1], idx[2]]

    @property
    def fill_fraction(self) -> float:
        return float((self.counts > 0).mean())

    @property
    def filled_cells(self) -> int:
        return int((self.counts > 0).sum())

    def cell_index(self, delta: np.ndarray) -> np.ndarray:
        """Integer cell coordinates (..., 3) for colour changes (..., 3)."""
        u = (delta - self.lo) / (self.hi - self.lo)
        return np.clip(np.floor(u * self.bins).astype(int), 0, self.bins - 1)

    def query(self, delta: np.ndarray) -> np.ndarray:
        """(gx, gy) for colour changes (..., 3), nearest filled cell when a cell is empty."""
        c = self.cell_index(delta)
        return self._resolved[c[..., 0], c[..., 1], c[..., 2]]

    def header(self) -> dict:
        return {
            "version": LUT_VERSION,
            "bins": self.bins,
            "lo": self.lo.tolist(),
            "hi": self.hi.tolist(),
            "fill_fraction": self.fill_fraction,
            "filled_cells": self.filled_cells,
        }


def _check_pair(frame: TactileFrame, reference: TactileFrame):
    if frame.pixels.shape != reference.pixels.shape:
        raise DomainError(
            f"frame {frame.pixels.shape} and reference {reference.pixels.shape} differ in geometry"
        )


def calibrate_lut(presses, reference: TactileFrame, bins: int = DEFAULT_BINS, margin: float = 0.02) -> CalibrationLUT:
    """Build the table from ``(frame, ground-truth GradientField)`` pairs.

    Every ground-truth contact pixel contributes its colour change against
    ``reference``; each cell stores the mean gradient of the pixels that land
    in it.
    """
    deltas, grads = [], []
    for frame, gt in presses:
        _check_pair(frame, reference)
        m = gt.contact_mask
        deltas.append((frame.pixels - reference.pixels)[m])
        grads.append(np.stack([gt.gx[m], gt.gy[m]], axis=-1))
    if not deltas:
        raise CalibrationError("calibration needs at least one press")
    delta = np.concatenate(deltas)
    grad = np.concatenate(grads)
    if delta.shape[0] == 0:
        raise CalibrationError("calibration presses have empty contact masks")

    lo = delta.min(axis=0) - margin
    hi = delta.max(axis=0) + margin
    probe = CalibrationLUT.__new__(CalibrationLUT)
    probe.bins, probe.lo, probe.hi = bins, lo, hi
    cells = CalibrationLUT.cell_index(probe, delta)
    flat = np.ravel_multi_index(cells.T, (bins,) * 3)
    counts = np.bincount(flat, minlength=bins**3)
    sx = np.bincount(flat, weights=grad[:, 0], minlength=bins**3)
    sy = np.bincount(flat, weights=grad[:, 1], minlength=bins**3)
    with np.errstate(invalid="ignore", divide="ignore"):
        table = np.stack([sx / counts, sy / counts], axis=-1)
    table[counts == 0] = 0.0
    return CalibrationLUT(
        bins=bins,
        lo=lo,
        hi=hi,
        table=table.reshape(bins, bins, bins, 2),
        counts=counts.reshape(bins, bins, bins),
    )


def lookup_gradients(
    frame: TactileFrame,
    reference: TactileFrame,
    lut: CalibrationLUT,
    threshold: float = CONTACT_THRESHOLD,
) -> GradientField:
    _check_pair(frame, reference)
    delta = frame.pixels - reference.pixels
    mask = np.linalg.norm(delta, axis=-1) > threshold
    g = np.zeros(delta.shape[:2] + (2,))
    if mask.any():
        g[mask] = lut.query(delta[mask])
    return GradientField(gx=g[..., 0], gy=g[..., 1], pitch=frame.pitch, contact_mask=mask)
