"""Gradient-field integration with a discrete-cosine Poisson solver."""
from __future__ import annotations

import numpy as np
from scipy import fft

from .geometry import DepthMap, GradientField


def _neumann_eigenvalues(n: int) -> np.ndarray:
    return 2.0 * np.cos(np.pi * np.arange(n) / n) - 2.0


def poisson_reconstruct(g: GradientField) -> DepthMap:
    """Least-squares height field whose finite differences best match ``g``.

    Slopes are averaged onto the faces between neighbouring pixels; the normal
    equations are the Neumann Laplacian, which DCT-II diagonalises. The free
    constant is fixed by returning a zero-mean map.
    """
    H, W = g.shape
    h = g.pitch
    # target height steps across interior faces
    fx = 0.5 * h * (g.gx[:, 1:] + g.gx[:, :-1])  # H x (W-1)
    fy = 0.5 * h * (g.gy[1:, :] + g.gy[:-1, :])  # (H-1) x W
    div = np.zeros((H, W))
    div[:, :-1] += fx
    div[:, 1:] -= fx
    div[:-1, :] += fy
    div[1:, :] -= fy
    # L z = div, with L the (negative semi-definite) Neumann Laplacian
    rhs = fft.dctn(div, type=2, norm="ortho")
    denom = _neumann_eigenvalues(H)[:, None] + _neumann_eigenvalues(W)[None, :]
    denom[0, 0] = 1.0
    z_hat = rhs / denom
    z_hat[0, 0] = 0.0
    z = fft.idctn(z_hat, type=2, norm="ortho")
    return DepthMap(depth=z - z.mean(), pitch=h)
