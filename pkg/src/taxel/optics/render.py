"""Three-colour Lambertian rendering of the sensor surface."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from .geometry import GradientField

PIXEL_NOISE_SIGMA = 0.005


@dataclass
class TactileFrame:
    pixels: np.ndarray  # H x W x 3, values in [0, 1]
    pitch: float
    saturation: float = 0.0

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise DomainError(f"frame must be H x W x 3, got {self.pixels.shape}")
        H, W, _ = self.pixels.shape
        if H % 32 or W % 32:
            raise DomainError(f"frame dims must be multiples of 32, got {H}x{W}")
        if self.pixels.min(initial=0) < 0 or self.pixels.max(initial=0) > 1:
            raise DomainError("frame intensities must lie in [0, 1]")

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    def quantized(self) -> "TactileFrame":
        """8-bit round trip, as the frame would come back from a PNG."""
        q = np.round(self.pixels * 255.0) / 255.0
        return TactileFrame(q, self.pitch, self.saturation)


def _direction(azimuth_deg, elevation_deg):
    a, e = math.radians(azimuth_deg), math.radians(elevation_deg)
    return np.array([math.cos(e) * math.cos(a), math.cos(e) * math.sin(a), math.sin(e)])


@dataclass(frozen=True)
class LightRig:
    directions: np.ndarray = field(
        default_factory=lambda: np.stack([_direction(az, 45.0) for az in (0.0, 120.0, 240.0)])
    )
    emission: np.ndarray = field(default_factory=lambda: np.eye(3))  # row l = RGB of light l
    ambient: np.ndarray = field(default_factory=lambda: np.full(3, 0.25))
    albedo: float = 0.6

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        if d.shape != (3, 3) or not np.allclose(np.linalg.norm(d, axis=1), 1.0):
            raise DomainError("light directions must be three unit vectors")
        az = np.round(np.degrees(np.arctan2(d[:, 1], d[:, 0])), 6)
        if len(set(az.tolist())) != 3:
            raise DomainError("light azimuths must be distinct")

    @classmethod
    def with_imbalance(cls, gains) -> "LightRig":
        """Default rig with per-light brightness gains, for stress tests."""
        return cls(emission=np.diag(np.asarray(gains, dtype=float)))


def shading(gx, gy, rig: LightRig) -> np.ndarray:
    """Unclamped intensities, shape (..., 3)."""
    n = np.stack([-gx, -gy, np.ones_like(gx)], axis=-1)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    cos = np.maximum(n @ np.asarray(rig.directions).T, 0.0)  # (..., lights)
    return rig.ambient + rig.albedo * cos @ np.asarray(rig.emission)


def render(
    g: GradientField,
    rig: LightRig = LightRig(),
    noise_sigma: float = 0.0,
    seed: int | None = None,
) -> TactileFrame:
    """Render a gradient field; intensities are clamped to [0, 1] and the clamped fraction reported."""
    img = shading(g.gx, g.gy, rig)
    if noise_sigma > 0:
        img = img + np.random.default_rng(seed).normal(0.0, noise_sigma, size=img.shape)
    clipped = (img < 0) | (img > 1)
    return TactileFrame(np.clip(img, 0.0, 1.0), g.pitch, saturation=float(clipped.mean()))


def reference_frame(shape, pitch, rig: LightRig = LightRig()) -> TactileFrame:
    """The non-contact frame: a flat pad."""
    return render(GradientField.zeros(shape, pitch), rig)
