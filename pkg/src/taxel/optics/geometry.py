"""Imprint height fields and their surface gradients."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError

SHAPES = ("circle", "square", "triangle", "t-shape")
#: Cross-section area shared by every prism shape (mm^2).
DEFAULT_AREA = 5.0
#: Width of the cosine ramp on prism walls, in pixels.
DEFAULT_RIM_PX = 6


@dataclass(frozen=True)
class FrameGeom:
    height: int = 64
    width: int = 64
    pitch: float = 0.08  # mm / pixel

    def __post_init__(self):
        if self.height % 32 or self.width % 32 or self.height <= 0 or self.width <= 0:
            raise DomainError(f"frame dims must be positive multiples of 32, got {self.height}x{self.width}")
        if not self.pitch > 0:
            raise DomainError(f"pixel pitch must be > 0, got {self.pitch}")

    def grid(self):
        """Pixel-centre coordinates (x right, y down) in mm, origin at the frame centre."""
        x = (np.arange(self.width) - (self.width - 1) / 2) * self.pitch
        y = (np.arange(self.height) - (self.height - 1) / 2) * self.pitch
        return np.meshgrid(x, y)


@dataclass(frozen=True)
class ShapeSpec:
    """An indenter: ``sphere`` (radius R) or a flat-bottom prism of given cross-section area."""

    kind: str
    R: float = 5.0
    area: float = DEFAULT_AREA
    offset: tuple = (0.0, 0.0)  # mm, (x, y)
    rotation: float = 0.0  # degrees

    def __post_init__(self):
        if self.kind != "sphere" and self.kind not in SHAPES:
            raise DomainError(f"unknown shape {self.kind!r}; expected sphere or one of {SHAPES}")
        if not (self.R > 0 and self.area > 0):
            raise DomainError("shape size must be positive")


@dataclass
class DepthMap:
    depth: np.ndarray
    pitch: float

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=float)
        if not np.all(np.isfinite(self.depth)):
            raise DomainError("depth map contains non-finite values")

    @property
    def shape(self):
        return self.depth.shape


@dataclass
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    pitch: float
    contact_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.gx = np.asarray(self.gx, dtype=float)
        self.gy = np.asarray(self.gy, dtype=float)
        if self.gx.shape != self.gy.shape:
            raise DomainError("gx and gy must share a shape")
        if not (np.all(np.isfinite(self.gx)) and np.all(np.isfinite(self.gy))):
            raise DomainError("gradient field contains non-finite values")
        if self.contact_mask is None:
            self.contact_mask = np.zeros(self.gx.shape, dtype=bool)

    @property
    def shape(self):
        return self.gx.shape

    @classmethod
    def zeros(cls, shape, pitch):
        return cls(np.zeros(shape), np.zeros(shape), pitch)


def _prism_pieces(kind: str, area: float):
    """Convex polygons (vertex arrays, counter-clockwise, centroid at origin) whose union is the shape."""
    if kind == "square":
        s = math.sqrt(area) / 2
        return [np.array([[-s, -s], [s, -s], [s, s], [-s, s]])]
    if kind == "triangle":
        side = math.sqrt(4 * area / math.sqrt(3))
        h = side * math.sqrt(3) / 2
        return [np.array([[-side / 2, -h / 3], [side / 2, -h / 3], [0.0, 2 * h / 3]])]
    if kind == "t-shape":
        # bar 3a x a on top of a stem a x 2a; area 5a^2
        a = math.sqrt(area / 5)
        cy = (3 * a * a * 2.5 * a + 2 * a * a * a) / (5 * a * a)  # centroid height above stem foot
        bar = np.array([[-1.5 * a, 2 * a], [1.5 * a, 2 * a], [1.5 * a, 3 * a], [-1.5 * a, 3 * a]])
        # stem runs up through the bar so the junction is not treated as a wall
        stem = np.array([[-0.5 * a, 0.0], [0.5 * a, 0.0], [0.5 * a, 3 * a], [-0.5 * a, 3 * a]])
        return [bar - [0, cy], stem - [0, cy]]
    raise DomainError(f"no polygon for shape {kind!r}")


def _polygon_inside_distance(px, py, verts):
    """Distance to the nearest edge line, positive inside a convex CCW polygon."""
    d = np.full(px.shape, np.inf)
    n = len(verts)
    for k in range(n):
        x0, y0 = verts[k]
        x1, y1 = verts[(k + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        length = math.hypot(ex, ey)
        # left of a CCW edge is inside
        d = np.minimum(d, (ex * (py - y0) - ey * (px - x0)) / length)
    return d


def inside_distance(shape: ShapeSpec, geom: FrameGeom) -> np.ndarray:
    """Signed distance (mm) from each pixel centre to the cross-section outline, positive inside."""
    X, Y = geom.grid()
    X = X - shape.offset[0]
    Y = Y - shape.offset[1]
    if shape.kind == "circle":
        return math.sqrt(shape.area / math.pi) - np.hypot(X, Y)
    th = math.radians(shape.rotation)
    # rotate sample points by -theta instead of rotating the polygon
    c, s = math.cos(th), math.sin(th)
    U = c * X + s * Y
    V = -s * X + c * Y
    pieces = _prism_pieces(shape.kind, shape.area)
    return np.max([_polygon_inside_distance(U, V, p) for p in pieces], axis=0)


def height_field(
    shape: ShapeSpec,
    imprint_depth: float,
    geom: FrameGeom = FrameGeom(),
    rim_px: int = DEFAULT_RIM_PX,
) -> DepthMap:
    """Imprint depth map of ``shape`` pressed ``imprint_depth`` mm into the pad.

    Spheres leave a paraboloidal cap whose footprint radius follows the
    Hertzian relation ``sqrt(R * Z)``; prisms leave a flat bottom with a
    cosine ramp of ``rim_px`` pixels inside the outline.
    """
    if imprint_depth < 0:
        raise DomainError(f"imprint depth must be >= 0, got {imprint_depth}")
    if shape.kind == "sphere":
        if imprint_depth > shape.R:
            raise DomainError("sphere imprint deeper than its radius")
        X, Y = geom.grid()
        rho2 = (X - shape.offset[0]) ** 2 + (Y - shape.offset[1]) ** 2
        depth = np.maximum(imprint_depth - rho2 / shape.R, 0.0)
        extent = np.sqrt(shape.R * imprint_depth)
        support = rho2 <= extent**2
    else:
        dist = inside_distance(shape, geom)
        support = dist > 0
        w = rim_px * geom.pitch
        u = np.clip(dist / w, 0.0, 1.0)
        depth = np.where(support, imprint_depth * 0.5 * (1 - np.cos(np.pi * u)), 0.0)
    if imprint_depth > 0 and support.any():
        rows = np.flatnonzero(support.any(axis=1))
        cols = np.flatnonzero(support.any(axis=0))
        if rows[0] == 0 or cols[0] == 0 or rows[-1] == geom.height - 1 or cols[-1] == geom.width - 1:
            raise DomainError(f"{shape.kind} imprint does not fit inside the {geom.height}x{geom.width} frame")
    return DepthMap(depth=depth, pitch=geom.pitch)


def normals_from_height(d: DepthMap, mask_threshold: float = 0.0) -> GradientField:
    """Central-difference slopes (mm/mm); one-sided at the frame border."""
    gy, gx = np.gradient(d.depth, d.pitch)
    return GradientField(gx=gx, gy=gy, pitch=d.pitch, contact_mask=d.depth > mask_threshold)
