"""Sphere-press calibration and the Hertz reconstruction sweep."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..contact import HertzContact, ReconEval, hertz_area, hertz_radius
from .evaluate import ContactFit, fit_contact_region
from .geometry import FrameGeom, ShapeSpec, height_field, normals_from_height
from .lut import DEFAULT_BINS, CalibrationLUT, calibrate_lut, lookup_gradients
from .poisson import poisson_reconstruct
from .render import LightRig, TactileFrame, reference_frame, render

CALIBRATION_DEPTHS = (0.2, 0.4, 0.6, 0.8, 1.0)
CALIBRATION_RADIUS = 5.0
#: Area-fit threshold as a fraction of the commanded imprint depth.
AREA_THRESHOLD_FRACTION = 0.05


def sphere_press(Z, R=CALIBRATION_RADIUS, geom=FrameGeom(), rig=LightRig(), offset=(0.0, 0.0), quantize=True):
    """Render one sphere press; returns ``(frame, ground-truth gradients)``."""
    d = height_field(ShapeSpec("sphere", R=R, offset=offset), Z, geom)
    g = normals_from_height(d)
    frame = render(g, rig)
    return (frame.quantized() if quantize else frame), g


def calibrate_default(geom=FrameGeom(), rig=LightRig(), depths=CALIBRATION_DEPTHS, R=CALIBRATION_RADIUS, bins=DEFAULT_BINS):
    """Calibrate a LUT from centred sphere presses; returns ``(lut, reference)``."""
    reference = reference_frame((geom.height, geom.width), geom.pitch, rig).quantized()
    presses = [sphere_press(Z, R, geom, rig) for Z in depths]
    return calibrate_lut(presses, reference, bins=bins), reference


def decode_depth(frame: TactileFrame, reference: TactileFrame, lut: CalibrationLUT):
    """Frame -> (gradients, zero-mean depth map)."""
    g = lookup_gradients(frame, reference, lut)
    return g, poisson_reconstruct(g)


@dataclass(frozen=True)
class SweepPoint:
    Z: float
    expected_radius: float
    fit: ContactFit | None
    eval: ReconEval


def hertz_sweep(
    lut: CalibrationLUT,
    reference: TactileFrame,
    depths=CALIBRATION_DEPTHS,
    R=CALIBRATION_RADIUS,
    geom=FrameGeom(),
    rig=LightRig(),
    threshold_fraction=AREA_THRESHOLD_FRACTION,
    offset=(0.0, 0.0),
):
    """Press a sphere at each depth, decode, fit the contact area and compare with pi*R*Z."""
    points = []
    for Z in depths:
        frame, _ = sphere_press(Z, R, geom, rig, offset=offset)
        _, depth = decode_depth(frame, reference, lut)
        fit = fit_contact_region(depth, threshold_fraction * Z)
        c = HertzContact(R=R, Z=Z)
        S_E = fit.area if fit is not None else 0.0
        points.append(SweepPoint(Z, hertz_radius(c), fit, ReconEval(S_A=hertz_area(c), S_E=S_E)))
    return points


def gradient_error(g_est, g_true, mask=None) -> float:
    """Median absolute slope error over ``mask`` (both components pooled)."""
    if mask is None:
        mask = g_est.contact_mask
    err = np.concatenate([np.abs(g_est.gx - g_true.gx)[mask], np.abs(g_est.gy - g_true.gy)[mask]])
    return float(np.median(err)) if err.size else 0.0
