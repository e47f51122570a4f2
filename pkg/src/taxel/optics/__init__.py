"""Synthetic sensor optics: imprint geometry, rendering and photometric decoding."""
from .calibration import (
    AREA_THRESHOLD_FRACTION,
    CALIBRATION_DEPTHS,
    calibrate_default,
    decode_depth,
    gradient_error,
    hertz_sweep,
    sphere_press,
)
from .evaluate import ContactFit, background_level, fit_contact_region, recon_mae
from .geometry import (
    SHAPES,
    DepthMap,
    FrameGeom,
    GradientField,
    ShapeSpec,
    height_field,
    normals_from_height,
)
from .lut import CONTACT_THRESHOLD, CalibrationLUT, calibrate_lut, lookup_gradients
from .poisson import poisson_reconstruct
from .render import LightRig, TactileFrame, reference_frame, render

__all__ = [
    "AREA_THRESHOLD_FRACTION",
    "CALIBRATION_DEPTHS",
    "CONTACT_THRESHOLD",
    "CalibrationLUT",
    "ContactFit",
    "DepthMap",
    "FrameGeom",
    "GradientField",
    "LightRig",
    "SHAPES",
    "ShapeSpec",
    "TactileFrame",
    "background_level",
    "calibrate_default",
    "calibrate_lut",
    "decode_depth",
    "fit_contact_region",
    "gradient_error",
    "height_field",
    "hertz_sweep",
    "lookup_gradients",
    "normals_from_height",
    "poisson_reconstruct",
    "recon_mae",
    "reference_frame",
    "render",
    "sphere_press",
]
