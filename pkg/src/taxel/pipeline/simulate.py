"""Single-press simulation coupling the spring model with the optical sensor."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..contact import (
    DEFAULT_K2,
    DEFAULT_MAX_INDENTATION,
    DEFAULT_N,
    ForceSequence,
    PressTrajectory,
    SpringModel,
    stiffness_from_hardness,
    synth_force_sequence,
)
from ..errors import DomainError
from ..optics import FrameGeom, LightRig, ShapeSpec, TactileFrame, height_field, normals_from_height, render
from ..optics.geometry import DEFAULT_AREA, SHAPES
from ..twostream import FORCE_DT, FORCE_WINDOW

HARDNESS_RANGE = (10.0, 80.0)
FRAME_RATE = 10.0  # Hz
PRESS_SPEED = 0.5  # mm/s


@dataclass(frozen=True)
class PressScenario:
    shape: str
    hardness: float  # Shore A
    depth: float = 1.0  # total press displacement, mm
    k2: float = DEFAULT_K2
    v: float = PRESS_SPEED
    N: float = DEFAULT_N
    area: float = DEFAULT_AREA
    offset: tuple = (0.0, 0.0)
    rotation: float = 0.0
    seed: int = 0
    pixel_noise: float = 0.0
    force_noise: float = 0.0
    frame_rate: float = FRAME_RATE
    max_indentation: float = DEFAULT_MAX_INDENTATION
    hardness_range: tuple = HARDNESS_RANGE
    geom: FrameGeom = field(default_factory=FrameGeom)

    def __post_init__(self):
        if self.shape not in SHAPES and self.shape != "sphere":
            raise DomainError(f"unknown shape {self.shape!r}")
        lo, hi = self.hardness_range
        if not lo <= self.hardness <= hi:
            raise DomainError(f"hardness {self.hardness} HA outside [{lo}, {hi}]")
        if not self.depth > 0:
            raise DomainError(f"press depth must be > 0, got {self.depth}")

    @property
    def k1(self) -> float:
        return stiffness_from_hardness(self.hardness, self.N)

    @property
    def model(self) -> SpringModel:
        return SpringModel(k1=self.k1, k2=self.k2, N=self.N)

    @property
    def trajectory(self) -> PressTrajectory:
        return PressTrajectory.to_depth(self.v, self.depth, 1.0 / self.frame_rate)

    def shape_spec(self) -> ShapeSpec:
        return ShapeSpec(self.shape, area=self.area, offset=tuple(self.offset), rotation=self.rotation)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["geom"] = asdict(self.geom)
        d["offset"] = list(self.offset)
        d["hardness_range"] = list(self.hardness_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PressScenario":
        d = dict(d)
        d["geom"] = FrameGeom(**d["geom"])
        d["offset"] = tuple(d["offset"])
        d["hardness_range"] = tuple(d["hardness_range"])
        return cls(**d)


@dataclass
class FrameWindow:
    frames: list
    timestamps: np.ndarray
    reference: TactileFrame

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        if len(self.frames) < 2:
            raise DomainError(f"a frame window needs at least 2 frames, got {len(self.frames)}")
        if len(self.frames) != self.timestamps.size:
            raise DomainError("one timestamp per frame required")
        if np.any(np.diff(self.timestamps) <= 0):
            raise DomainError("frame timestamps must strictly increase")

    def __len__(self):
        return len(self.frames)


def simulate_press(s: PressScenario, rig: LightRig = LightRig()):
    """Returns ``(FrameWindow, ForceSequence, final ground-truth DepthMap)``.

    The elastomer imprint at each frame is the elastomer share of the total
    displacement, so softer objects leave shallower imprints and lower forces
    under identical kinematics.
    """
    model = s.model
    traj = s.trajectory
    seeds = np.random.SeedSequence(s.seed).spawn(2)
    force = synth_force_sequence(
        model, traj, noise=s.force_noise, seed=seeds[0], max_indentation=s.max_indentation
    )
    shape = s.shape_spec()
    frame_seeds = seeds[1].spawn(traj.n_steps)
    frames = []
    d = None
    for x2, fs in zip(traj.x2(model), frame_seeds):
        d = height_field(shape, float(x2), s.geom)
        frame = render(normals_from_height(d), rig, noise_sigma=s.pixel_noise, seed=fs)
        frames.append(frame.quantized())
    window = FrameWindow(frames=frames, timestamps=traj.t, reference=frames[0])
    return window, force, d


def select_frames(w: FrameWindow):
    """External stream: (first, last) frame. Internal stream: every frame in order."""
    if len(w) < 2:
        raise DomainError(f"frame selection needs at least 2 frames, got {len(w)}")
    return (w.frames[0], w.frames[-1]), list(w.frames)


def resample(seq: ForceSequence, T: int) -> np.ndarray:
    """Linear resampling of the whole sequence onto ``T`` evenly spaced points."""
    src = seq.t
    dst = np.linspace(src[0], src[-1], T)
    return np.interp(dst, src, seq.F)


def force_window(seq: ForceSequence, T: int = FORCE_WINDOW, dt: float = FORCE_DT) -> np.ndarray:
    """Sample ``seq`` on the fixed grid ``k*dt``; past the press end the last value is held (dwell)."""
    return np.interp(np.arange(T) * dt, seq.t, seq.F)
