"""Series-spring press model, force synthesis, stiffness/hardness inversion
and Hertzian projected-area geometry.

Units throughout: mm, s, N, N/mm, Shore A (HA).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InfeasibleModelError

#: Shore-A to stiffness proportionality (N/mm per HA); 10-80 HA -> 2-16 N/mm.
DEFAULT_N = 0.2
#: Elastomer stiffness of the simulated sensor pad (N/mm).
DEFAULT_K2 = 12.0
#: Upper bound of total press displacement for which the linear springs hold.
DEFAULT_MAX_INDENTATION = 2.0
#: Fraction of samples discarded at each end before averaging dF/dt.
DEFAULT_TRIM = 0.1


@dataclass(frozen=True)
class SpringModel:
    k1: float
    k2: float = DEFAULT_K2
    N: float = DEFAULT_N

    def __post_init__(self):
        for name in ("k1", "k2", "N"):
            if not getattr(self, name) > 0:
                raise DomainError(f"SpringModel.{name} must be > 0, got {getattr(self, name)}")

    @property
    def k_total(self) -> float:
        return series_stiffness([self.k1, self.k2])

    @property
    def elastomer_share(self) -> float:
        """Fraction of the total displacement taken up by the elastomer."""
        if math.isinf(self.k1):
            return 1.0
        return self.k1 / (self.k1 + self.k2)


@dataclass(frozen=True)
class PressTrajectory:
    """Displacement-controlled press at constant speed ``v`` starting at contact."""

    v: float
    dt: float
    n_steps: int

    def __post_init__(self):
        if not self.v > 0:
            raise DomainError(f"press speed must be > 0, got {self.v}")
        if not self.dt > 0:
            raise DomainError(f"sample interval must be > 0, got {self.dt}")
        if self.n_steps < 2:
            raise DomainError(f"a press needs at least 2 samples, got {self.n_steps}")

    @classmethod
    def to_depth(cls, v: float, depth: float, dt: float) -> "PressTrajectory":
        """Trajectory that reaches ``depth`` mm of total displacement."""
        n = int(round(depth / (v * dt))) + 1
        return cls(v=v, dt=dt, n_steps=max(n, 2))

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt

    def x_total(self) -> np.ndarray:
        return self.v * self.t

    def x2(self, model: SpringModel) -> np.ndarray:
        """Elastomer compression; equals k1/(k1+k2) of the total."""
        return self.x_total() * model.elastomer_share

    def x1(self, model: SpringModel) -> np.ndarray:
        """Object compression."""
        return self.x_total() - self.x2(model)


@dataclass(frozen=True)
class ForceSequence:
    F: np.ndarray
    dt: float

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        if F.ndim != 1 or F.size < 2:
            raise DomainError("ForceSequence needs a 1-D array of at least 2 samples")
        if not self.dt > 0:
            raise DomainError(f"dt must be > 0, got {self.dt}")
        object.__setattr__(self, "F", F)

    def __len__(self):
        return self.F.size

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.F.size) * self.dt


@dataclass(frozen=True)
class HertzContact:
    R: float
    Z: float

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError(f"sphere radius must be > 0, got {self.R}")
        if not 0 <= self.Z <= self.R:
            raise DomainError(f"indentation depth must lie in [0, R], got {self.Z}")


@dataclass(frozen=True)
class ReconEval:
    S_A: float
    S_E: float

    def __post_init__(self):
        if self.S_A < 0 or self.S_E < 0:
            raise DomainError("projected areas must be non-negative")


def series_stiffness(ks: Sequence[float]) -> float:
    """Total stiffness of springs in series, ``(sum 1/k_i)^-1``."""
    ks = np.asarray(ks, dtype=float)
    if ks.size == 0:
        raise DomainError("series_stiffness needs at least one spring")
    if np.any(~(ks > 0)):
        raise DomainError(f"all stiffnesses must be > 0, got {ks.tolist()}")
    return float(1.0 / np.sum(1.0 / ks))


def object_stiffness(k_total: float, k2: float) -> float:
    """Invert the two-spring series for the object stiffness k1."""
    if not (k_total > 0 and k2 > 0):
        raise DomainError(f"stiffnesses must be > 0 (k_total={k_total}, k2={k2})")
    if k_total >= k2:
        raise InfeasibleModelError(
            f"series stiffness {k_total:.6g} N/mm is not below the elastomer "
            f"stiffness {k2:.6g} N/mm; check the k2 calibration"
        )
    return 1.0 / (1.0 / k_total - 1.0 / k2)


def synth_force_sequence(
    model: SpringModel,
    traj: PressTrajectory,
    noise: float = 0.0,
    seed: int | None = None,
    max_indentation: float = DEFAULT_MAX_INDENTATION,
) -> ForceSequence:
    """Force ramp ``F(t) = k_total * v * t`` of a displacement-controlled press.

    ``noise`` is the standard deviation of additive Gaussian noise as a
    fraction of the noise-free peak force.
    """
    x = traj.x_total()
    if x[-1] > max_indentation + 1e-12:
        raise DomainError(
            f"press reaches {x[-1]:.3g} mm, beyond the {max_indentation} mm linear-spring limit"
        )
    F = model.k_total * x
    if noise > 0:
        rng = np.random.default_rng(seed)
        F = F + rng.normal(0.0, noise * F.max(), size=F.shape)
    return ForceSequence(F=F, dt=traj.dt)


def force_gradient(seq: ForceSequence) -> np.ndarray:
    """dF/dt: central differences inside, one-sided differences at the ends."""
    if len(seq) < 3:
        raise DomainError(f"force_gradient needs at least 3 samples, got {len(seq)}")
    return np.gradient(seq.F, seq.dt, edge_order=1)


def trimmed_window(n: int, trim: float = DEFAULT_TRIM) -> slice:
    cut = int(math.floor(trim * n))
    if n - 2 * cut < 1:
        cut = (n - 1) // 2
    return slice(cut, n - cut)


def infer_stiffness(seq: ForceSequence, v: float, k2: float, trim: float = DEFAULT_TRIM) -> float:
    """Recover object stiffness k1 from a constant-speed press.

    ``k_total = mean(dF/dt) / v`` over the trimmed interior window, then the
    series inversion against the elastomer stiffness ``k2``.
    """
    if not v > 0:
        raise DomainError(f"press speed must be > 0, got {v}")
    G = force_gradient(seq)
    k_total = float(np.mean(G[trimmed_window(G.size, trim)])) / v
    return object_stiffness(k_total, k2)


def hardness_from_stiffness(k1: float, N: float = DEFAULT_N) -> float:
    if not N > 0:
        raise DomainError(f"N must be > 0, got {N}")
    return k1 / N


def stiffness_from_hardness(H: float, N: float = DEFAULT_N) -> float:
    if not N > 0:
        raise DomainError(f"N must be > 0, got {N}")
    return N * H


def hertz_radius(c: HertzContact) -> float:
    return math.sqrt(c.R * c.Z)


def hertz_area(c: HertzContact) -> float:
    return math.pi * c.R * c.Z
