"""Shared geometric and configuration types used by every other module."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

#: Norm floor below which a vector is treated as having no usable direction.
EPSILON_NORM = 1e-9


@dataclass(frozen=True, slots=True)
class Vec3:
    """Cartesian triple in meters (or meters per env-step for displacements)."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite vector component ({self.x}, {self.y}, {self.z})")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def is_zero(self) -> bool:
        return self.x == 0.0 and self.y == 0.0 and self.z == 0.0

    def capped(self, max_norm: float) -> "Vec3":
        """Rescale to `max_norm` if the norm exceeds it, else return self unchanged."""
        n = self.norm()
        if n <= max_norm:
            return self
        return self.scaled(max_norm / n)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


ZERO = Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True, slots=True)
class ActionStep:
    """One per-step arm command: xyz delta plus pass-through rotation and gripper.

    The translation is in controller action units; the realized world-space
    displacement per env-step is ``translation * c_pd``.
    """

    translation: Vec3
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gripper: float = 1.0


@dataclass(frozen=True, slots=True)
class ChunkPlan:
    """Fixed-length sequence of future action steps emitted by one policy query."""

    steps: tuple[ActionStep, ...]

    def __post_init__(self) -> None:
        if len(self.steps) < 1:
            raise ValueError("chunk must contain at least one step")

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True, slots=True)
class DisturbanceEstimate:
    """Per-tick target displacement, optional per-tick^2 acceleration, and the
    path-channel regularizer."""

    velocity: Vec3 = ZERO
    acceleration: Vec3 = ZERO
    lam: float = 1.0

    def __post_init__(self) -> None:
        if not (self.lam > 0.0):
            raise ValueError(f"regularizer must be positive, got {self.lam}")


@dataclass(frozen=True, slots=True)
class LatchConstants:
    """Inner EMA rate plus the three constants derived from the chunk geometry."""

    beta_in: float
    beta_out: float
    l_th: float
    r_th: float


@dataclass(frozen=True, slots=True)
class WrapperConfig:
    T: int = 16
    K: int = 2
    H_eff: int = 10
    beta_in: float = 0.3
    V_max: float = 1.0
    dt: float = 0.05
    c_pd: float = 0.04
    r_grip: float = 0.03
    workspace_min: Vec3 = field(default_factory=lambda: Vec3(-0.4, -0.4, 0.0))
    workspace_max: Vec3 = field(default_factory=lambda: Vec3(0.4, 0.4, 0.3))
    epsilon_norm: float = EPSILON_NORM
    # Upstream confidence-estimator settings, carried for completeness; nothing
    # in this package computes with them.
    bayes_q: float = 1.8
    bayes_beta_revert: float = 0.0

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not (self.K <= self.H_eff <= self.T):
            raise ValueError(f"need K <= H_eff <= T, got {self.K}, {self.H_eff}, {self.T}")
        if not (0.0 < self.beta_in < 1.0):
            raise ValueError("beta_in must lie in (0, 1)")
        for name in ("V_max", "dt", "c_pd", "r_grip", "epsilon_norm"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive")
        lo, hi = self.workspace_min, self.workspace_max
        if not (lo.x < hi.x and lo.y < hi.y and lo.z < hi.z):
            raise ValueError("workspace_min must be strictly below workspace_max per axis")

    @property
    def step_cap(self) -> float:
        """Per-step world-space translation bound, meters per env-step."""
        return self.V_max * self.dt


def derive_latch_constants(cfg: WrapperConfig) -> LatchConstants:
    """Derive the outer EMA rate and thresholds from the chunk geometry.

    The outer half-life matches one chunk-budget cycle of T/K chunks, and the
    active threshold equals the inner level two standard-decay steps after a
    single trigger, so an isolated trigger holds the gate for exactly two
    chunk updates.
    """
    beta_out = 1.0 - 2.0 ** (-cfg.K / cfg.T)
    decay = 1.0 - cfg.beta_in
    # Grouped as the inner EMA actually evaluates it, so the two-chunk
    # boundary comparison is bit-exact rather than merely close.
    l_th = decay * (decay * cfg.beta_in)
    return LatchConstants(beta_in=cfg.beta_in, beta_out=beta_out, l_th=l_th, r_th=l_th)


def clamp_to_box(p: Vec3, cfg: WrapperConfig) -> Vec3:
    """Clamp a world-space position into the configured workspace box."""
    lo, hi = cfg.workspace_min, cfg.workspace_max
    x = lo.x if p.x < lo.x else (hi.x if p.x > hi.x else p.x)
    y = lo.y if p.y < lo.y else (hi.y if p.y > hi.y else p.y)
    z = lo.z if p.z < lo.z else (hi.z if p.z > hi.z else p.z)
    if x == p.x and y == p.y and z == p.z:
        return p
    return Vec3(x, y, z)
