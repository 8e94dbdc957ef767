"""Desk-scale moving-target simulator.

A point-mass target follows one of ten seeded motion regimes while a
dynamics-blind follower policy replans straight-line chunks from stale
snapshots. The wrapper can be toggled per episode; paired runs share seeds so
regime trajectories are bit-identical across arms. Success is an interception
proxy: the TCP entering the grip radius of the target center.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ZERO, ActionStep, ChunkPlan, DisturbanceEstimate, Vec3, WrapperConfig, clamp_to_box, derive_latch_constants
from .pipeline import ChunkCorrector, ChunkDiagnostics, SensorFrame

REGIMES = (
    "static",
    "uniform_easy",
    "uniform_medium",
    "uniform_hard",
    "accel_easy",
    "accel_medium",
    "accel_hard",
    "random_walk",
    "stop_and_go",
    "teleport",
)

#: Speed bands per uniform tier, m/s.
UNIFORM_SPEED = {"uniform_easy": (0.01, 0.02), "uniform_medium": (0.02, 0.04), "uniform_hard": (0.04, 0.08)}
#: Base speed band shared by every accelerated tier, m/s.
ACCEL_BASE_SPEED = (0.02, 0.03)
#: Acceleration magnitude bands per tier, m/s^2.
ACCEL_MAGNITUDE = {"accel_easy": (0.02, 0.03), "accel_medium": (0.03, 0.05), "accel_hard": (0.05, 0.09)}
RANDOM_WALK_SPEED = 0.05
RANDOM_WALK_INTERVAL = (5, 12)
STOP_AND_GO_SPEED = 0.07
STOP_AND_GO_MOVE_TICKS = (3, 7)
STOP_AND_GO_PAUSE_TICKS = (3, 6)
TELEPORT_FIRST_WINDOW = (3, 10)
TELEPORT_SECOND_WINDOW = (80, 140)
TELEPORT_DISPLACEMENT = (0.08, 0.12)

#: Target plane height and spawn half-extent, meters.
OBJECT_HEIGHT = 0.05
SPAWN_HALF_EXTENT = 0.12
TCP_START = Vec3(0.0, -0.2, 0.12)


@dataclass(frozen=True, slots=True)
class FollowerParams:
    max_policy_step: float = 0.02
    planning_latency_ticks: int = 0


@dataclass(frozen=True, slots=True)
class NoiseParams:
    sigma_v: float = 0.0
    sigma_theta_deg: float = 0.0

    def enabled(self) -> bool:
        return self.sigma_v > 0.0 or self.sigma_theta_deg > 0.0


@dataclass(frozen=True, slots=True)
class WrapperOverrides:
    """Per-run wrapper ablation knobs; defaults reproduce standard behavior."""

    fixed_alpha: float | None = None
    latch_enabled: bool = True
    second_order: bool = True
    beta_in: float | None = None
    beta_out: float | None = None
    lam: float = 1.0


@dataclass(frozen=True, slots=True)
class EpisodeConfig:
    regime: str
    seed: int
    max_ticks: int = 200
    control_hz: float = 20.0
    follower: FollowerParams = field(default_factory=FollowerParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    ppc_enabled: bool = True

    def __post_init__(self) -> None:
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.max_ticks < 1 or self.control_hz <= 0:
            raise ValueError("max_ticks must be >= 1 and control_hz positive")


@dataclass(frozen=True, slots=True)
class TickTrace:
    tick: int
    object_position: Vec3
    tcp_position: Vec3
    chunk_reset: bool


@dataclass(frozen=True, slots=True)
class EpisodeRecord:
    regime: str
    seed: int
    ppc_enabled: bool
    ticks: tuple[TickTrace, ...]
    chunks: tuple[ChunkDiagnostics, ...]
    intercepted: bool
    intercept_tick: int | None
    terminal_distance: float
    min_distance: float


def _planar_direction(rng: np.random.Generator) -> Vec3:
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return Vec3(math.cos(angle), math.sin(angle), 0.0)


class TargetMotion:
    """Base target state machine; subclasses advance one tick per step call."""

    kind: str = ""

    def __init__(self, rng: np.random.Generator, dt: float) -> None:
        self.rng = rng
        self.dt = dt
        x, y = rng.uniform(-SPAWN_HALF_EXTENT, SPAWN_HALF_EXTENT, size=2)
        self.position = Vec3(float(x), float(y), OBJECT_HEIGHT)

    def step(self, tick: int) -> tuple[Vec3, Vec3]:
        """Advance one tick; return (new position, reported velocity in m/s)."""
        raise NotImplementedError


class StaticMotion(TargetMotion):
    kind = "static"

    def step(self, tick: int) -> tuple[Vec3, Vec3]:
        return self.position, ZERO


class UniformMotion(TargetMotion):
    def __init__(self, kind: str, rng: np.random.Generator, dt: float) -> None:
        super().__init__(rng, dt)
        self.kind = kind
        lo, hi = UNIFORM_SPEED[kind]
        self.speed = float(rng.uniform(lo, hi))
        self.direction = _planar_direction(rng)

    def step(self, tick: int) -> tuple[Vec3, Vec3]:
        velocity = self.direction.scaled(self.speed)
        self.position = self.position + velocity.scaled(self.dt)
        return self.position, velocity


class AcceleratedMotion(TargetMotion):
    def __init__(self, kind: str, rng: np.random.Generator, dt: float) -> None:
        super().__init__(rng, dt)
        self.kind = kind
        lo, hi = ACCEL_MAGNITUDE[kind]
        self.base_speed = float(rng.uniform(*ACCEL_BASE_SPEED))
        self.accel_magnitude = float(rng.uniform(lo, hi))
        self.velocity = _planar_direction(rng).scaled(self.base_speed)
        self.acceleration = _planar_direction(rng).scaled(self.accel_magnitude)

    def step(self, tick: int) -> tuple[Vec3, Vec3]:
        velocity = self.velocity
        self.position = self.position + velocity.scaled(self.dt)
        self.velocity = velocity + self.acceleration.scaled(self.dt)
        return self.position, velocity


class RandomWalkMotion(TargetMotion):
    kind = "random_walk"

    def __init__(self, rng: np.random.Generator, dt: float) -> None:
        super().__init__(rng, dt)
        self.speed = RANDOM_WALK_SPEED
        self.direction = _planar_direction(rng)
        self._next_resample = self._draw_interval()

    def _draw_interval(self) -> int:
        lo, hi = RANDOM_WALK_INTERVAL
        return int(self.rng.integers(lo, hi + 1))

    def step(self, tick: int) -> tuple[Vec3, Vec3]:
        if self._next_resample <= 0:
            self.direction = _planar_direction(self.rng)
            self._next_resample = self._draw_interval()
        self._next_resample -= 1
        velocity = self.direction.scaled(self.speed)
        self.position = self.position + velocity.scaled(self.dt)
        return self.position, velocity


class StopAndGoMotion(TargetMotion):
    kind = "stop_and_go"

    def __init__(self, rng: np.random.Generator, dt: float) -> None:
        super().__init__(rng, dt)
        self.speed = STOP_AND_GO_SPEED
        self.moving = True
        self.direction = _planar_direction(rng)
        self._phase_left = self._draw_phase(moving=True)

    def _draw_phase(self, moving: bool) -> int:
        lo, hi = STOP_AND_GO_MOVE_TICKS if moving else STOP_AND_GO_PAUSE_TICKS
        return int(self.rng.integers(lo, hi + 1))

    def step(self, tick: int) -> tuple[Vec3, Vec3]:
        if self._phase_left <= 0:
            self.moving = not self.moving
            if self.moving:
                self.direction = _planar_direction(self.rng)
            self._phase_left = self._draw_phase(self.moving)
        self._phase_left -= 1
        if not self.moving:
            return self.position, ZERO
        velocity = self.direction.scaled(self.speed)
        self.position = self.position + velocity.scaled(self.dt)
        return self.position, velocity


class TeleportMotion(TargetMotion):
    kind = "teleport"

    def __init__(self, rng: np.random.Generator, dt: float) -> None:
        super().__init__(rng, dt)
        first = int(rng.integers(TELEPORT_FIRST_WINDOW[0], TELEPORT_FIRST_WINDOW[1] + 1))
        second = int(rng.integers(TELEPORT_SECOND_WINDOW[0], TELEPORT_SECOND_WINDOW[1] + 1))
        self.jump_ticks = (first, second)
        self.jumps = tuple(
            _planar_direction(rng).scaled(float(rng.uniform(*TELEPORT_DISPLACEMENT)))
            for _ in range(2)
        )

    def step(self, tick: int) -> tuple[Vec3, Vec3]:
        # The reported field reads bit-zero even on a jump tick.
        for when, jump in zip(self.jump_ticks, self.jumps):
            if tick == when:
                self.position = self.position + jump
                break
        return self.position, ZERO


def make_motion(kind: str, rng: np.random.Generator, dt: float) -> TargetMotion:
    if kind == "static":
        return StaticMotion(rng, dt)
    if kind in UNIFORM_SPEED:
        return UniformMotion(kind, rng, dt)
    if kind in ACCEL_MAGNITUDE:
        return AcceleratedMotion(kind, rng, dt)
    if kind == "random_walk":
        return RandomWalkMotion(rng, dt)
    if kind == "stop_and_go":
        return StopAndGoMotion(rng, dt)
    if kind == "teleport":
        return TeleportMotion(rng, dt)
    raise ValueError(f"unknown regime {kind!r}")


def step_target(motion: TargetMotion, tick: int) -> tuple[Vec3, Vec3]:
    """Advance the target one tick under its regime."""
    return motion.step(tick)


def query_follower(
    tcp: Vec3,
    object_snapshot: Vec3,
    params: FollowerParams,
    T: int,
    c_pd: float,
) -> ChunkPlan:
    """Dynamics-blind straight-line plan from the TCP to a single snapshot.

    The world-space gap is split into T equal per-step displacements, each
    capped at max_policy_step, then expressed in action units (divided by the
    controller response factor). Rotation stays zero and the gripper open.
    """
    gap = object_snapshot - tcp
    per_step = gap.scaled(1.0 / T).capped(params.max_policy_step)
    translation = per_step.scaled(1.0 / c_pd)
    step = ActionStep(translation=translation, rotation=(0.0, 0.0, 0.0), gripper=1.0)
    return ChunkPlan(steps=tuple([step] * T))


def perturb_velocity(v: Vec3, noise: NoiseParams, rng: np.random.Generator) -> Vec3:
    """Multiplicative magnitude noise floored at zero, then a rotation by a
    normal angle about a uniformly random axis perpendicular to the vector.
    Zero vectors and zero sigmas consume no randomness."""
    if v.is_zero() or not noise.enabled():
        return v
    magnitude = v.norm()
    if noise.sigma_v > 0.0:
        magnitude = max(0.0, magnitude * (1.0 + float(rng.normal(0.0, noise.sigma_v))))
    direction = v.scaled(1.0 / v.norm())
    if noise.sigma_theta_deg > 0.0:
        theta = float(rng.normal(0.0, math.radians(noise.sigma_theta_deg)))
        phi = float(rng.uniform(0.0, 2.0 * math.pi))
        seed_axis = Vec3(1.0, 0.0, 0.0) if abs(direction.x) < 0.9 else Vec3(0.0, 1.0, 0.0)
        e1 = direction.cross(seed_axis)
        e1 = e1.scaled(1.0 / e1.norm())
        e2 = direction.cross(e1)
        axis = e1.scaled(math.cos(phi)) + e2.scaled(math.sin(phi))
        direction = direction.scaled(math.cos(theta)) + axis.cross(direction).scaled(math.sin(theta))
    return direction.scaled(magnitude)


def inject_noise(d: DisturbanceEstimate, noise: NoiseParams, rng: np.random.Generator) -> DisturbanceEstimate:
    """Perturb the velocity channel of a disturbance estimate."""
    return replace(d, velocity=perturb_velocity(d.velocity, noise, rng))


def run_episode(
    cfg: EpisodeConfig,
    wrapper_cfg: WrapperConfig | None = None,
    overrides: WrapperOverrides | None = None,
) -> EpisodeRecord:
    """Run one seeded episode; bit-reproducible for identical arguments."""
    wcfg = wrapper_cfg or WrapperConfig()
    ov = overrides or WrapperOverrides()
    dt = 1.0 / cfg.control_hz
    regime_rng, noise_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(2)
    )
    motion = make_motion(cfg.regime, regime_rng, dt)
    tcp = TCP_START

    corrector: ChunkCorrector | None = None
    if cfg.ppc_enabled:
        base = wcfg if ov.beta_in is None else replace(wcfg, beta_in=ov.beta_in)
        constants = derive_latch_constants(base)
        if ov.beta_out is not None:
            constants = replace(constants, beta_out=ov.beta_out)
        perturb = None
        if cfg.noise.enabled():
            perturb = lambda v: perturb_velocity(v, cfg.noise, noise_rng)
        corrector = ChunkCorrector(
            wcfg,
            perturb=perturb,
            fixed_alpha=ov.fixed_alpha,
            second_order=ov.second_order,
            latch_enabled=ov.latch_enabled,
            latch_constants=constants,
            lam=ov.lam,
        )

    snapshots: deque[Vec3] = deque(maxlen=cfg.follower.planning_latency_ticks + 1)
    queue: deque[ActionStep] = deque()
    trace: list[TickTrace] = []
    intercepted = False
    intercept_tick: int | None = None
    min_distance = math.inf
    distance = math.inf

    for tick in range(cfg.max_ticks):
        obj, reported = motion.step(tick)
        snapshots.append(obj)
        frame = SensorFrame(tick=tick, object_position=obj, reported_velocity=reported, tcp_position=tcp)
        if corrector is not None:
            corrector.observe(frame)

        is_reset = not queue
        if is_reset:
            plan = query_follower(tcp, snapshots[0], cfg.follower, wcfg.T, wcfg.c_pd)
            if corrector is not None:
                queue.extend(corrector.correct(plan).corrected_steps)
            else:
                queue.extend(plan.steps[: min(wcfg.H_eff, len(plan.steps))])

        step = queue.popleft()
        tcp = clamp_to_box(tcp + step.translation.scaled(wcfg.c_pd), wcfg)
        distance = (tcp - obj).norm()
        min_distance = min(min_distance, distance)
        trace.append(TickTrace(tick=tick, object_position=obj, tcp_position=tcp, chunk_reset=is_reset))
        if distance < wcfg.r_grip:
            intercepted = True
            intercept_tick = tick
            break

    return EpisodeRecord(
        regime=cfg.regime,
        seed=cfg.seed,
        ppc_enabled=cfg.ppc_enabled,
        ticks=tuple(trace),
        chunks=tuple(corrector.diagnostics) if corrector is not None else (),
        intercepted=intercepted,
        intercept_tick=intercept_tick,
        terminal_distance=distance,
        min_distance=min_distance,
    )
