"""Per-chunk correction pipeline.

Composes sensing, gating, the pace and path channels, and the latch into one
correction pass over an action chunk. Only the xyz translation channel is
written; rotation and gripper commands pass through untouched. A
ChunkCorrector instance owns the per-episode mutable state (frame history,
velocity memory, latch) and is not shared across episodes.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .core import ZERO, ActionStep, ChunkPlan, DisturbanceEstimate, LatchConstants, Vec3, WrapperConfig, clamp_to_box, derive_latch_constants
from .latch import LatchState
from .pace import compute_alpha, compute_k_exec
from .profiles import compute_offsets


@dataclass(frozen=True, slots=True)
class SensorFrame:
    tick: int
    object_position: Vec3
    reported_velocity: Vec3
    tcp_position: Vec3


@dataclass(frozen=True, slots=True)
class GatesInput:
    grasp_near: bool = False
    nu_bypass: bool = False


@dataclass(frozen=True, slots=True)
class GateFlags:
    nu_bypass: bool = False
    grasp_bypass: bool = False
    latch_fired: bool = False
    alpha_clamped: bool = False


@dataclass(frozen=True, slots=True)
class CorrectionOutput:
    corrected_steps: tuple[ActionStep, ...]
    alpha_star: float
    offsets: tuple[Vec3, ...]
    k_exec: int
    gates: GateFlags
    timing_ns: int


def estimate_disturbance(
    prev: SensorFrame,
    now: SensorFrame,
    cfg: WrapperConfig,
    previous_velocity: Vec3 | None = None,
    gap_ticks: int = 1,
    perturb: Callable[[Vec3], Vec3] | None = None,
) -> DisturbanceEstimate:
    """One-tick finite-difference velocity, magnitude-capped, with the
    acceleration taken as the velocity change per tick since the previous
    estimate. The regularizer is 1 under a unit-confidence velocity source.
    """
    if now.tick - prev.tick != 1:
        raise ValueError(f"frames must be consecutive ticks, got {prev.tick} -> {now.tick}")
    raw = now.object_position - prev.object_position
    if perturb is not None:
        raw = perturb(raw)
    velocity = raw.capped(cfg.step_cap)
    if previous_velocity is None or gap_ticks < 1:
        acceleration = ZERO
    else:
        acceleration = (velocity - previous_velocity).scaled(1.0 / gap_ticks)
    return DisturbanceEstimate(velocity=velocity, acceleration=acceleration, lam=1.0)


def plan_delta_from_chunk(chunk: ChunkPlan, cfg: WrapperConfig, K: int) -> Vec3:
    """World-space per-step plan delta from the chunk itself: the mean of the
    first K translations mapped through the controller response factor."""
    steps = chunk.steps[:K]
    if not steps:
        raise ValueError("chunk has no steps to estimate a plan delta from")
    acc = ZERO
    for s in steps:
        acc = acc + s.translation
    return acc.scaled(cfg.c_pd / len(steps))


def estimate_plan_delta(
    tcp_history: Sequence[Vec3],
    first_chunk: ChunkPlan,
    cfg: WrapperConfig,
    K: int,
) -> Vec3:
    """Per-step plan delta from the realized TCP trajectory, falling back to
    the chunk-mean formula when fewer than K+1 samples exist.

    Realized motion matches commanded motion only for a calibrated policy;
    a follower whose step size shrinks with target distance should prefer
    plan_delta_from_chunk so the pace factor scales the quantity it was
    computed against.
    """
    if len(tcp_history) < 1:
        raise ValueError("tcp history must hold at least one sample")
    if len(tcp_history) >= K + 1:
        return (tcp_history[-1] - tcp_history[-1 - K]).scaled(1.0 / K)
    return plan_delta_from_chunk(first_chunk, cfg, K)


def nu_gate(prev: SensorFrame, now: SensorFrame, cfg: WrapperConfig) -> bool:
    """Consistency bypass: the reported velocity is exactly zero while the
    observed one-tick displacement is not."""
    if not now.reported_velocity.is_zero():
        return False
    return (now.object_position - prev.object_position).norm() > cfg.epsilon_norm


def _passthrough(
    steps: tuple[ActionStep, ...],
    cfg: WrapperConfig,
    t_eff: int,
    gates: GateFlags,
    started_ns: int,
) -> CorrectionOutput:
    k = min(cfg.H_eff, t_eff)
    return CorrectionOutput(
        corrected_steps=steps[:k],
        alpha_star=1.0,
        offsets=(),
        k_exec=k,
        gates=gates,
        timing_ns=time.perf_counter_ns() - started_ns,
    )


def correct_chunk(
    chunk: ChunkPlan,
    d: DisturbanceEstimate,
    delta_p: Vec3,
    latch: LatchState,
    gates_input: GatesInput,
    cfg: WrapperConfig,
    tcp_position: Vec3 | None = None,
    *,
    fixed_alpha: float | None = None,
    second_order: bool = True,
    latch_enabled: bool = True,
) -> CorrectionOutput:
    """Full correction pass over one chunk.

    Order: grasp bypass (latch reset), consistency bypass (latch frozen),
    latch trigger and update, pace factor, execution horizon, offset profile,
    then per-step assembly with the magnitude cap and workspace clamp.
    The zero-disturbance path returns the source steps verbatim so the
    wrapper is bit-exact identity when nothing moves.
    """
    started = time.perf_counter_ns()
    steps = chunk.steps[:cfg.T]
    t_eff = len(steps)
    if t_eff < cfg.K:
        raise ValueError(f"chunk holds {t_eff} steps, below the execution floor {cfg.K}")

    if gates_input.grasp_near:
        latch.reset_on_grasp()
        return _passthrough(steps, cfg, t_eff, GateFlags(grasp_bypass=True), started)
    if gates_input.nu_bypass:
        return _passthrough(steps, cfg, t_eff, GateFlags(nu_bypass=True), started)

    fired = False
    if latch_enabled:
        fired = latch.update(latch.trigger(d.velocity, cfg.epsilon_norm))

    if not second_order and not d.acceleration.is_zero():
        d = replace(d, acceleration=ZERO)

    res = compute_alpha(delta_p, d, cfg.K, cfg.epsilon_norm)
    if fixed_alpha is not None:
        # Ablation mode: pin the pace factor, keep the path channel's residual
        # decomposition exactly as the adaptive path computed it.
        res = replace(res, alpha_star=max(1.0, fixed_alpha))

    k_exec = compute_k_exec(res.alpha_star, cfg, fired, t_eff)
    profile = compute_offsets(res, k_exec, d.lam)
    gates = GateFlags(latch_fired=fired, alpha_clamped=res.clamped)

    if res.alpha_star == 1.0 and profile.is_zero():
        # Identity path: no arithmetic may touch the source values.
        return CorrectionOutput(
            corrected_steps=steps[:k_exec],
            alpha_star=1.0,
            offsets=profile.offsets,
            k_exec=k_exec,
            gates=gates,
            timing_ns=time.perf_counter_ns() - started,
        )

    action_cap = cfg.step_cap / cfg.c_pd
    inv_c = 1.0 / cfg.c_pd
    pos = tcp_position
    corrected = []
    for k in range(k_exec):
        src = steps[k]
        t = src.translation.scaled(res.alpha_star) + profile.offsets[k].scaled(inv_c)
        t = t.capped(action_cap)
        if pos is not None:
            target = clamp_to_box(pos + t.scaled(cfg.c_pd), cfg)
            t = (target - pos).scaled(inv_c)
            pos = target
        corrected.append(ActionStep(translation=t, rotation=src.rotation, gripper=src.gripper))

    return CorrectionOutput(
        corrected_steps=tuple(corrected),
        alpha_star=res.alpha_star,
        offsets=profile.offsets,
        k_exec=k_exec,
        gates=gates,
        timing_ns=time.perf_counter_ns() - started,
    )


@dataclass(frozen=True, slots=True)
class ChunkDiagnostics:
    tick: int
    alpha_star: float
    k_exec: int
    speed: float
    gates: GateFlags


class ChunkCorrector:
    """Per-episode driver: observe one frame per tick, correct at chunk resets.

    Keeps the last few frames for finite differencing, monitors the
    consistency gate tick by tick so a mid-chunk contradiction bypasses the
    next correction, and owns the latch.
    """

    def __init__(
        self,
        cfg: WrapperConfig,
        *,
        perturb: Callable[[Vec3], Vec3] | None = None,
        fixed_alpha: float | None = None,
        second_order: bool = True,
        latch_enabled: bool = True,
        latch_constants: LatchConstants | None = None,
        lam: float = 1.0,
        plan_delta_source: str = "chunk_mean",
    ) -> None:
        if plan_delta_source not in ("chunk_mean", "realized"):
            raise ValueError(f"unknown plan delta source {plan_delta_source!r}")
        self.cfg = cfg
        self.latch = LatchState(constants=latch_constants or derive_latch_constants(cfg))
        self._perturb = perturb
        self._fixed_alpha = fixed_alpha
        self._second_order = second_order
        self._latch_enabled = latch_enabled
        self._lam = lam
        self._plan_delta_source = plan_delta_source
        self._frames: deque[SensorFrame] = deque(maxlen=2)
        self._tcp_history: deque[Vec3] = deque(maxlen=cfg.K + 1)
        self._nu_pending = False
        self._last_velocity: Vec3 | None = None
        self._last_velocity_tick = 0
        self.diagnostics: list[ChunkDiagnostics] = []

    def observe(self, frame: SensorFrame) -> None:
        if self._frames:
            if frame.tick <= self._frames[-1].tick:
                raise ValueError("frames must arrive with strictly increasing ticks")
            if nu_gate(self._frames[-1], frame, self.cfg):
                self._nu_pending = True
        self._frames.append(frame)
        self._tcp_history.append(frame.tcp_position)

    def correct(self, chunk: ChunkPlan) -> CorrectionOutput:
        if not self._frames:
            raise ValueError("no frames observed before correction")
        now = self._frames[-1]
        grasp_near = (now.tcp_position - now.object_position).norm() < self.cfg.r_grip
        nu = self._nu_pending
        self._nu_pending = False

        if len(self._frames) < 2:
            d = DisturbanceEstimate(lam=self._lam)
        else:
            d = estimate_disturbance(
                self._frames[-2],
                now,
                self.cfg,
                previous_velocity=self._last_velocity,
                gap_ticks=now.tick - self._last_velocity_tick,
                perturb=self._perturb,
            )
            if self._lam != 1.0:
                d = replace(d, lam=self._lam)
        if self._plan_delta_source == "chunk_mean":
            delta_p = plan_delta_from_chunk(chunk, self.cfg, self.cfg.K)
        else:
            delta_p = estimate_plan_delta(list(self._tcp_history), chunk, self.cfg, self.cfg.K)

        out = correct_chunk(
            chunk,
            d,
            delta_p,
            self.latch,
            GatesInput(grasp_near=grasp_near, nu_bypass=nu),
            self.cfg,
            tcp_position=now.tcp_position,
            fixed_alpha=self._fixed_alpha,
            second_order=self._second_order,
            latch_enabled=self._latch_enabled,
        )
        if not nu and len(self._frames) >= 2:
            # A contradictory reading never enters the velocity memory.
            self._last_velocity = d.velocity
            self._last_velocity_tick = now.tick
        self.diagnostics.append(
            ChunkDiagnostics(
                tick=now.tick,
                alpha_star=out.alpha_star,
                k_exec=out.k_exec,
                speed=d.velocity.norm() if len(self._frames) >= 2 else 0.0,
                gates=out.gates,
            )
        )
        return out
