"""Closed-form pace-and-path correction for chunked-action controllers.

A training-free wrapper that splits a per-chunk quadratic tracking correction
into a temporal-compression factor along the planned direction and
golden-ratio-profile spatial offsets perpendicular to it, gated by a two-rate
EMA instability latch. Ships with an independent quadratic-program oracle, a
seeded moving-target simulator, an HTTP service, and a CLI.
"""

__version__ = "0.1.0"

from .core import (
    EPSILON_NORM,
    ZERO,
    ActionStep,
    ChunkPlan,
    DisturbanceEstimate,
    LatchConstants,
    Vec3,
    WrapperConfig,
    clamp_to_box,
    derive_latch_constants,
)
from .latch import LatchState
from .oracle import CostBreakdown, CostInstance, evaluate_cost, solve_joint, solve_offsets_at_alpha
from .pace import ResidualDecomposition, acceleration_coupling, compute_alpha, compute_k_exec, residuals_at_alpha
from .pipeline import (
    ChunkCorrector,
    ChunkDiagnostics,
    CorrectionOutput,
    GateFlags,
    GatesInput,
    SensorFrame,
    correct_chunk,
    estimate_disturbance,
    estimate_plan_delta,
    nu_gate,
    plan_delta_from_chunk,
)
from .profiles import (
    OffsetProfile,
    compute_offsets,
    cosh_profile,
    fib_profile,
    fibonacci,
    lucas,
    lucas_profile,
)
from .sim import (
    REGIMES,
    EpisodeConfig,
    EpisodeRecord,
    FollowerParams,
    NoiseParams,
    WrapperOverrides,
    inject_noise,
    make_motion,
    perturb_velocity,
    query_follower,
    run_episode,
    step_target,
)

__all__ = [
    "__version__",
    "EPSILON_NORM",
    "ZERO",
    "ActionStep",
    "ChunkPlan",
    "ChunkCorrector",
    "ChunkDiagnostics",
    "CorrectionOutput",
    "CostBreakdown",
    "CostInstance",
    "DisturbanceEstimate",
    "EpisodeConfig",
    "EpisodeRecord",
    "FollowerParams",
    "GateFlags",
    "GatesInput",
    "LatchConstants",
    "LatchState",
    "NoiseParams",
    "OffsetProfile",
    "REGIMES",
    "ResidualDecomposition",
    "SensorFrame",
    "Vec3",
    "WrapperConfig",
    "WrapperOverrides",
    "acceleration_coupling",
    "clamp_to_box",
    "compute_alpha",
    "compute_k_exec",
    "compute_offsets",
    "correct_chunk",
    "cosh_profile",
    "derive_latch_constants",
    "estimate_disturbance",
    "estimate_plan_delta",
    "evaluate_cost",
    "fib_profile",
    "fibonacci",
    "inject_noise",
    "lucas",
    "lucas_profile",
    "make_motion",
    "nu_gate",
    "perturb_velocity",
    "plan_delta_from_chunk",
    "query_follower",
    "residuals_at_alpha",
    "run_episode",
    "solve_joint",
    "solve_offsets_at_alpha",
    "step_target",
]
