"""Request and response models for the correction service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..core import ActionStep, ChunkPlan, Vec3
from ..sim import REGIMES


class Vec3Model(BaseModel):
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def wrap(cls, v: Vec3) -> "Vec3Model":
        return cls(x=v.x, y=v.y, z=v.z)

    def unwrap(self) -> Vec3:
        return Vec3(self.x, self.y, self.z)


class ActionStepModel(BaseModel):
    translation: Vec3Model
    rotation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gripper: float = 1.0

    @classmethod
    def wrap(cls, s: ActionStep) -> "ActionStepModel":
        return cls(translation=Vec3Model.wrap(s.translation), rotation=s.rotation, gripper=s.gripper)

    def unwrap(self) -> ActionStep:
        return ActionStep(translation=self.translation.unwrap(), rotation=self.rotation, gripper=self.gripper)


class LatchStateModel(BaseModel):
    inner_level: float = 0.0
    outer_level: float = 0.0
    last_velocity: Vec3Model | None = None


class ConfigModel(BaseModel):
    """Wrapper configuration overrides; omitted fields keep their defaults."""

    T: int | None = None
    K: int | None = None
    H_eff: int | None = None
    beta_in: float | None = None
    V_max: float | None = None
    dt: float | None = None
    c_pd: float | None = None
    r_grip: float | None = None
    epsilon_norm: float | None = None

    def overrides(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class CorrectionRequest(BaseModel):
    steps: list[ActionStepModel] = Field(min_length=1)
    delta_p: Vec3Model
    velocity: Vec3Model = Field(default_factory=Vec3Model)
    acceleration: Vec3Model = Field(default_factory=Vec3Model)
    lam: float = Field(default=1.0, gt=0.0)
    grasp_near: bool = False
    nu_bypass: bool = False
    latch: LatchStateModel | None = None
    tcp_position: Vec3Model | None = None
    config: ConfigModel | None = None
    fixed_alpha: float | None = None
    second_order: bool = True
    latch_enabled: bool = True

    def chunk(self) -> ChunkPlan:
        return ChunkPlan(steps=tuple(s.unwrap() for s in self.steps))


class GateFlagsModel(BaseModel):
    nu_bypass: bool = False
    grasp_bypass: bool = False
    latch_fired: bool = False
    alpha_clamped: bool = False


class CorrectionResponse(BaseModel):
    corrected_steps: list[ActionStepModel]
    alpha_star: float
    offsets: list[Vec3Model]
    k_exec: int
    gates: GateFlagsModel
    latch: LatchStateModel
    timing_ns: int


class VerifyRequest(BaseModel):
    trials: int = Field(default=1000, ge=1)
    k_max: int = Field(default=8, ge=1, le=16)
    seed: int = 0
    perturb: bool = False


class FamilyResultModel(BaseModel):
    name: str
    cases: int
    max_deviation: float
    tolerance: float
    passed: bool
    detail: str = ""


class VerifyResponse(BaseModel):
    passed: bool
    families: list[FamilyResultModel]


class RunRequest(BaseModel):
    regimes: list[str] = Field(default_factory=lambda: list(REGIMES))
    trials: int = Field(default=100, ge=1)
    seed_base: int = 0
    paired: bool = True
    noise_sigma_v: float = Field(default=0.0, ge=0.0)
    noise_sigma_theta_deg: float = Field(default=0.0, ge=0.0)
    fixed_alpha: float | None = None
    latch_enabled: bool = True
    second_order: bool = True
    beta_in: float | None = None
    beta_out: float | None = None
    lam: float = Field(default=1.0, gt=0.0)
    max_ticks: int = Field(default=200, ge=1)
    jobs: int = Field(default=1, ge=0)


class EpisodeRowModel(BaseModel):
    regime: str
    seed: int
    ppc: bool
    intercepted: bool
    intercept_tick: int | None
    terminal_distance: float
    min_distance: float
    mean_alpha: float | None
    latch_rate: float | None
    nu_rate: float | None


class RunResponse(BaseModel):
    rows: list[EpisodeRowModel]
    summary: dict
    csv: str


class SweepRequest(RunRequest):
    axis: str
    values: list[float] = Field(min_length=1)


class SweepRowModel(BaseModel):
    axis: str
    value: str
    regimes: str
    trials: int
    ppc_rate: float
    baseline_rate: float | None


class SweepResponse(BaseModel):
    rows: list[SweepRowModel]
    csv: str


class BenchRequest(BaseModel):
    calls: int = Field(default=1000, ge=1)
    k_exec: int = Field(default=8, ge=1, le=16)
    warmup: int = Field(default=100, ge=0)


class BenchResponse(BaseModel):
    calls: int
    k_exec: int
    mean_ms: float
    median_ms: float
    p90_ms: float
    p99_ms: float
    max_ms: float
