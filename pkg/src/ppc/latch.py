"""Two-rate EMA latch detecting sustained direction instability.

A fast inner EMA accumulates direction-shift triggers; a slow outer EMA
estimates the chronic trigger rate and feeds a sticky factor that freezes the
inner decay under chronic instability. One state instance per episode,
updated once per chunk reset.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import EPSILON_NORM, LatchConstants, Vec3, WrapperConfig, derive_latch_constants


@dataclass(slots=True)
class LatchState:
    constants: LatchConstants
    inner_level: float = 0.0
    outer_level: float = 0.0
    last_velocity: Vec3 | None = None

    @classmethod
    def fresh(cls, cfg: WrapperConfig) -> "LatchState":
        return cls(constants=derive_latch_constants(cfg))

    def trigger(self, v_now: Vec3, eps: float = EPSILON_NORM) -> bool:
        """Direction-shift trigger: clamped cosine against the previous velocity
        below one half.

        Degenerate norms cannot signal a shift; the stored velocity is replaced
        only by a usable one, so a pause does not erase the reference direction.
        """
        prev = self.last_velocity
        now_norm = v_now.norm()
        if now_norm >= eps:
            self.last_velocity = v_now
        if prev is None or now_norm < eps:
            return False
        prev_norm = prev.norm()
        if prev_norm < eps:
            return False
        rho = max(0.0, v_now.dot(prev) / (now_norm * prev_norm))
        return rho < 0.5

    def update(self, triggered: bool) -> bool:
        """Advance both EMA levels one chunk reset; return the cadence gate."""
        c = self.constants
        tau = 1.0 if triggered else 0.0
        self.outer_level = c.beta_out * tau + (1.0 - c.beta_out) * self.outer_level
        s = self.outer_level / (self.outer_level + c.r_th)
        if triggered:
            self.inner_level = c.beta_in + (1.0 - c.beta_in) * self.inner_level
        else:
            self.inner_level = (1.0 - c.beta_in * (1.0 - s)) * self.inner_level
        return self.inner_level > c.l_th

    @property
    def fired(self) -> bool:
        return self.inner_level > self.constants.l_th

    def reset_on_grasp(self) -> None:
        """Zero both levels and drop the velocity reference; the target has
        become internal state."""
        self.inner_level = 0.0
        self.outer_level = 0.0
        self.last_velocity = None
