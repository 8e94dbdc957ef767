"""Temporal-compression factor, residual decomposition, and execution horizon."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import EPSILON_NORM, ZERO, DisturbanceEstimate, Vec3, WrapperConfig

#: Alpha values this close to an integer division boundary snap to it, so the
#: horizon does not flap on rounding noise.
_BOUNDARY_SNAP = 1e-12


def acceleration_coupling(K: int) -> float:
    """Window coefficient 3K(K+1) / (4(2K+1)) weighting the acceleration term."""
    return 3.0 * K * (K + 1) / (4.0 * (2 * K + 1))


@dataclass(frozen=True, slots=True)
class ResidualDecomposition:
    """Pace factor plus the disturbance residuals handed to the path channel."""

    alpha_star: float
    a_perp: Vec3
    b_perp: Vec3
    cos_theta_v: float = 0.0
    cos_theta_a: float = 0.0
    clamped: bool = False


_IDENTITY = ResidualDecomposition(1.0, ZERO, ZERO)


def residuals_at_alpha(delta_p: Vec3, d: DisturbanceEstimate, alpha: float) -> ResidualDecomposition:
    """Residuals for an externally fixed pace factor.

    The full first-order residual velocity - (alpha - 1) * delta_p and half the
    full acceleration are routed to the path channel; nothing is projected out,
    so the path offsets remain the conditional optimum given this alpha.
    """
    a_res = d.velocity - delta_p.scaled(alpha - 1.0) if alpha != 1.0 else d.velocity
    return ResidualDecomposition(alpha, a_res, d.acceleration.scaled(0.5))


def compute_alpha(
    delta_p: Vec3,
    d: DisturbanceEstimate,
    K: int,
    eps: float = EPSILON_NORM,
) -> ResidualDecomposition:
    """Stationary pace factor for the effort-regularized tracking cost.

    alpha = 1 + v cos(theta_v) / |dp| + c(K) a cos(theta_a) / |dp|, clamped to
    1 from below. Unclamped, the residuals are the components of the velocity
    and half-acceleration perpendicular to the plan; clamped (antagonistic
    aggregate) or degenerate (|dp| below eps), the full vectors pass through.
    """
    if K < 1:
        raise ValueError("window length must be >= 1")
    v, a = d.velocity, d.acceleration
    if v.is_zero() and a.is_zero():
        return _IDENTITY

    nd = delta_p.norm()
    if nd < eps:
        return residuals_at_alpha(delta_p, d, 1.0)

    dp_hat = delta_p.scaled(1.0 / nd)
    w = v.dot(dp_hat)
    ac = a.dot(dp_hat)
    vn = v.norm()
    an = a.norm()
    cos_v = w / vn if vn > 0.0 else 0.0
    cos_a = ac / an if an > 0.0 else 0.0

    alpha = 1.0 + w / nd + acceleration_coupling(K) * ac / nd
    if alpha < 1.0:
        folded = residuals_at_alpha(delta_p, d, 1.0)
        return ResidualDecomposition(1.0, folded.a_perp, folded.b_perp, cos_v, cos_a, clamped=True)

    a_perp = v - dp_hat.scaled(w)
    b_perp = (a - dp_hat.scaled(ac)).scaled(0.5)
    return ResidualDecomposition(alpha, a_perp, b_perp, cos_v, cos_a, clamped=False)


def compute_k_exec(
    alpha: float,
    cfg: WrapperConfig,
    latch_fired: bool,
    t_effective: int | None = None,
) -> int:
    """Execution horizon max(K, min(ceil(T / alpha), T)), capped by the
    consistency ceiling and, when the cadence gate fired, by T // 4."""
    if alpha < 1.0:
        raise ValueError("pace factor must be >= 1")
    T = cfg.T if t_effective is None else t_effective
    q = T / alpha
    nearest = round(q)
    steps = nearest if abs(q - nearest) < _BOUNDARY_SNAP else math.ceil(q)
    k = max(cfg.K, min(steps, T))
    k = min(k, cfg.H_eff)
    if latch_fired:
        k = min(k, T // 4)
    return max(k, cfg.K)
