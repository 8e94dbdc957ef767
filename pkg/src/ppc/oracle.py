"""Brute-force minimizer of the tracking-vs-effort quadratic.

This module never touches the closed forms: it assembles the dense
normal-equation system over (alpha, delta_0..delta_{K-1}) and factorizes it,
so it can certify the analytic channels independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EPSILON_NORM, DisturbanceEstimate, Vec3

#: Diagonal regularization applied only if the plain factorization fails.
_FALLBACK_RIDGE = 1e-14


@dataclass(frozen=True, slots=True)
class CostInstance:
    delta_p: Vec3
    velocity: Vec3
    acceleration: Vec3
    K: int
    lam: float

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not (self.lam > 0.0):
            raise ValueError("lam must be positive")

    @classmethod
    def from_estimate(cls, delta_p: Vec3, d: DisturbanceEstimate, K: int) -> "CostInstance":
        return cls(delta_p, d.velocity, d.acceleration, K, d.lam)


@dataclass(frozen=True, slots=True)
class CostBreakdown:
    alpha: float
    deltas: tuple[Vec3, ...]
    tracking_errors: tuple[Vec3, ...]
    total_cost: float


def _ideal_waypoints(inst: CostInstance) -> np.ndarray:
    """Target positions j*dp + j*v + 0.5*j^2*a for j = 1..K, shape (K, 3)."""
    dp = np.array(inst.delta_p.as_tuple())
    v = np.array(inst.velocity.as_tuple())
    a = np.array(inst.acceleration.as_tuple())
    j = np.arange(1, inst.K + 1)[:, None]
    return j * dp + j * v + 0.5 * j * j * a


def evaluate_cost(inst: CostInstance, alpha: float, deltas: list[Vec3] | tuple[Vec3, ...]) -> CostBreakdown:
    """Cost of an arbitrary candidate: 0.5 * sum_j |e_j|^2 + (lam/2) * sum_k |d_k|^2."""
    if len(deltas) != inst.K:
        raise ValueError(f"expected {inst.K} offsets, got {len(deltas)}")
    dp = np.array(inst.delta_p.as_tuple())
    dmat = np.array([d.as_tuple() for d in deltas])
    ideal = _ideal_waypoints(inst)
    sigma = np.cumsum(dmat, axis=0)
    j = np.arange(1, inst.K + 1)[:, None]
    errors = j * alpha * dp + sigma - ideal
    total = 0.5 * float(np.sum(errors * errors)) + 0.5 * inst.lam * float(np.sum(dmat * dmat))
    return CostBreakdown(
        alpha=float(alpha),
        deltas=tuple(deltas),
        tracking_errors=tuple(Vec3(float(row[0]), float(row[1]), float(row[2])) for row in errors),
        total_cost=total,
    )


def _normal_solve(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(H, g)
    except np.linalg.LinAlgError:
        return np.linalg.solve(H + _FALLBACK_RIDGE * np.eye(H.shape[0]), g)


def solve_joint(inst: CostInstance) -> CostBreakdown:
    """Unconstrained joint minimizer over (alpha, delta_0..delta_{K-1}).

    Builds the (3K+1)-dimensional symmetric positive-definite normal-equation
    system from the stationarity conditions and solves it by dense
    factorization. With e_j = j*alpha*dp + sum_{i<j} d_i - t_j:

        alpha row:   sum_j (j dp) . e_j = 0
        offset rows: sum_{j>k} e_j + lam d_k = 0
    """
    if inst.delta_p.norm() < EPSILON_NORM:
        raise ValueError("degenerate instance: plan delta has no direction")
    K = inst.K
    dp = np.array(inst.delta_p.as_tuple())
    ideal = _ideal_waypoints(inst)
    n = 1 + 3 * K
    H = np.zeros((n, n))
    g = np.zeros(n)
    j = np.arange(1, K + 1)
    tail = [float(j[i:].sum()) for i in range(K + 1)]  # tail[i] = sum of i+1..K
    H[0, 0] = float(np.sum(j * j)) * float(dp @ dp)
    g[0] = float(np.sum(j[:, None] * ideal * dp))
    eye = np.eye(3)
    for k in range(K):
        r = 1 + 3 * k
        H[0, r:r + 3] = tail[k] * dp
        H[r:r + 3, 0] = tail[k] * dp
        g[r:r + 3] = ideal[k:].sum(axis=0)
        for i in range(K):
            overlap = K - max(i, k)  # count of j exceeding both offsets' indices
            H[r:r + 3, 1 + 3 * i:4 + 3 * i] += overlap * eye
        H[r:r + 3, r:r + 3] += inst.lam * eye
    z = _normal_solve(H, g)
    alpha = float(z[0])
    deltas = tuple(Vec3(float(z[1 + 3 * k]), float(z[2 + 3 * k]), float(z[3 + 3 * k])) for k in range(K))
    return evaluate_cost(inst, alpha, deltas)


def solve_offsets_at_alpha(inst: CostInstance, alpha: float) -> CostBreakdown:
    """Minimize over the offsets only, with the pace factor externally fixed.

    This is the reference for clamped or overridden-pace comparisons, where
    the joint system's alpha row is replaced by the constraint alpha = const.
    """
    K = inst.K
    dp = np.array(inst.delta_p.as_tuple())
    j = np.arange(1, K + 1)[:, None]
    targets = _ideal_waypoints(inst) - j * alpha * dp
    n = 3 * K
    H = np.zeros((n, n))
    g = np.zeros(n)
    eye = np.eye(3)
    for k in range(K):
        g[3 * k:3 * k + 3] = targets[k:].sum(axis=0)
        for i in range(K):
            H[3 * k:3 * k + 3, 3 * i:3 * i + 3] = (K - max(i, k)) * eye
        H[3 * k:3 * k + 3, 3 * k:3 * k + 3] += inst.lam * eye
    z = _normal_solve(H, g)
    deltas = tuple(Vec3(float(z[3 * k]), float(z[3 * k + 1]), float(z[3 * k + 2])) for k in range(K))
    return evaluate_cost(inst, alpha, deltas)
