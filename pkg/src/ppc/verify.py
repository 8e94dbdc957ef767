"""Self-contained verification suites certifying the closed forms against the
brute-force solver and the exact identities.

Each family reports its worst deviation against a pinned tolerance. The
perturb flag is a harness self-check: it injects a small error into one
closed-form coefficient, and a healthy suite must then fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ZERO, DisturbanceEstimate, LatchConstants, Vec3, WrapperConfig
from .latch import LatchState
from .oracle import CostInstance, evaluate_cost, solve_joint, solve_offsets_at_alpha
from .pace import acceleration_coupling, compute_alpha, compute_k_exec
from .pipeline import GatesInput, correct_chunk
from .profiles import MAX_PROFILE_LENGTH, cosh_profile, fib_coefficient, fib_profile, fibonacci, lucas_coefficient, lucas_profile

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
LAMBDA_GRID = (0.25, 1.0, 4.0)


@dataclass(frozen=True, slots=True)
class FamilyResult:
    name: str
    cases: int
    max_deviation: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True, slots=True)
class VerificationReport:
    families: tuple[FamilyResult, ...]
    passed: bool

    def lines(self) -> list[str]:
        out = []
        for f in self.families:
            status = "pass" if f.passed else "FAIL"
            line = f"[{status}] {f.name}: {f.cases} cases, max deviation {f.max_deviation:.3e} (tol {f.tolerance:.1e})"
            if f.detail:
                line += f" {f.detail}"
            out.append(line)
        return out


def _family(name: str, dev: float, tol: float, cases: int, detail: str = "") -> FamilyResult:
    return FamilyResult(name=name, cases=cases, max_deviation=dev, tolerance=tol, passed=dev <= tol, detail=detail)


def _vec(arr) -> Vec3:
    return Vec3(float(arr[0]), float(arr[1]), float(arr[2]))


def _random_instance(rng, k_max: int, lam: float, with_accel: bool, antagonistic: bool = False) -> CostInstance:
    K = int(rng.integers(1, k_max + 1))
    nd = rng.uniform(1e-3, 0.1)
    dvec = rng.normal(size=3)
    dp = _vec(nd * dvec / np.linalg.norm(dvec))
    vdir = rng.normal(size=3)
    vdir = vdir / np.linalg.norm(vdir)
    if not antagonistic and float(np.dot(vdir, dp.as_tuple())) < 0.0:
        vdir = -vdir
    if antagonistic and float(np.dot(vdir, dp.as_tuple())) > 0.0:
        vdir = -vdir
    velocity = _vec(rng.uniform(0.0, 0.05) * vdir)
    acceleration = ZERO
    if with_accel:
        dp_hat = np.array(dp.as_tuple()) / nd
        araw = rng.normal(size=3)
        aperp = araw - float(araw @ dp_hat) * dp_hat
        aperp = aperp / np.linalg.norm(aperp) * rng.uniform(0.001, 0.02)
        acceleration = _vec(aperp)
    return CostInstance(dp, velocity, acceleration, K, lam)


def _closed_form(inst: CostInstance, perturb: bool = False):
    d = DisturbanceEstimate(velocity=inst.velocity, acceleration=inst.acceleration, lam=inst.lam)
    res = compute_alpha(inst.delta_p, d, inst.K)
    coeffs1 = list(fib_profile(inst.K)) if inst.lam == 1.0 else list(cosh_profile(inst.K, inst.lam))
    if perturb:
        coeffs1[0] += 1e-6
    coeffs2 = lucas_profile(inst.K)
    deltas = [res.a_perp.scaled(c1) + res.b_perp.scaled(c2) for c1, c2 in zip(coeffs1, coeffs2)]
    return res.alpha_star, deltas


def check_first_order_equivalence(trials: int, k_max: int, seed: int, perturb: bool = False) -> FamilyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(trials):
        inst = _random_instance(rng, k_max, LAMBDA_GRID[i % len(LAMBDA_GRID)], with_accel=False)
        ref = solve_joint(inst)
        alpha, deltas = _closed_form(inst, perturb=perturb)
        worst = max(worst, abs(ref.alpha - alpha))
        worst = max(worst, max((a - b).norm() for a, b in zip(ref.deltas, deltas)))
    return _family("first-order-equivalence", worst, 1e-8, trials)


def check_second_order_equivalence(trials: int, k_max: int, seed: int) -> FamilyResult:
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for _ in range(trials):
        inst = _random_instance(rng, k_max, 1.0, with_accel=True)
        ref = solve_joint(inst)
        alpha, deltas = _closed_form(inst)
        worst = max(worst, abs(ref.alpha - alpha))
        worst = max(worst, max((a - b).norm() for a, b in zip(ref.deltas, deltas)))
    return _family("second-order-equivalence", worst, 1e-8, trials, "(acceleration perpendicular to the plan)")


def check_clamped_equivalence(trials: int, k_max: int, seed: int) -> FamilyResult:
    """Antagonistic aggregates: pace pinned at 1, offsets against the reduced solve."""
    rng = np.random.default_rng(seed + 2)
    worst = 0.0
    for i in range(trials):
        lam = LAMBDA_GRID[i % len(LAMBDA_GRID)]
        inst = _random_instance(rng, k_max, lam, with_accel=lam == 1.0, antagonistic=True)
        d = DisturbanceEstimate(velocity=inst.velocity, acceleration=inst.acceleration, lam=lam)
        res = compute_alpha(inst.delta_p, d, inst.K)
        if not res.clamped:
            continue
        ref = solve_offsets_at_alpha(inst, 1.0)
        coeffs1 = fib_profile(inst.K) if lam == 1.0 else cosh_profile(inst.K, lam)
        coeffs2 = lucas_profile(inst.K)
        deltas = [res.a_perp.scaled(c1) + res.b_perp.scaled(c2) for c1, c2 in zip(coeffs1, coeffs2)]
        worst = max(worst, max((a - b).norm() for a, b in zip(ref.deltas, deltas)))
    return _family("clamped-equivalence", worst, 1e-8, trials)


def check_pace_only_alpha(trials: int, k_max: int, seed: int) -> FamilyResult:
    """The pace formula equals the scalar least-squares solution at zero offsets,
    for arbitrary acceleration directions including plan-parallel ones."""
    rng = np.random.default_rng(seed + 3)
    worst = 0.0
    for _ in range(trials):
        K = int(rng.integers(1, k_max + 1))
        nd = rng.uniform(1e-3, 0.1)
        dvec = rng.normal(size=3)
        dp = nd * dvec / np.linalg.norm(dvec)
        v = rng.normal(size=3) * 0.02
        a = rng.normal(size=3) * 0.01
        num = sum(j * float(dp @ (j * dp + j * v + 0.5 * j * j * a)) for j in range(1, K + 1))
        den = sum(j * j for j in range(1, K + 1)) * float(dp @ dp)
        scalar_alpha = num / den
        dp_hat = dp / nd
        closed = 1.0 + float(v @ dp_hat) / nd + acceleration_coupling(K) * float(a @ dp_hat) / nd
        worst = max(worst, abs(scalar_alpha - closed))
    return _family("pace-only-alpha", worst, 1e-10, trials)


def check_alpha_lambda_independence(trials: int, k_max: int, seed: int) -> FamilyResult:
    rng = np.random.default_rng(seed + 4)
    worst = 0.0
    for _ in range(trials):
        inst = _random_instance(rng, k_max, 1.0, with_accel=False)
        alphas = [solve_joint(replace(inst, lam=lam)).alpha for lam in (0.1, 1.0, 10.0)]
        worst = max(worst, max(alphas) - min(alphas))
    return _family("alpha-lambda-independence", worst, 1e-9, trials)


def check_cost_minimality(trials: int, k_max: int, seed: int) -> FamilyResult:
    """The oracle solution never loses to random perturbations of itself."""
    rng = np.random.default_rng(seed + 5)
    worst = 0.0
    for _ in range(trials):
        inst = _random_instance(rng, k_max, 1.0, with_accel=True)
        ref = solve_joint(inst)
        for _ in range(10):
            alpha = float(ref.alpha + rng.uniform(-1e-3, 1e-3))
            deltas = [d + _vec(rng.uniform(-1e-5, 1e-5, size=3)) for d in ref.deltas]
            trial_cost = evaluate_cost(inst, alpha, deltas).total_cost
            worst = max(worst, ref.total_cost - trial_cost)
    return _family("cost-minimality", worst, 1e-12, trials, "(signed: positive means a perturbation won)")


def check_profile_identities() -> FamilyResult:
    worst = 0.0
    for K in range(1, MAX_PROFILE_LENGTH + 1):
        fibs = fib_profile(K)
        coshs = cosh_profile(K, 1.0)
        worst = max(worst, max(abs(f - c) for f, c in zip(fibs, coshs)))
        worst = max(worst, abs(fib_coefficient(K, K)))
        worst = max(worst, abs(lucas_coefficient(K, K)))
        if any(fibs[i] <= fibs[i + 1] for i in range(K - 1)):
            worst = max(worst, 1.0)
        if any(not (0.0 < f < 1.0) for f in fibs):
            worst = max(worst, 1.0)
    return _family("profile-identities", worst, 1e-12, MAX_PROFILE_LENGTH)


def check_profile_limits() -> FamilyResult:
    worst = 0.0
    for K in (1, 4, 8, 16):
        if min(cosh_profile(K, 1e-8)) <= 0.999:
            worst = max(worst, 1.0)
        if max(cosh_profile(K, 1e8)) >= 1e-3:
            worst = max(worst, 1.0)
    worst = max(worst, abs(fib_profile(16)[-1] - 0.618034))
    return _family("profile-limits", worst, 1e-3, 9)


def check_fibonacci_ratio_limit() -> FamilyResult:
    dev = abs(fibonacci(31) / fibonacci(33) - GOLDEN_RATIO ** -2)
    return _family("fibonacci-ratio-limit", dev, 1e-6, 1)


def check_stationarity_residual() -> FamilyResult:
    """lam * d_k + sum_{j>k} e_j vanishes under the offset profiles."""
    worst = 0.0
    for lam in LAMBDA_GRID:
        for K in range(1, MAX_PROFILE_LENGTH + 1):
            coeffs = fib_profile(K) if lam == 1.0 else cosh_profile(K, lam)
            sigma = 0.0
            e = [0.0]
            for k in range(1, K + 1):
                sigma += coeffs[k - 1]
                e.append(-k + sigma)
            for k in range(K):
                worst = max(worst, abs(lam * coeffs[k] + sum(e[k + 1:])))
    return _family("stationarity-residual", worst, 1e-10, 3 * MAX_PROFILE_LENGTH)


def check_identity_bit_exactness() -> FamilyResult:
    cfg = WrapperConfig()
    from .sim import FollowerParams, query_follower

    chunk = query_follower(Vec3(0.0, -0.2, 0.12), Vec3(0.0, 0.0, 0.05), FollowerParams(), cfg.T, cfg.c_pd)
    latch = LatchState.fresh(cfg)
    out = correct_chunk(chunk, DisturbanceEstimate(), Vec3(0.005, 0.0, 0.0), latch, GatesInput(), cfg)
    same = all(a is b or a == b for a, b in zip(out.corrected_steps, chunk.steps[: out.k_exec]))
    dev = 0.0 if (same and out.alpha_star == 1.0) else 1.0
    return _family("identity-bit-exactness", dev, 0.0, 1)


def check_k_exec_bounds(trials: int, seed: int) -> FamilyResult:
    rng = np.random.default_rng(seed + 6)
    cfg = WrapperConfig()
    dev = 0.0
    for _ in range(trials):
        alpha = float(rng.uniform(1.0, 20.0))
        fired = bool(rng.integers(0, 2))
        k = compute_k_exec(alpha, cfg, fired)
        if not (cfg.K <= k <= min(cfg.T, cfg.H_eff)):
            dev = 1.0
        if fired and k > max(cfg.T // 4, cfg.K):
            dev = 1.0
    return _family("k-exec-bounds", dev, 0.0, trials)


def check_latch_two_chunk_sustain() -> FamilyResult:
    """Held at standard decay, one trigger keeps the gate up for exactly two updates."""
    dev = 0.0
    for beta_in in (0.05, 0.1, 0.3, 0.5, 0.7, 0.9):
        decay = 1.0 - beta_in
        consts = LatchConstants(beta_in=beta_in, beta_out=0.0, l_th=decay * (decay * beta_in), r_th=decay * (decay * beta_in))
        latch = LatchState(constants=consts)
        fired = [latch.update(True)] + [latch.update(False) for _ in range(5)]
        if fired[:2] != [True, True] or any(fired[2:]):
            dev = 1.0
    return _family("latch-two-chunk-sustain", dev, 0.0, 6)


def run_verification(
    trials: int = 1000,
    k_max: int = 8,
    seed: int = 0,
    perturb: bool = False,
) -> VerificationReport:
    families = (
        check_profile_identities(),
        check_profile_limits(),
        check_fibonacci_ratio_limit(),
        check_stationarity_residual(),
        check_first_order_equivalence(trials, k_max, seed, perturb=perturb),
        check_second_order_equivalence(trials, k_max, seed),
        check_clamped_equivalence(max(trials // 2, 1), k_max, seed),
        check_pace_only_alpha(max(trials // 2, 1), k_max, seed),
        check_alpha_lambda_independence(max(trials // 5, 1), k_max, seed),
        check_cost_minimality(max(trials // 10, 1), k_max, seed),
        check_identity_bit_exactness(),
        check_k_exec_bounds(200, seed),
        check_latch_two_chunk_sustain(),
    )
    return VerificationReport(families=families, passed=all(f.passed for f in families))
