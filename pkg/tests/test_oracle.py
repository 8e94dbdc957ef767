import numpy as np
import pytest

from ppc.core import ZERO, DisturbanceEstimate, Vec3
from ppc.oracle import CostInstance, evaluate_cost, solve_joint, solve_offsets_at_alpha
from ppc.pace import compute_alpha, residuals_at_alpha
from ppc.profiles import cosh_profile, fib_profile, lucas_profile


def _closed_deltas(res, K, lam):
    c1 = fib_profile(K) if lam == 1.0 else cosh_profile(K, lam)
    c2 = lucas_profile(K)
    return [res.a_perp.scaled(a) + res.b_perp.scaled(b) for a, b in zip(c1, c2)]


class TestEvaluateCost:
    def test_perfect_tracking_costs_nothing(self):
        inst = CostInstance(Vec3(0.01, 0, 0), ZERO, ZERO, K=2, lam=1.0)
        out = evaluate_cost(inst, 1.0, [ZERO, ZERO])
        assert out.total_cost == 0.0
        assert all(e.is_zero() for e in out.tracking_errors)

    def test_hand_summed_example(self):
        # Uncorrected perpendicular drift: e_1 = 0.01, e_2 = 0.02 in y.
        inst = CostInstance(Vec3(0.01, 0, 0), Vec3(0, 0.01, 0), ZERO, K=2, lam=1.0)
        out = evaluate_cost(inst, 1.0, [ZERO, ZERO])
        assert out.total_cost == pytest.approx(2.5e-4, rel=1e-12)
        assert out.tracking_errors[0].y == pytest.approx(-0.01)
        assert out.tracking_errors[1].y == pytest.approx(-0.02)

    def test_effort_term_weighted_by_regularizer(self):
        inst = CostInstance(Vec3(0.01, 0, 0), ZERO, ZERO, K=1, lam=4.0)
        d = Vec3(0.0, 0.003, 0.0)
        out = evaluate_cost(inst, 1.0, [d])
        # e_1 = d, so cost = 0.5 * |d|^2 + 2 * |d|^2
        assert out.total_cost == pytest.approx(0.5 * d.norm_sq() + 2.0 * d.norm_sq(), rel=1e-12)

    def test_length_contract(self):
        inst = CostInstance(Vec3(0.01, 0, 0), ZERO, ZERO, K=2, lam=1.0)
        with pytest.raises(ValueError):
            evaluate_cost(inst, 1.0, [ZERO])

    def test_instance_validation(self):
        with pytest.raises(ValueError):
            CostInstance(Vec3(0.01, 0, 0), ZERO, ZERO, K=0, lam=1.0)
        with pytest.raises(ValueError):
            CostInstance(Vec3(0.01, 0, 0), ZERO, ZERO, K=2, lam=0.0)


class TestSolveJoint:
    def test_no_disturbance(self):
        inst = CostInstance(Vec3(0.01, 0, 0), ZERO, ZERO, K=3, lam=1.0)
        out = solve_joint(inst)
        assert out.alpha == pytest.approx(1.0, abs=1e-12)
        assert all(d.norm() < 1e-12 for d in out.deltas)
        assert out.total_cost == pytest.approx(0.0, abs=1e-20)

    def test_parallel_disturbance_absorbed_by_pace(self):
        inst = CostInstance(Vec3(0.01, 0, 0), Vec3(0.01, 0, 0), ZERO, K=2, lam=1.0)
        out = solve_joint(inst)
        assert out.alpha == pytest.approx(2.0, abs=1e-10)
        assert all(d.norm() < 1e-10 for d in out.deltas)

    def test_perpendicular_disturbance_takes_offset_profile(self):
        inst = CostInstance(Vec3(0.01, 0, 0), Vec3(0, 0.01, 0), ZERO, K=2, lam=1.0)
        out = solve_joint(inst)
        assert out.alpha == pytest.approx(1.0, abs=1e-10)
        assert out.deltas[0].y == pytest.approx(0.008, abs=1e-12)
        assert out.deltas[1].y == pytest.approx(0.006, abs=1e-12)

    def test_degenerate_plan_rejected(self):
        with pytest.raises(ValueError):
            solve_joint(CostInstance(ZERO, Vec3(0.01, 0, 0), ZERO, K=2, lam=1.0))

    def test_first_order_equivalence(self):
        rng = np.random.default_rng(11)
        worst = 0.0
        for i in range(300):
            K = int(rng.integers(1, 9))
            lam = (0.25, 1.0, 4.0)[i % 3]
            inst = _random_instance(rng, K, lam, accel=False)
            res = compute_alpha(inst.delta_p, DisturbanceEstimate(inst.velocity, inst.acceleration, lam), K)
            ref = solve_joint(inst)
            worst = max(worst, abs(ref.alpha - res.alpha_star))
            for got, want in zip(_closed_deltas(res, K, lam), ref.deltas):
                worst = max(worst, (got - want).norm())
        assert worst <= 1e-8

    def test_second_order_equivalence_perpendicular_acceleration(self):
        rng = np.random.default_rng(12)
        worst = 0.0
        for _ in range(300):
            K = int(rng.integers(1, 9))
            inst = _random_instance(rng, K, 1.0, accel=True)
            res = compute_alpha(inst.delta_p, DisturbanceEstimate(inst.velocity, inst.acceleration, 1.0), K)
            ref = solve_joint(inst)
            worst = max(worst, abs(ref.alpha - res.alpha_star))
            for got, want in zip(_closed_deltas(res, K, 1.0), ref.deltas):
                worst = max(worst, (got - want).norm())
        assert worst <= 1e-8

    def test_alpha_independent_of_regularizer(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            inst = _random_instance(rng, int(rng.integers(1, 9)), 1.0, accel=False)
            alphas = [
                solve_joint(CostInstance(inst.delta_p, inst.velocity, inst.acceleration, inst.K, lam)).alpha
                for lam in (0.1, 1.0, 10.0)
            ]
            assert max(alphas) - min(alphas) <= 1e-9

    def test_oracle_beats_perturbations(self):
        rng = np.random.default_rng(14)
        inst = _random_instance(rng, 4, 1.0, accel=True)
        ref = solve_joint(inst)
        for _ in range(100):
            alpha = ref.alpha + rng.uniform(-1e-3, 1e-3)
            deltas = [d + Vec3(*(rng.uniform(-1e-5, 1e-5, size=3))) for d in ref.deltas]
            assert evaluate_cost(inst, alpha, deltas).total_cost >= ref.total_cost - 1e-15

    def test_parallel_acceleration_exceeds_pace_only_formula(self):
        # With plan-parallel acceleration, the boxed pace formula is the
        # stationary point at zero offsets; the joint optimum couples alpha to
        # small parallel offsets. For K = 2 and unit regularizer the exact
        # joint coefficient is 13/14 instead of 9/10.
        inst = CostInstance(Vec3(0.01, 0, 0), ZERO, Vec3(0.02, 0, 0), K=2, lam=1.0)
        out = solve_joint(inst)
        assert out.alpha == pytest.approx(1.0 + (13.0 / 7.0), rel=1e-10)
        assert out.deltas[0].x == pytest.approx(-2.0 / 7.0 * 0.01, rel=1e-9)
        assert out.deltas[1].x == pytest.approx(2.0 / 7.0 * 0.01, rel=1e-9)
        res = compute_alpha(inst.delta_p, DisturbanceEstimate(inst.velocity, inst.acceleration, 1.0), 2)
        assert res.alpha_star == pytest.approx(2.8, rel=1e-12)
        closed_cost = evaluate_cost(inst, res.alpha_star, _closed_deltas(res, 2, 1.0)).total_cost
        assert closed_cost >= out.total_cost


class TestSolveOffsetsAtAlpha:
    def test_matches_profiles_on_full_residuals(self):
        rng = np.random.default_rng(15)
        for i in range(100):
            K = int(rng.integers(1, 9))
            lam = (0.25, 1.0, 4.0)[i % 3]
            accel = lam == 1.0
            inst = _random_instance(rng, K, lam, accel=accel, any_direction=True)
            d = DisturbanceEstimate(inst.velocity, inst.acceleration, lam)
            res = residuals_at_alpha(inst.delta_p, d, 1.0)
            ref = solve_offsets_at_alpha(inst, 1.0)
            for got, want in zip(_closed_deltas(res, K, lam), ref.deltas):
                assert (got - want).norm() <= 1e-8

    def test_fixed_alpha_two(self):
        inst = CostInstance(Vec3(0.01, 0, 0), Vec3(0.03, 0.01, 0), ZERO, K=2, lam=1.0)
        ref = solve_offsets_at_alpha(inst, 2.0)
        res = residuals_at_alpha(inst.delta_p, DisturbanceEstimate(inst.velocity, inst.acceleration, 1.0), 2.0)
        for got, want in zip(_closed_deltas(res, 2, 1.0), ref.deltas):
            assert (got - want).norm() <= 1e-12


def _random_instance(rng, K, lam, accel, any_direction=False):
    nd = rng.uniform(1e-3, 0.1)
    dvec = rng.normal(size=3)
    dp = Vec3(*(nd * dvec / np.linalg.norm(dvec)))
    vdir = rng.normal(size=3)
    vdir = vdir / np.linalg.norm(vdir)
    if not any_direction and float(np.dot(vdir, dp.as_tuple())) < 0:
        vdir = -vdir
    velocity = Vec3(*(rng.uniform(0.0, 0.05) * vdir))
    acceleration = ZERO
    if accel:
        dp_hat = np.array(dp.as_tuple()) / nd
        araw = rng.normal(size=3)
        if any_direction:
            avec = araw / np.linalg.norm(araw) * rng.uniform(0.001, 0.02)
        else:
            aperp = araw - float(araw @ dp_hat) * dp_hat
            avec = aperp / np.linalg.norm(aperp) * rng.uniform(0.001, 0.02)
        acceleration = Vec3(*avec)
    return CostInstance(dp, velocity, acceleration, K, lam)
