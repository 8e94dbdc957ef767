import math

import mpmath
import pytest

from ppc.core import ZERO, Vec3
from ppc.pace import ResidualDecomposition
from ppc.profiles import (
    MAX_PROFILE_LENGTH,
    compute_offsets,
    cosh_profile,
    fib_coefficient,
    fib_profile,
    fibonacci,
    lucas,
    lucas_coefficient,
    lucas_profile,
)

GOLDEN = (1 + math.sqrt(5)) / 2


class TestIntegerSequences:
    def test_fibonacci_values(self):
        assert [fibonacci(n) for n in range(10)] == [0, 1, 1, 2, 3, 5, 8, 13, 21, 34]
        assert fibonacci(33) == 3524578
        assert fibonacci(90) == 2880067194370816120

    def test_fibonacci_range_guard(self):
        with pytest.raises(ValueError):
            fibonacci(91)
        with pytest.raises(ValueError):
            fibonacci(-1)

    def test_lucas_values(self):
        assert [lucas(n) for n in range(8)] == [2, 1, 3, 4, 7, 11, 18, 29]

    def test_lucas_range_guard(self):
        with pytest.raises(ValueError):
            lucas(90)
        with pytest.raises(ValueError):
            lucas(-1)

    def test_binet_cross_check(self):
        sqrt5 = math.sqrt(5.0)
        for n in range(0, 61):
            assert fibonacci(n) == round(GOLDEN ** n / sqrt5)


class TestFibProfile:
    def test_window_two(self):
        # 1 - F3/F5 = 1 - 2/5; the boxed coefficient formula with standard
        # Fibonacci indexing (F3 = 2) gives [0.8, 0.6].
        assert fib_profile(2) == [0.8, 0.6]

    def test_window_one(self):
        assert fib_profile(1) == [0.5]

    def test_strictly_decreasing_in_unit_interval(self):
        for K in range(1, MAX_PROFILE_LENGTH + 1):
            prof = fib_profile(K)
            assert all(0.0 < c < 1.0 for c in prof)
            assert all(a > b for a, b in zip(prof, prof[1:]))

    def test_boundary_coefficient_exactly_zero(self):
        for K in range(1, MAX_PROFILE_LENGTH + 1):
            assert fib_coefficient(K, K) == 0.0

    def test_last_coefficient_approaches_inverse_golden(self):
        assert fib_profile(16)[-1] == pytest.approx(0.618034, abs=1e-3)
        assert fibonacci(31) / fibonacci(33) == pytest.approx(GOLDEN ** -2, abs=1e-6)

    def test_length_guard(self):
        with pytest.raises(ValueError):
            fib_profile(0)
        with pytest.raises(ValueError):
            fib_profile(17)


class TestCoshProfile:
    def test_unit_regularizer_matches_fibonacci(self):
        for K in range(1, MAX_PROFILE_LENGTH + 1):
            for f, c in zip(fib_profile(K), cosh_profile(K, 1.0)):
                assert f == pytest.approx(c, abs=1e-12)

    def test_vanishing_regularizer_full_compensation(self):
        for K in (1, 4, 8, 16):
            assert min(cosh_profile(K, 1e-8)) > 0.999

    def test_large_regularizer_suppresses_offsets(self):
        for K in (1, 4, 8, 16):
            assert max(cosh_profile(K, 1e8)) < 1e-3

    def test_rejects_nonpositive_regularizer(self):
        with pytest.raises(ValueError):
            cosh_profile(4, 0.0)
        with pytest.raises(ValueError):
            cosh_profile(4, -1.0)

    def test_log_space_branch_matches_high_precision(self):
        # lam small enough to push (K + 1/2) w beyond the overflow switch.
        lam = 1e-4
        K = 16
        got = cosh_profile(K, lam)
        with mpmath.workdps(60):
            w = mpmath.acosh(1 + mpmath.mpf(1) / (2 * mpmath.mpf(lam)))
            den = mpmath.cosh((K + mpmath.mpf(1) / 2) * w)
            want = [float(1 - mpmath.cosh((k + mpmath.mpf(1) / 2) * w) / den) for k in range(K)]
        for g, w_ in zip(got, want):
            assert g == pytest.approx(w_, rel=1e-12, abs=1e-15)

    def test_stationarity_under_general_regularizer(self):
        # lam * d_k + sum_{j > k} e_j = 0 for the scalar unit disturbance.
        for lam in (0.25, 1.0, 4.0):
            for K in range(1, MAX_PROFILE_LENGTH + 1):
                coeffs = cosh_profile(K, lam)
                sigma = 0.0
                errors = [0.0]
                for j in range(1, K + 1):
                    sigma += coeffs[j - 1]
                    errors.append(-j + sigma)
                for k in range(K):
                    residual = lam * coeffs[k] + sum(errors[k + 1:])
                    assert residual == pytest.approx(0.0, abs=1e-10)


class TestLucasProfile:
    def test_window_two(self):
        assert lucas_profile(2) == [1.2, 1.4]

    def test_window_three(self):
        assert lucas_profile(3) == pytest.approx([22 / 13, 31 / 13, 32 / 13], rel=1e-15)

    def test_boundary_value_exactly_zero(self):
        for K in range(1, MAX_PROFILE_LENGTH + 1):
            assert lucas_coefficient(K, K) == 0.0

    def test_quadratic_forcing_stationarity(self):
        # With d_k = Lambda_k * B the unit-regularizer system
        # d_k + sum_{j>k} (sigma_j - j^2 B) = 0 must close.
        for K in range(1, MAX_PROFILE_LENGTH + 1):
            coeffs = lucas_profile(K)
            sigma = 0.0
            errors = [0.0]
            for j in range(1, K + 1):
                sigma += coeffs[j - 1]
                errors.append(-float(j * j) + sigma)
            for k in range(K):
                assert coeffs[k] + sum(errors[k + 1:]) == pytest.approx(0.0, abs=1e-9)


class TestComputeOffsets:
    def test_first_order_scaling(self):
        res = ResidualDecomposition(1.0, Vec3(0.0, 0.01, 0.0), ZERO)
        prof = compute_offsets(res, K=2, lam=1.0)
        assert prof.coefficients_second is None
        assert prof.offsets[0].y == pytest.approx(0.008, rel=1e-12)
        assert prof.offsets[1].y == pytest.approx(0.006, rel=1e-12)
        assert prof.offsets[0].x == 0.0 and prof.offsets[0].z == 0.0

    def test_zero_residuals_bit_zero(self):
        res = ResidualDecomposition(1.0, ZERO, ZERO)
        prof = compute_offsets(res, K=4, lam=1.0)
        assert prof.is_zero()
        assert all(d is ZERO for d in prof.offsets)

    def test_second_order_branch(self):
        res = ResidualDecomposition(1.0, ZERO, Vec3(0.0, 0.0, 0.005))
        prof = compute_offsets(res, K=2, lam=1.0)
        assert prof.coefficients_second == (1.2, 1.4)
        assert prof.offsets[0].z == pytest.approx(0.006, rel=1e-12)
        assert prof.offsets[1].z == pytest.approx(0.007, rel=1e-12)

    def test_mixed_regularizer_flagged(self):
        res = ResidualDecomposition(1.0, ZERO, Vec3(0.0, 0.0, 0.005))
        assert compute_offsets(res, K=2, lam=1.0).mixed_regularizer is False
        assert compute_offsets(res, K=2, lam=2.0).mixed_regularizer is True
        first_order = ResidualDecomposition(1.0, Vec3(0.01, 0, 0), ZERO)
        assert compute_offsets(first_order, K=2, lam=2.0).mixed_regularizer is False

    def test_general_regularizer_uses_cosh(self):
        res = ResidualDecomposition(1.0, Vec3(0.01, 0.0, 0.0), ZERO)
        prof = compute_offsets(res, K=3, lam=4.0)
        expected = cosh_profile(3, 4.0)
        for off, c in zip(prof.offsets, expected):
            assert off.x == pytest.approx(0.01 * c, rel=1e-12)
