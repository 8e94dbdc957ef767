"""Closed-form per-step offset profiles.

The per-step spatial offsets that null the effort-regularized tracking
stationarity form a two-term linear recurrence on the golden-ratio
eigenstructure. Coefficients are assembled from exact integer Fibonacci and
Lucas values and divided once in double precision, so boundary identities
(zero implied offset at k = K) hold exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ZERO, Vec3
from .pace import ResidualDecomposition

#: Largest Fibonacci index guaranteed exact in 64-bit integer arithmetic.
MAX_FIBONACCI_INDEX = 90
#: Largest Lucas index under the same 64-bit guarantee.
MAX_LUCAS_INDEX = 89
#: Longest supported profile; indices reach 2 * K + 1 = 33.
MAX_PROFILE_LENGTH = 16
#: Switch the cosh ratio to log-space evaluation beyond this argument.
_LOG_COSH_SWITCH = 30.0


def fibonacci(n: int) -> int:
    """Exact F_n with F_0 = 0, F_1 = 1."""
    if n < 0:
        raise ValueError("index must be nonnegative")
    if n > MAX_FIBONACCI_INDEX:
        raise ValueError(f"index {n} exceeds the 64-bit exact range ({MAX_FIBONACCI_INDEX})")
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def lucas(n: int) -> int:
    """Exact L_n with L_0 = 2, L_1 = 1."""
    if n < 0:
        raise ValueError("index must be nonnegative")
    if n > MAX_LUCAS_INDEX:
        raise ValueError(f"index {n} exceeds the 64-bit exact range ({MAX_LUCAS_INDEX})")
    a, b = 2, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def _check_profile_length(K: int) -> None:
    if not (1 <= K <= MAX_PROFILE_LENGTH):
        raise ValueError(f"profile length must lie in 1..{MAX_PROFILE_LENGTH}, got {K}")


def fib_coefficient(k: int, K: int) -> float:
    """First-order coefficient 1 - F_{2k+1} / F_{2K+1}, exact at k = K."""
    den = fibonacci(2 * K + 1)
    return (den - fibonacci(2 * k + 1)) / den


def fib_profile(K: int) -> list[float]:
    """First-order offset coefficients for k = 0..K-1."""
    _check_profile_length(K)
    den = fibonacci(2 * K + 1)
    num = [fibonacci(2 * k + 1) for k in range(K)]
    return [(den - n) / den for n in num]


def lucas_coefficient(k: int, K: int) -> float:
    """Second-order coefficient; the numerator is exact-integer so the implied
    k = K boundary value is exactly zero."""
    den = fibonacci(2 * K + 1)
    num = ((2 * k + 1) - lucas(2 * k + 1)) * den + fibonacci(2 * k + 1) * (
        lucas(2 * K + 1) - (2 * K + 1)
    )
    return num / den


def lucas_profile(K: int) -> list[float]:
    """Second-order (quadratic-forcing) offset coefficients for k = 0..K-1."""
    _check_profile_length(K)
    return [lucas_coefficient(k, K) for k in range(K)]


def _log_cosh(x: float) -> float:
    """log(cosh(x)) for x >= 0 without overflow."""
    return x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)


def cosh_profile(K: int, lam: float) -> list[float]:
    """General-regularizer offset coefficients 1 - cosh((k+1/2)w) / cosh((K+1/2)w)
    with w = arccosh(1 + 1/(2 lam)). Reduces to the Fibonacci profile at lam = 1."""
    if not (lam > 0.0):
        raise ValueError(f"regularizer must be positive, got {lam}")
    _check_profile_length(K)
    w = math.acosh(1.0 + 0.5 / lam)
    top = (K + 0.5) * w
    if top > _LOG_COSH_SWITCH:
        log_den = _log_cosh(top)
        return [1.0 - math.exp(_log_cosh((k + 0.5) * w) - log_den) for k in range(K)]
    den = math.cosh(top)
    return [1.0 - math.cosh((k + 0.5) * w) / den for k in range(K)]


@dataclass(frozen=True, slots=True)
class OffsetProfile:
    """Per-step offsets plus the coefficient vectors that produced them.

    mixed_regularizer marks the one combination outside the derived regime:
    a live second-order branch under a non-unit regularizer, where the Lucas
    coefficients are applied unchanged.
    """

    coefficients_first: tuple[float, ...]
    coefficients_second: tuple[float, ...] | None
    offsets: tuple[Vec3, ...]
    mixed_regularizer: bool = False

    def is_zero(self) -> bool:
        return all(d.is_zero() for d in self.offsets)


def compute_offsets(res: ResidualDecomposition, K: int, lam: float) -> OffsetProfile:
    """Assemble per-step offsets for the perpendicular residuals over a window
    of K executed steps.

    The second-order coefficients are derived at unit regularizer; they are
    applied unchanged for any lam (flagged via mixed_regularizer), which the
    brute-force solver covers for the lam = 1 case only.
    """
    first = tuple(fib_profile(K)) if lam == 1.0 else tuple(cosh_profile(K, lam))
    a, b = res.a_perp, res.b_perp
    if b.is_zero():
        second = None
        if a.is_zero():
            offsets = tuple([ZERO] * K)
        else:
            offsets = tuple(a.scaled(c) for c in first)
    else:
        second = tuple(lucas_profile(K))
        offsets = tuple(a.scaled(c1) + b.scaled(c2) for c1, c2 in zip(first, second))
    return OffsetProfile(
        coefficients_first=first,
        coefficients_second=second,
        offsets=offsets,
        mixed_regularizer=second is not None and lam != 1.0,
    )
