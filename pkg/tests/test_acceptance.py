"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its measured margin.

Criterion 3 pins the two-step offset profile to [0.8, 0.4]. That expectation
is internally inconsistent: the generating recurrence, the hyperbolic-cosine
form at unit regularizer, the golden-ratio limit, and the brute-force solver
all give [0.8, 0.6] (the second coefficient is 1 - F_3/F_5 with F_3 = 2).
The criterion is asserted as stated and is expected to fail; see the README.
"""

import time

import pytest

from ppc.cli import main as cli_main
from ppc.core import WrapperConfig, derive_latch_constants, LatchConstants
from ppc.latch import LatchState
from ppc.profiles import cosh_profile, fib_profile, fib_coefficient, lucas_coefficient
from ppc.runner import RunSpec, run_batch, run_bench, run_sweep, _rate
from ppc.sim import EpisodeConfig, run_episode
from ppc.verify import (
    check_first_order_equivalence,
    check_second_order_equivalence,
)


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:02d}: {detail}")


@pytest.fixture(scope="module")
def paired_batch():
    """100 seed-paired episodes per regime, shared across behavioral criteria."""
    spec = RunSpec(trials=100)
    start = time.perf_counter()
    rows = run_batch(spec)
    elapsed = time.perf_counter() - start
    return spec, rows, elapsed


def test_criterion_01_first_order_oracle_equivalence():
    start = time.perf_counter()
    result = check_first_order_equivalence(trials=1000, k_max=8, seed=0)
    elapsed = time.perf_counter() - start
    ok = result.passed and elapsed < 10.0
    _report(1, ok, f"first-order equivalence max dev {result.max_deviation:.2e} "
                   f"(tol 1e-8) over {result.cases} instances in {elapsed:.1f}s")
    assert result.passed
    assert elapsed < 10.0


def test_criterion_02_second_order_oracle_equivalence():
    result = check_second_order_equivalence(trials=1000, k_max=8, seed=0)
    _report(2, result.passed, f"second-order equivalence max dev {result.max_deviation:.2e} "
                              f"(tol 1e-8) over {result.cases} instances")
    assert result.passed


def test_criterion_03_two_step_profile_exactness():
    profile = fib_profile(2)
    stated = [0.8, 0.4]
    ok = profile == stated
    _report(3, ok, f"two-step profile {profile}; stated expectation {stated}")
    assert profile == stated, (
        f"profile is {profile}: the second coefficient is 1 - F_3/F_5 = 3/5 "
        "(F_3 = 2); the stated 0.4 would require F_3 = 3, which contradicts "
        "the recurrence, the cosh form, and the quadratic-program oracle"
    )


def test_criterion_04_cosh_matches_fibonacci_and_limits():
    worst = max(
        abs(f - c)
        for K in range(1, 17)
        for f, c in zip(fib_profile(K), cosh_profile(K, 1.0))
    )
    low_ok = all(min(cosh_profile(K, 1e-8)) > 0.999 for K in (1, 4, 8, 16))
    high_ok = all(max(cosh_profile(K, 1e8)) < 1e-3 for K in (1, 4, 8, 16))
    ok = worst <= 1e-12 and low_ok and high_ok
    _report(4, ok, f"cosh vs fibonacci max dev {worst:.2e} (tol 1e-12); "
                   f"limits low={low_ok} high={high_ok}")
    assert ok


def test_criterion_05_boundary_identities():
    fib_zero = all(fib_coefficient(K, K) == 0.0 for K in range(1, 17))
    lucas_zero = all(lucas_coefficient(K, K) == 0.0 for K in range(1, 17))
    tail = fib_profile(16)[-1]
    tail_ok = abs(tail - 0.618) <= 1e-3
    ok = fib_zero and lucas_zero and tail_ok
    _report(5, ok, f"boundary coefficients exact-zero: first={fib_zero} second={lucas_zero}; "
                   f"K=16 tail {tail:.6f} within 1e-3 of 0.618")
    assert ok


def test_criterion_06_latch_constants_and_sustain():
    lc = derive_latch_constants(WrapperConfig())
    beta_ok = abs(lc.beta_out - 0.0830) <= 1e-4
    lth_ok = abs(lc.l_th - 0.147) <= 1e-12

    decay = 1.0 - 0.3
    standard = LatchState(
        constants=LatchConstants(beta_in=0.3, beta_out=0.0, l_th=decay * (decay * 0.3), r_th=decay * (decay * 0.3))
    )
    fired = [standard.update(True)] + [standard.update(False) for _ in range(5)]
    sustain_ok = fired[:2] == [True, True] and not any(fired[2:])

    def run_pattern(taus):
        latch = LatchState.fresh(WrapperConfig())
        return [latch.update(t) for t in taus]

    stable = not any(run_pattern([False] * 40))
    single = run_pattern([True] + [False] * 39)
    single_run = next(i for i, f in enumerate(single) if not f)
    single_ok = single[0] and 2 <= single_run <= 6 and not any(single[single_run:])
    chronic = all(run_pattern([True] * 40))
    periodic = run_pattern([(t % 10 == 0) for t in range(120)])[20:]
    periodic_ok = any(periodic) and not all(periodic)
    table_ok = stable and single_ok and chronic and periodic_ok

    ok = beta_ok and lth_ok and sustain_ok and table_ok
    _report(6, ok, f"beta_out {lc.beta_out:.6f} (|d|<=1e-4 of 0.0830), L_th {lc.l_th!r}, "
                   f"two-chunk sustain {sustain_ok}, regime table {table_ok}")
    assert ok


def test_criterion_07_identity_under_stasis(paired_batch):
    from ppc.core import DisturbanceEstimate, Vec3
    from ppc.pipeline import GatesInput, correct_chunk
    from ppc.sim import FollowerParams, query_follower

    cfg = WrapperConfig()
    chunk = query_follower(Vec3(0, -0.2, 0.12), Vec3(0.05, 0.0, 0.05), FollowerParams(), cfg.T, cfg.c_pd)
    out = correct_chunk(chunk, DisturbanceEstimate(), Vec3(0.01, 0, 0), LatchState.fresh(cfg), GatesInput(), cfg)
    bit_equal = out.corrected_steps == chunk.steps[: out.k_exec] and all(
        a is b for a, b in zip(out.corrected_steps, chunk.steps)
    )

    traces_ok = True
    for seed in range(100):
        on = run_episode(EpisodeConfig(regime="static", seed=seed, ppc_enabled=True))
        off = run_episode(EpisodeConfig(regime="static", seed=seed, ppc_enabled=False))
        if on.ticks != off.ticks:
            traces_ok = False
            break
    ok = bit_equal and traces_ok
    _report(7, ok, f"zero-disturbance chunk bit-equal {bit_equal}; "
                   f"static traces identical over 100 paired seeds {traces_ok}")
    assert ok


def test_criterion_08_behavioral_improvement(paired_batch):
    spec, rows, elapsed = paired_batch
    lines = []
    all_nonneg = True
    deltas = {}
    for regime in spec.regimes:
        sub = [r for r in rows if r.regime == regime]
        base, ppc = _rate(sub, False), _rate(sub, True)
        deltas[regime] = ppc - base
        all_nonneg &= ppc >= base
        lines.append(f"{regime}:{ppc - base:+.2f}")
    hard_ok = deltas["uniform_hard"] >= 0.10 and deltas["accel_hard"] >= 0.10
    ok = all_nonneg and hard_ok and elapsed < 120.0
    _report(8, ok, f"paired deltas {' '.join(lines)}; hard-tier margins "
                   f"uniform {deltas['uniform_hard']:+.2f} accel {deltas['accel_hard']:+.2f} "
                   f"(need >= +0.10); batch time {elapsed:.1f}s < 120s")
    assert ok


def test_criterion_09_diagnostic_orderings(paired_batch):
    # (a) pace-engagement fraction non-decreasing across acceleration tiers
    fractions = []
    for regime in ("accel_easy", "accel_medium", "accel_hard"):
        total = engaged = 0
        for seed in range(100):
            rec = run_episode(EpisodeConfig(regime=regime, seed=seed))
            total += len(rec.chunks)
            engaged += sum(1 for c in rec.chunks if c.alpha_star >= 2.0)
        fractions.append(engaged / total)
    accel_ok = fractions[0] <= fractions[1] <= fractions[2]

    # (b) consistency bypass fires only on teleport chunk resets
    nu_teleport = 0
    for seed in range(100):
        rec = run_episode(EpisodeConfig(regime="teleport", seed=seed))
        nu_teleport += sum(1 for c in rec.chunks if c.gates.nu_bypass)
    nu_elsewhere = 0
    for regime in ("uniform_easy", "uniform_hard", "accel_hard", "random_walk", "stop_and_go", "static"):
        for seed in range(40):
            rec = run_episode(EpisodeConfig(regime=regime, seed=seed))
            nu_elsewhere += sum(1 for c in rec.chunks if c.gates.nu_bypass)
    nu_ok = nu_teleport > 0 and nu_elsewhere == 0

    # (c) outer-rate sweep: derived value at least matches both endpoints
    sweep = run_sweep(
        RunSpec(trials=100, paired=False, regimes=("random_walk", "stop_and_go"),
                axis="beta_out", values=(0.01, 0.02, 0.04, 0.083, 0.16, 0.4))
    )
    by_value = {r.value: r.ppc_rate for r in sweep}
    beta_ok = by_value["0.083"] >= by_value["0.01"] and by_value["0.083"] >= by_value["0.4"]

    # (d) adaptive pace at least matches every constant setting
    alpha_sweep = run_sweep(
        RunSpec(trials=100, paired=False, axis="fixed_alpha", values=(1.0, 2.0, 4.0, 6.0, 8.0))
    )
    rates = {r.value: r.ppc_rate for r in alpha_sweep}
    dynamic = rates.pop("dynamic")
    alpha_ok = all(dynamic >= v for v in rates.values())

    ok = accel_ok and nu_ok and beta_ok and alpha_ok
    _report(9, ok, f"accel engagement {['%.3f' % f for f in fractions]} ordered={accel_ok}; "
                   f"nu teleport-only ({nu_teleport} fires, {nu_elsewhere} elsewhere)={nu_ok}; "
                   f"beta_out peak {by_value['0.083']:.2f} vs ends ({by_value['0.01']:.2f}, {by_value['0.4']:.2f})={beta_ok}; "
                   f"dynamic {dynamic:.2f} >= fixed {sorted(rates.values())}={alpha_ok}")
    assert ok


def test_criterion_10_noise_robustness():
    spec = RunSpec(trials=100, noise_sigma_v=0.3, noise_sigma_theta_deg=20.0)
    rows = run_batch(spec)
    failures = []
    for regime in spec.regimes:
        sub = [r for r in rows if r.regime == regime]
        base, ppc = _rate(sub, False), _rate(sub, True)
        if ppc < base:
            failures.append((regime, base, ppc))
    ok = not failures
    _report(10, ok, f"sigma_v=0.3 sigma_theta=20deg: wrapped rate >= bare baseline on all "
                    f"{len(spec.regimes)} regimes; violations: {failures or 'none'}")
    assert ok


def test_criterion_11_overhead():
    wide = run_bench(RunSpec(bench_calls=1000, bench_k=8), warmup=100)
    floor = run_bench(RunSpec(bench_calls=1000, bench_k=2), warmup=100)
    ok = wide["p99_ms"] <= 0.5 and floor["p99_ms"] <= 0.5
    _report(11, ok, f"correct_chunk P99 {wide['p99_ms']:.3f} ms at k_exec=8 and "
                    f"{floor['p99_ms']:.3f} ms at k_exec=2 over 1000 calls each (budget 0.5 ms)")
    assert wide["k_exec"] == 8 and floor["k_exec"] == 2
    assert ok


def test_criterion_12_csv_determinism(tmp_path):
    args = ["run", "--regimes", "static,uniform_hard,teleport", "--trials", "5", "--seed-base", "3"]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert cli_main(args + ["--out", str(a)]) == 0
    assert cli_main(args + ["--out", str(b)]) == 0
    ok = a.read_bytes() == b.read_bytes()
    _report(12, ok, f"two identical invocations produced byte-identical CSV bodies "
                    f"({len(a.read_bytes())} bytes)")
    assert ok
