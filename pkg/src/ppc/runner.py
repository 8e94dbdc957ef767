"""Batch execution, parameter sweeps, benchmarks, and machine-readable output.

Every output embeds the fully resolved run specification, and CSV bodies are
byte-stable across re-runs: rows are sorted deterministically and floats are
written with shortest round-trip formatting. Timestamps appear only in JSON
summary metadata.
"""

from __future__ import annotations

import concurrent.futures
import datetime
import io
import math
import os
import statistics
import time
from dataclasses import asdict, dataclass, replace

from scipy import stats as _scipy_stats

from . import __version__
from .core import DisturbanceEstimate, Vec3, WrapperConfig
from .latch import LatchState
from .pipeline import GatesInput, correct_chunk
from .sim import REGIMES, EpisodeConfig, EpisodeRecord, NoiseParams, WrapperOverrides, query_follower, run_episode

SWEEP_AXES = ("beta_out", "fixed_alpha", "noise")

EPISODE_CSV_COLUMNS = (
    "regime",
    "seed",
    "ppc",
    "intercepted",
    "intercept_tick",
    "terminal_distance",
    "min_distance",
    "mean_alpha",
    "latch_rate",
    "nu_rate",
)

SWEEP_CSV_COLUMNS = ("axis", "value", "regimes", "trials", "ppc_rate", "baseline_rate")


@dataclass(frozen=True, slots=True)
class RunSpec:
    """Resolved configuration for one CLI or service invocation."""

    command: str = "run"
    regimes: tuple[str, ...] = REGIMES
    trials: int = 100
    seed_base: int = 0
    paired: bool = True
    noise_sigma_v: float = 0.0
    noise_sigma_theta_deg: float = 0.0
    fixed_alpha: float | None = None
    latch_enabled: bool = True
    second_order: bool = True
    beta_in: float | None = None
    beta_out: float | None = None
    lam: float = 1.0
    max_ticks: int = 200
    jobs: int = 1
    axis: str = ""
    values: tuple[float, ...] = ()
    k_max: int = 8
    verify_trials: int = 1000
    bench_calls: int = 1000
    bench_k: int = 8

    def __post_init__(self) -> None:
        unknown = [r for r in self.regimes if r not in REGIMES]
        if unknown:
            raise ValueError(f"unknown regimes: {unknown}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.axis and self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; expected one of {SWEEP_AXES}")

    def echo(self) -> dict:
        """Flat, JSON-safe view used as the config echo in every output."""
        d = asdict(self)
        d["regimes"] = ",".join(self.regimes)
        d["values"] = ",".join(_fmt(v) for v in self.values)
        return d

    def overrides(self) -> WrapperOverrides:
        return WrapperOverrides(
            fixed_alpha=self.fixed_alpha,
            latch_enabled=self.latch_enabled,
            second_order=self.second_order,
            beta_in=self.beta_in,
            beta_out=self.beta_out,
            lam=self.lam,
        )

    def noise(self) -> NoiseParams:
        return NoiseParams(sigma_v=self.noise_sigma_v, sigma_theta_deg=self.noise_sigma_theta_deg)


@dataclass(frozen=True, slots=True)
class EpisodeRow:
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


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row_from_record(rec: EpisodeRecord) -> EpisodeRow:
    mean_alpha = latch_rate = nu_rate = None
    if rec.ppc_enabled and rec.chunks:
        mean_alpha = sum(c.alpha_star for c in rec.chunks) / len(rec.chunks)
        latch_rate = sum(1 for c in rec.chunks if c.gates.latch_fired) / len(rec.chunks)
        nu_rate = sum(1 for c in rec.chunks if c.gates.nu_bypass) / len(rec.chunks)
    return EpisodeRow(
        regime=rec.regime,
        seed=rec.seed,
        ppc=rec.ppc_enabled,
        intercepted=rec.intercepted,
        intercept_tick=rec.intercept_tick,
        terminal_distance=rec.terminal_distance,
        min_distance=rec.min_distance,
        mean_alpha=mean_alpha,
        latch_rate=latch_rate,
        nu_rate=nu_rate,
    )


def _episode_task(args) -> EpisodeRow:
    regime, seed, ppc, spec_dict = args
    spec = RunSpec(**spec_dict)
    cfg = EpisodeConfig(
        regime=regime,
        seed=seed,
        max_ticks=spec.max_ticks,
        noise=spec.noise() if ppc else NoiseParams(),
        ppc_enabled=ppc,
    )
    return _row_from_record(run_episode(cfg, overrides=spec.overrides()))


def _resolve_jobs(jobs: int) -> int:
    if jobs >= 1:
        return jobs
    return int(os.environ.get("PPC_JOBS", "1") or "1")


def run_batch(spec: RunSpec) -> list[EpisodeRow]:
    """Seed-paired episode batch over the requested regimes."""
    arms = (False, True) if spec.paired else (True,)
    tasks = [
        (regime, seed, ppc, asdict(spec))
        for regime in spec.regimes
        for seed in range(spec.seed_base, spec.seed_base + spec.trials)
        for ppc in arms
    ]
    jobs = _resolve_jobs(spec.jobs)
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_episode_task, tasks, chunksize=16))
    else:
        rows = [_episode_task(t) for t in tasks]
    order = {r: i for i, r in enumerate(spec.regimes)}
    rows.sort(key=lambda r: (order[r.regime], r.seed, r.ppc))
    return rows


def clopper_pearson(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval from the beta-quantile form."""
    if n == 0:
        return (0.0, 1.0)
    a = 1.0 - confidence
    lo = 0.0 if successes == 0 else float(_scipy_stats.beta.ppf(a / 2, successes, n - successes + 1))
    hi = 1.0 if successes == n else float(_scipy_stats.beta.ppf(1 - a / 2, successes + 1, n - successes))
    return (lo, hi)


def summarize(spec: RunSpec, rows: list[EpisodeRow]) -> dict:
    per_regime: dict[str, dict] = {}
    for regime in spec.regimes:
        sub = [r for r in rows if r.regime == regime]
        entry: dict = {}
        for label, arm in (("ppc", True), ("baseline", False)):
            arm_rows = [r for r in sub if r.ppc is arm]
            if not arm_rows:
                continue
            k = sum(1 for r in arm_rows if r.intercepted)
            n = len(arm_rows)
            lo, hi = clopper_pearson(k, n)
            entry[label] = {"trials": n, "intercepted": k, "rate": k / n, "ci95": [lo, hi]}
        if "ppc" in entry and "baseline" in entry:
            entry["paired_delta"] = entry["ppc"]["rate"] - entry["baseline"]["rate"]
        per_regime[regime] = entry

    def _overall(arm: bool) -> dict | None:
        arm_rows = [r for r in rows if r.ppc is arm]
        if not arm_rows:
            return None
        k = sum(1 for r in arm_rows if r.intercepted)
        n = len(arm_rows)
        lo, hi = clopper_pearson(k, n)
        return {"trials": n, "intercepted": k, "rate": k / n, "ci95": [lo, hi]}

    overall = {k: v for k, v in (("ppc", _overall(True)), ("baseline", _overall(False))) if v}
    return {
        "spec": spec.echo(),
        "generated_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "package_version": __version__,
        "per_regime": per_regime,
        "overall": overall,
    }


def _csv_body(columns: tuple[str, ...], rows: list[tuple], spec: RunSpec) -> str:
    buf = io.StringIO()
    for key, value in sorted(spec.echo().items()):
        buf.write(f"# {key}={_fmt(value)}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def episodes_csv(spec: RunSpec, rows: list[EpisodeRow]) -> str:
    tuples = [
        (
            r.regime,
            r.seed,
            r.ppc,
            r.intercepted,
            r.intercept_tick,
            r.terminal_distance,
            r.min_distance,
            r.mean_alpha,
            r.latch_rate,
            r.nu_rate,
        )
        for r in rows
    ]
    return _csv_body(EPISODE_CSV_COLUMNS, tuples, spec)


@dataclass(frozen=True, slots=True)
class SweepRow:
    axis: str
    value: str
    regimes: str
    trials: int
    ppc_rate: float
    baseline_rate: float | None


def _rate(rows: list[EpisodeRow], ppc: bool) -> float | None:
    sub = [r for r in rows if r.ppc is ppc]
    if not sub:
        return None
    return sum(1 for r in sub if r.intercepted) / len(sub)


def run_sweep(spec: RunSpec) -> list[SweepRow]:
    """Grid evaluation along one wrapper axis over a regime composite.

    The fixed_alpha axis appends a final dynamic row so the adaptive pace can
    be compared against every constant setting in one artifact.
    """
    if spec.axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {spec.axis!r}")
    out: list[SweepRow] = []
    regimes_label = ",".join(spec.regimes)

    def _eval(point_spec: RunSpec, label: str) -> None:
        rows = run_batch(point_spec)
        out.append(
            SweepRow(
                axis=spec.axis,
                value=label,
                regimes=regimes_label,
                trials=spec.trials,
                ppc_rate=_rate(rows, True) or 0.0,
                baseline_rate=_rate(rows, False),
            )
        )

    if spec.axis == "beta_out":
        for v in spec.values:
            _eval(replace(spec, beta_out=v), _fmt(v))
    elif spec.axis == "fixed_alpha":
        for v in spec.values:
            _eval(replace(spec, fixed_alpha=v), _fmt(v))
        _eval(replace(spec, fixed_alpha=None), "dynamic")
    else:  # noise: values sweep the angular sigma, magnitude sigma held from the spec
        for v in spec.values:
            _eval(replace(spec, noise_sigma_theta_deg=v), _fmt(v))
    return out


def sweep_csv(spec: RunSpec, rows: list[SweepRow]) -> str:
    tuples = [(r.axis, r.value, r.regimes, r.trials, r.ppc_rate, r.baseline_rate) for r in rows]
    return _csv_body(SWEEP_CSV_COLUMNS, tuples, spec)


def run_bench(spec: RunSpec, warmup: int = 100) -> dict:
    """Latency of the full per-chunk correction, single-threaded.

    The disturbance is sized so the horizon lands on bench_k, with a small
    perpendicular component and a nonzero acceleration so both offset branches
    stay active. Warm-up calls are excluded from the statistics.
    """
    cfg = WrapperConfig()
    from .sim import FollowerParams

    tcp = Vec3(0.0, -0.2, 0.12)
    chunk = query_follower(tcp, Vec3(0.0, 0.0, 0.05), FollowerParams(), cfg.T, cfg.c_pd)
    alpha_target = cfg.T / max(spec.bench_k, 1)
    d = DisturbanceEstimate(
        velocity=Vec3(0.0, 0.01 * (alpha_target - 1.0), 0.002),
        acceleration=Vec3(0.0, 0.0002, 0.0001),
        lam=1.0,
    )
    dp = Vec3(0.0, 0.01, 0.0)
    latch = LatchState.fresh(cfg)
    gates = GatesInput()

    timings_ns: list[int] = []
    out = None
    for i in range(warmup + spec.bench_calls):
        start = time.perf_counter_ns()
        out = correct_chunk(chunk, d, dp, latch, gates, cfg, tcp_position=tcp)
        elapsed = time.perf_counter_ns() - start
        if i >= warmup:
            timings_ns.append(elapsed)
    ms = sorted(t / 1e6 for t in timings_ns)

    def _pct(p: float) -> float:
        return ms[min(len(ms) - 1, max(0, math.ceil(p * len(ms)) - 1))]

    return {
        "calls": spec.bench_calls,
        "k_exec": out.k_exec,
        "mean_ms": statistics.fmean(ms),
        "median_ms": statistics.median(ms),
        "p90_ms": _pct(0.90),
        "p99_ms": _pct(0.99),
        "max_ms": ms[-1],
    }


def parse_regimes(text: str) -> tuple[str, ...]:
    if not text or text == "all":
        return REGIMES
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    unknown = [p for p in parts if p not in REGIMES]
    if unknown:
        raise ValueError(f"unknown regimes: {unknown}; valid: {', '.join(REGIMES)}")
    return parts
