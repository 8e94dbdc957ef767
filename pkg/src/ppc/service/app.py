"""HTTP service exposing the correction operator and the experiment engine.

The service is stateless: per-episode latch state rides along in the
correction request and comes back updated in the response, so any number of
control loops can share one service instance.
"""

from __future__ import annotations

import dataclasses

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..core import DisturbanceEstimate, WrapperConfig, derive_latch_constants
from ..latch import LatchState
from ..pipeline import GatesInput, correct_chunk
from ..runner import RunSpec, episodes_csv, run_batch, run_bench, run_sweep, summarize, sweep_csv
from ..verify import run_verification
from . import schemas as sc


def create_app() -> FastAPI:
    app = FastAPI(
        title="pace-path correction service",
        version=__version__,
        description="Closed-form chunk correction, verification suites, episode batches, sweeps, and benchmarks.",
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/config/defaults")
    def config_defaults() -> dict:
        cfg = WrapperConfig()
        d = dataclasses.asdict(cfg)
        d["workspace_min"] = cfg.workspace_min.as_tuple()
        d["workspace_max"] = cfg.workspace_max.as_tuple()
        d["latch_constants"] = dataclasses.asdict(derive_latch_constants(cfg))
        return d

    @app.post("/correction", response_model=sc.CorrectionResponse)
    def correction(req: sc.CorrectionRequest) -> sc.CorrectionResponse:
        try:
            cfg = WrapperConfig(**(req.config.overrides() if req.config else {}))
            chunk = req.chunk()
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        latch = LatchState(constants=derive_latch_constants(cfg))
        if req.latch is not None:
            latch.inner_level = req.latch.inner_level
            latch.outer_level = req.latch.outer_level
            if req.latch.last_velocity is not None:
                latch.last_velocity = req.latch.last_velocity.unwrap()
        d = DisturbanceEstimate(
            velocity=req.velocity.unwrap(),
            acceleration=req.acceleration.unwrap(),
            lam=req.lam,
        )
        try:
            out = correct_chunk(
                chunk,
                d,
                req.delta_p.unwrap(),
                latch,
                GatesInput(grasp_near=req.grasp_near, nu_bypass=req.nu_bypass),
                cfg,
                tcp_position=req.tcp_position.unwrap() if req.tcp_position else None,
                fixed_alpha=req.fixed_alpha,
                second_order=req.second_order,
                latch_enabled=req.latch_enabled,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return sc.CorrectionResponse(
            corrected_steps=[sc.ActionStepModel.wrap(s) for s in out.corrected_steps],
            alpha_star=out.alpha_star,
            offsets=[sc.Vec3Model.wrap(o) for o in out.offsets],
            k_exec=out.k_exec,
            gates=sc.GateFlagsModel(**dataclasses.asdict(out.gates)),
            latch=sc.LatchStateModel(
                inner_level=latch.inner_level,
                outer_level=latch.outer_level,
                last_velocity=sc.Vec3Model.wrap(latch.last_velocity) if latch.last_velocity else None,
            ),
            timing_ns=out.timing_ns,
        )

    @app.post("/verify", response_model=sc.VerifyResponse)
    def verify(req: sc.VerifyRequest) -> sc.VerifyResponse:
        report = run_verification(trials=req.trials, k_max=req.k_max, seed=req.seed, perturb=req.perturb)
        return sc.VerifyResponse(
            passed=report.passed,
            families=[sc.FamilyResultModel(**dataclasses.asdict(f)) for f in report.families],
        )

    def _spec_from(req: sc.RunRequest, command: str, **extra) -> RunSpec:
        try:
            return RunSpec(
                command=command,
                regimes=tuple(req.regimes),
                trials=req.trials,
                seed_base=req.seed_base,
                paired=req.paired,
                noise_sigma_v=req.noise_sigma_v,
                noise_sigma_theta_deg=req.noise_sigma_theta_deg,
                fixed_alpha=req.fixed_alpha,
                latch_enabled=req.latch_enabled,
                second_order=req.second_order,
                beta_in=req.beta_in,
                beta_out=req.beta_out,
                lam=req.lam,
                max_ticks=req.max_ticks,
                jobs=req.jobs,
                **extra,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/runs", response_model=sc.RunResponse)
    def runs(req: sc.RunRequest) -> sc.RunResponse:
        spec = _spec_from(req, "run")
        rows = run_batch(spec)
        return sc.RunResponse(
            rows=[sc.EpisodeRowModel(**dataclasses.asdict(r)) for r in rows],
            summary=summarize(spec, rows),
            csv=episodes_csv(spec, rows),
        )

    @app.post("/sweeps", response_model=sc.SweepResponse)
    def sweeps(req: sc.SweepRequest) -> sc.SweepResponse:
        spec = _spec_from(req, "sweep", axis=req.axis, values=tuple(req.values))
        rows = run_sweep(spec)
        return sc.SweepResponse(
            rows=[sc.SweepRowModel(**dataclasses.asdict(r)) for r in rows],
            csv=sweep_csv(spec, rows),
        )

    @app.post("/benchmarks", response_model=sc.BenchResponse)
    def benchmarks(req: sc.BenchRequest) -> sc.BenchResponse:
        spec = RunSpec(command="bench", bench_calls=req.calls, bench_k=req.k_exec)
        return sc.BenchResponse(**run_bench(spec, warmup=req.warmup))

    return app


app = create_app()
