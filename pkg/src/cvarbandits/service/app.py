"""HTTP service wrapping the benchmark harness and the offline estimators.

Endpoints: POST /estimate (one CVaR estimate over a supplied loss sequence),
POST /simulate (full experiment, mean metric series per cell), POST /sweep
(time-T metrics per method x rate cell), GET /health.  Domain validation
errors surface as HTTP 400 with the underlying message.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..harness import config_as_dict, run_experiment, run_trace, sweep_lambda
from ..policy import METHOD_DUAL, METHOD_SAMPLE, METHOD_WEIGHTED
from ..risk import DualState, cvar_sample_average, cvar_weighted, dual_cvar, dual_update
from .schemas import (
    CellSeries,
    EstimateRequest,
    EstimateResponse,
    ExperimentRequest,
    FinalMetrics,
    RunCellSeries,
    SimulateRequest,
    SimulateResponse,
    SweepResponse,
    SweepRow,
    TraceRow,
)


def create_app() -> FastAPI:
    app = FastAPI(title="cvarbandits service", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/estimate", response_model=EstimateResponse)
    def estimate(req: EstimateRequest) -> EstimateResponse:
        argmin_c = None
        try:
            if req.method == METHOD_SAMPLE:
                value = cvar_sample_average(req.losses, req.alpha)
            elif req.method == METHOD_WEIGHTED:
                value = cvar_weighted(req.losses, req.lam, req.alpha)
            else:
                lo, hi, count = req.grid
                state = DualState(np.linspace(lo, hi, int(count)), req.alpha)
                for z in req.losses:
                    dual_update(state, z, req.lam)
                value, argmin_c = dual_cvar(state)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return EstimateResponse(estimate=value, argmin_c=argmin_c, observations=len(req.losses))

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest) -> SimulateResponse:
        try:
            config = req.to_config()
            result = run_experiment(config, collect_per_run=req.collect_per_run)
            trace_rows = run_trace(config, req.trace_run) if req.trace_run is not None else None
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        cells = []
        for method in config.methods:
            for lam in config.lambdas:
                series = result.mean_series[(method, lam)]
                cells.append(
                    CellSeries(
                        method=method,
                        lam=lam,
                        hit_rate=series.hit_rate.tolist(),
                        avg_regret=series.avg_regret.tolist(),
                        empirical_cvar=series.empirical_cvar.tolist(),
                        finals=FinalMetrics(**result.finals[(method, lam)]),
                    )
                )
        per_run = None
        if result.per_run is not None:
            per_run = [
                RunCellSeries(
                    method=method,
                    lam=lam,
                    run=r,
                    hit_rate=series.hit_rate.tolist(),
                    avg_regret=series.avg_regret.tolist(),
                    empirical_cvar=series.empirical_cvar.tolist(),
                )
                for method in config.methods
                for lam in config.lambdas
                for r, series in enumerate(result.per_run[(method, lam)])
            ]
        trace = None
        if trace_rows is not None:
            trace = [
                TraceRow(stage=s, arm=a, true_cvar=v, is_optimal=o) for s, a, v, o in trace_rows
            ]
        return SimulateResponse(config=config_as_dict(config), cells=cells, per_run=per_run, trace=trace)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: ExperimentRequest) -> SweepResponse:
        try:
            config = req.to_config()
            rows = sweep_lambda(config)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return SweepResponse(
            config=config_as_dict(config),
            rows=[
                SweepRow(
                    method=row["method"],
                    lam=row["lambda"],
                    hit_rate_T=row["hit_rate_T"],
                    avg_regret_T=row["avg_regret_T"],
                    empirical_cvar_T=row["empirical_cvar_T"],
                )
                for row in rows
            ],
        )

    return app


app = create_app()
