"""FastAPI service wrapping the simulator.

Every analysis operation is exposed as one endpoint taking the scenario
document as text, so remote clients and the bundled CLI share the same
surface.  Errors are mapped to structured JSON: scenario or input problems
to 422 with a ``kind`` discriminator, numerical infeasibility to 409.
"""
from __future__ import annotations

import csv
import io
from importlib import resources

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import analysis, reports
from ..chain import Scenario, propagate, signal_conversion_ratio
from ..errors import DomainError, InfeasibleError, ScenarioParseError
from ..fitting import EfficiencySample, fit_efficiency_curve
from ..scenario_io import parse_scenario
from . import schemas

FIT_CSV_HEADER = ["pump_power_mW", "eta"]


def load_standard_scenario_text() -> str:
    return (resources.files("qfclink") / "data" / "standard.scenario").read_text()


def parse_fit_csv(text: str) -> list[EfficiencySample]:
    """Samples from a CSV document with the mandatory header row."""
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows or [c.strip() for c in rows[0]] != FIT_CSV_HEADER:
        raise DomainError(
            f"fit CSV must start with the header '{','.join(FIT_CSV_HEADER)}'")
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DomainError(f"fit CSV line {lineno}: expected 2 fields, got {len(row)}")
        try:
            power_mw, eta = float(row[0]), float(row[1])
        except ValueError as exc:
            raise DomainError(f"fit CSV line {lineno}: {exc}") from exc
        samples.append(EfficiencySample(pump_power=power_mw * 1e-3, eta=eta))
    return samples


def _scenario(text: str) -> Scenario:
    return parse_scenario(text)


def create_app() -> FastAPI:
    app = FastAPI(
        title="qfclink",
        description="Spectral link-budget simulator for two-step quantum "
                    "frequency conversion links",
        version="0.1.0",
    )

    @app.exception_handler(ScenarioParseError)
    async def _parse_error(request: Request, exc: ScenarioParseError):
        return JSONResponse(status_code=422,
                            content={"kind": "parse_error", "message": str(exc)})

    @app.exception_handler(DomainError)
    async def _domain_error(request: Request, exc: DomainError):
        return JSONResponse(status_code=422,
                            content={"kind": "input_error", "message": str(exc)})

    @app.exception_handler(InfeasibleError)
    async def _infeasible_error(request: Request, exc: InfeasibleError):
        return JSONResponse(status_code=409,
                            content={"kind": "infeasible", "message": str(exc)})

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok"}

    @app.get("/scenario/standard", response_model=schemas.ScenarioText)
    def standard():
        return {"scenario": load_standard_scenario_text()}

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(request: schemas.SimulateRequest):
        scenario = _scenario(request.scenario)
        state = propagate(scenario)
        return {
            "summary": reports.simulate_summary(scenario, state),
            "budget_csv": reports.budget_csv(state),
            "detector_counts_cts_s": state.detector_counts,
            "two_step_efficiency": signal_conversion_ratio(scenario),
        }

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit(request: schemas.FitRequest):
        samples = parse_fit_csv(request.csv)
        result = fit_efficiency_curve(samples, request.length_cm)
        return {
            "eta_max": result.eta_max,
            "eta_nor_per_w_cm2": result.eta_nor,
            "rss": result.rss,
            "n_samples": result.n_samples,
            "degenerate": result.degenerate,
            "summary": reports.fit_summary(result, request.length_cm),
            "csv": reports.fit_csv(result),
        }

    @app.post("/snr", response_model=schemas.SnrResponse)
    def snr(request: schemas.SnrRequest):
        scenario = _scenario(request.scenario)
        bw = (scenario.analysis.snr_filter_bandwidth
              if request.final_filter_bandwidth_hz is None
              else request.final_filter_bandwidth_hz)
        report = analysis.estimate_snr(scenario, bw, request.fiber_km,
                                       noise_floor=request.noise_floor_cts_s)
        return {
            "signal_rate_cts_s": report.signal_rate,
            "noise_rate_cts_s": report.noise_rate,
            "dark_rate_cts_s": report.dark_rate,
            "snr": report.snr,
            "bandwidth_gain": report.bandwidth_gain,
            "summary": reports.snr_summary(report),
        }

    @app.post("/sweep/power", response_model=schemas.TableResponse)
    def sweep_power(request: schemas.SweepPowerRequest):
        scenario = _scenario(request.scenario)
        powers = np.linspace(request.start_w, request.stop_w, request.steps)
        rows = analysis.sweep_pump_power(scenario, [float(p) for p in powers])
        return {"csv": reports.sweep_power_csv(rows)}

    @app.post("/sweep/distance", response_model=schemas.TableResponse)
    def sweep_distance(request: schemas.SweepDistanceRequest):
        scenario = _scenario(request.scenario)
        kms = np.linspace(request.start_km, request.stop_km, request.steps)
        rows = analysis.sweep_distance(scenario, [float(k) for k in kms])
        return {"csv": reports.sweep_distance_csv(rows)}

    @app.post("/attribute", response_model=schemas.AttributeResponse)
    def attribute(request: schemas.SimulateRequest):
        scenario = _scenario(request.scenario)
        report = analysis.noise_attribution(scenario)
        return {
            "csv": reports.attribution_csv(report),
            "summary": reports.attribution_summary(report),
            "ratio_both_to_stage2": report.ratio_both_to_stage2,
            "counts_both": report.counts_both,
            "counts_stage2_only": report.counts_stage2_only,
            "counts_stage1_only": report.counts_stage1_only,
            "dark_rate": report.dark_rate,
        }

    @app.post("/calibrate", response_model=schemas.CalibrateResponse)
    def calibrate(request: schemas.CalibrateRequest):
        scenario = _scenario(request.scenario)
        density = analysis.calibrate_noise_density(request.target_cts, scenario)
        check = propagate(
            scenario.with_source_rate(0.0).with_stage_noise_density(density)
        ).detector_counts
        summary = (
            f"per-stage pedestal density: {reports.fmt_number(density)} cts/s/Hz\n"
            f"verification detector count: {reports.fmt_number(check)} cts/s "
            f"(target {reports.fmt_number(request.target_cts)})\n"
        )
        return {
            "noise_density_cts_s_hz": density,
            "verification_counts_cts_s": check,
            "summary": summary,
        }

    return app


app = create_app()
