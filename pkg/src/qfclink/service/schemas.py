"""Request and response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str


class ScenarioText(BaseModel):
    scenario: str = Field(description="Scenario document in the bundled file format")


class SimulateRequest(ScenarioText):
    pass


class SimulateResponse(BaseModel):
    summary: str
    budget_csv: str
    detector_counts_cts_s: float
    two_step_efficiency: float


class FitRequest(BaseModel):
    csv: str = Field(description="CSV with header 'pump_power_mW,eta'")
    length_cm: float = Field(gt=0)


class FitResponse(BaseModel):
    eta_max: float
    eta_nor_per_w_cm2: float
    rss: float
    n_samples: int
    degenerate: bool
    summary: str
    csv: str


class SweepPowerRequest(ScenarioText):
    start_w: float = Field(ge=0)
    stop_w: float = Field(ge=0)
    steps: int = Field(ge=1)


class SweepDistanceRequest(ScenarioText):
    start_km: float = Field(ge=0)
    stop_km: float = Field(ge=0)
    steps: int = Field(ge=1)


class TableResponse(BaseModel):
    csv: str


class AttributeResponse(BaseModel):
    csv: str
    summary: str
    ratio_both_to_stage2: float
    counts_both: float
    counts_stage2_only: float
    counts_stage1_only: float
    dark_rate: float


class CalibrateRequest(ScenarioText):
    target_cts: float = Field(gt=0)


class CalibrateResponse(BaseModel):
    noise_density_cts_s_hz: float
    verification_counts_cts_s: float
    summary: str


class SnrRequest(ScenarioText):
    final_filter_bandwidth_hz: float | None = None
    fiber_km: float = Field(default=0.0, ge=0)
    noise_floor_cts_s: float | None = None


class SnrResponse(BaseModel):
    signal_rate_cts_s: float
    noise_rate_cts_s: float
    dark_rate_cts_s: float
    snr: float
    bandwidth_gain: float
    summary: str
