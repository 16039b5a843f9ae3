"""Spectral link-budget simulator for two-step quantum frequency conversion
(visible -> telecom -> visible) between remote quantum memories."""

from .analysis import (
    AttributionReport,
    SnrReport,
    calibrate_noise_density,
    estimate_snr,
    noise_attribution,
    sweep_distance,
    sweep_pump_power,
)
from .chain import LinkState, Scenario, propagate, standard_scenario
from .errors import (
    ChainError,
    DomainError,
    GridMismatchError,
    InfeasibleError,
    OutOfRangeError,
    QfcLinkError,
    ScenarioParseError,
)
from .fitting import EfficiencySample, FitResult, fit_efficiency_curve, predict_curve
from .photonics import (
    DetectorModel,
    Direction,
    FiberSegment,
    FilterElement,
    PplnStage,
    SpectrometerModel,
    conversion_efficiency,
    converted_frequency,
    derive_eta_nor_from_peak,
    detect,
    fiber_transmission,
    phase_matching_factor,
)
from .scenario_io import parse_scenario, serialize_scenario
from .spectral import (
    Band,
    FrequencyGrid,
    SpectralLine,
    Spectrum,
    add,
    frequency_to_wavelength,
    integrate_band,
    line_to_spectrum,
    scale,
    wavelength_to_frequency,
    zero_spectrum,
)

__version__ = "0.1.0"
