"""Scenario assembly and the propagation engine.

A scenario is an ordered chain of optical elements ending in a detector.
``propagate`` threads a (line, spectrum) state through the chain and records
a snapshot after every element, so budgets and attribution studies can read
intermediate signal and noise levels.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

from .errors import ChainError, DomainError
from .photonics import (
    DetectorModel,
    Direction,
    FiberSegment,
    FilterElement,
    PplnStage,
    SpectrometerModel,
    apply_fiber,
    apply_filter,
    apply_spectrometer,
    apply_stage,
    conversion_efficiency,
    derive_eta_nor_from_peak,
    detect,
    phase_matching_factor,
)
from .spectral import (
    Band,
    FrequencyGrid,
    SpectralLine,
    Spectrum,
    integrate_band,
    wavelength_to_frequency,
    zero_spectrum,
)

Element = Union[PplnStage, FilterElement, FiberSegment, SpectrometerModel, DetectorModel]


@dataclass(frozen=True)
class AnalysisDefaults:
    """Per-scenario defaults for the SNR budget operations."""

    snr_filter_bandwidth: float = 10e6   # Hz
    snr_noise_floor: float = 100.0       # counts/s
    link_alpha_db_per_km: float = 0.2

    def __post_init__(self):
        if self.snr_filter_bandwidth <= 0:
            raise DomainError("snr_filter_bandwidth must be positive")
        if self.snr_noise_floor < 0:
            raise DomainError("snr_noise_floor must be non-negative")
        if self.link_alpha_db_per_km < 0:
            raise DomainError("link_alpha_db_per_km must be non-negative")


@dataclass(frozen=True)
class Scenario:
    """Source line, frequency grid, and the ordered element chain."""

    source: SpectralLine
    grid: FrequencyGrid
    elements: tuple[Element, ...]
    pump_flags: tuple[bool, ...] | None = None
    label: str = "scenario"
    analysis: AnalysisDefaults = field(default_factory=AnalysisDefaults)

    def __post_init__(self):
        if not self.elements:
            raise DomainError("scenario needs at least a detector element")
        detectors = [i for i, e in enumerate(self.elements)
                     if isinstance(e, DetectorModel)]
        if len(detectors) != 1:
            raise DomainError(
                f"scenario must contain exactly one detector, found {len(detectors)}")
        if detectors[0] != len(self.elements) - 1:
            raise DomainError("the detector must be the last element")
        spectrometers = [e for e in self.elements if isinstance(e, SpectrometerModel)]
        if len(spectrometers) > 1:
            raise DomainError("scenario may contain at most one spectrometer")
        if not self.grid.contains(self.source.center):
            raise DomainError(
                f"source center {self.source.center} Hz outside the grid")
        n_stages = len(self.stages())
        if self.pump_flags is not None and len(self.pump_flags) != n_stages:
            raise DomainError(
                f"pump_flags has {len(self.pump_flags)} entries for {n_stages} stages")

    def stages(self) -> tuple[PplnStage, ...]:
        return tuple(e for e in self.elements if isinstance(e, PplnStage))

    @property
    def detector(self) -> DetectorModel:
        return self.elements[-1]  # type: ignore[return-value]

    def effective_stage(self, stage_index: int) -> PplnStage:
        """Stage with any pump override applied."""
        stage = self.stages()[stage_index]
        if self.pump_flags is None:
            return stage
        return replace(stage, pump_on=self.pump_flags[stage_index])

    def with_pump_flags(self, flags: tuple[bool, ...] | None) -> "Scenario":
        return replace(self, pump_flags=flags)

    def with_source_rate(self, rate: float) -> "Scenario":
        return replace(self, source=self.source.with_rate(rate))

    def with_stage_noise_density(self, density: float) -> "Scenario":
        """Same chain with every stage's pedestal density replaced."""
        new_elements = tuple(
            replace(e, noise_density=density) if isinstance(e, PplnStage) else e
            for e in self.elements)
        return replace(self, elements=new_elements)

    def without_spectrometer(self) -> "Scenario":
        new_elements = tuple(e for e in self.elements
                             if not isinstance(e, SpectrometerModel))
        return replace(self, elements=new_elements)

    def with_detector(self, detector: DetectorModel) -> "Scenario":
        return replace(self, elements=self.elements[:-1] + (detector,))


@dataclass(frozen=True)
class Snapshot:
    """State after one element: the line, noise in the reporting band, and a
    reference to the full spectrum."""

    label: str
    line: SpectralLine
    noise_in_band: float
    spectrum: Spectrum


@dataclass(frozen=True)
class LinkState:
    """Full propagation trace: one snapshot per element plus the source."""

    snapshots: tuple[Snapshot, ...]
    detector_counts: float
    reporting_band: Band

    @property
    def source(self) -> Snapshot:
        return self.snapshots[0]

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]


def propagate(s: Scenario, reporting_band: Band | None = None) -> LinkState:
    """Apply each element in order, recording per-element snapshots.

    Deterministic and pure; element failures are re-raised as
    :class:`ChainError` with the element index attached.
    """
    band = reporting_band if reporting_band is not None else s.detector.band
    line = s.source
    spectrum = zero_spectrum(s.grid)
    snapshots = [Snapshot("source", line, integrate_band(spectrum, band), spectrum)]
    detector_counts = 0.0
    stage_index = 0
    for index, element in enumerate(s.elements):
        try:
            if isinstance(element, PplnStage):
                line, spectrum = apply_stage(
                    line, spectrum, s.effective_stage(stage_index))
                stage_index += 1
            elif isinstance(element, FilterElement):
                line, spectrum = apply_filter(line, spectrum, element)
            elif isinstance(element, FiberSegment):
                line, spectrum = apply_fiber(line, spectrum, element)
            elif isinstance(element, SpectrometerModel):
                line, spectrum = apply_spectrometer(line, spectrum, element)
            elif isinstance(element, DetectorModel):
                detector_counts = detect(line, spectrum, element)
            else:
                raise DomainError(f"unknown element type {type(element).__name__}")
        except ChainError:
            raise
        except Exception as exc:
            raise ChainError(index, getattr(element, "label", "?"), str(exc)) from exc
        snapshots.append(
            Snapshot(element.label, line, integrate_band(spectrum, band), spectrum))
    return LinkState(tuple(snapshots), detector_counts, band)


def signal_conversion_ratio(s: Scenario) -> float:
    """Product of the per-stage external signal factors (efficiency, detuning
    response, output coupling), ignoring passive inter-stage losses."""
    ratio = 1.0
    for i in range(len(s.stages())):
        stage = s.effective_stage(i)
        pmf = phase_matching_factor(stage.detuning, stage.pm_fwhm)
        ratio *= conversion_efficiency(stage) * pmf * stage.coupling_out
    return ratio


# Fixed component values of the bundled two-stage chain.  The pedestal
# density is calibrated so that the measurement chain reports 1e5 counts/s
# of pump-induced noise in the detector band with both pumps on.
STANDARD_NOISE_DENSITY = 8.489145759606806e-05  # counts/s/Hz at 0.5 W


def standard_scenario(
    *,
    source_rate: float = 1e6,
    source_wavelength_nm: float = 637.2,
    source_linewidth_hz: float = 10e6,
    pump_wavelength_nm: float = 1071.0,
    pump_power_w: float = 0.5,
    peak_pump_power_w: float = 0.5,
    eta_max_dfg: float = 0.271,
    eta_max_sfg: float = 0.256,
    coupling_in_dfg: float = 0.31,
    coupling_in_sfg: float = 0.35,
    length_cm: float = 4.8,
    pm_fwhm_hz: float = 40e9,
    lpf_transmission: float = 0.870,
    spf_transmission: float = 0.862,
    bpf_transmission: float = 0.93,
    smf_coupling: float = 0.5,
    smf_length_km: float = 0.001,
    telecom_alpha_db_per_km: float = 0.2,
    spectrometer_efficiency: float = 0.1,
    spectrometer_resolution_hz: float = 40e9,
    detector_dark_rate: float = 100.0,
    noise_density: float = STANDARD_NOISE_DENSITY,
    noise_half_width_hz: float = 2e12,
    detuning_hz: float = 0.0,
    n_bins: int = 143_250,
    label: str = "standard",
) -> Scenario:
    """The bundled two-stage conversion chain with every default overridable.

    Visible source line -> DFG stage -> long-pass filter -> single-mode fiber
    -> SFG stage -> short-pass filter -> spectrometer -> band-pass filter ->
    photon counter.  The SFG input centre is tied to the DFG output by exact
    energy conservation so the round trip returns the source frequency.
    """
    nu_source = wavelength_to_frequency(source_wavelength_nm)
    nu_pump = wavelength_to_frequency(pump_wavelength_nm)
    nu_telecom = nu_source - nu_pump
    eta_nor = derive_eta_nor_from_peak(peak_pump_power_w, length_cm)

    grid = FrequencyGrid(187.5e12, 474.0e12, n_bins)
    source = SpectralLine(nu_source, source_linewidth_hz, source_rate)

    visible_band = Band(wavelength_to_frequency(641.0), wavelength_to_frequency(634.0))
    telecom_band = Band(180e12, 200e12)
    lpf_band = Band(wavelength_to_frequency(1800.0), wavelength_to_frequency(1100.0))
    spf_band = Band(wavelength_to_frequency(800.0), wavelength_to_frequency(450.0))

    def stage(direction, input_center, eta_max, coupling_in, name):
        return PplnStage(
            direction=direction,
            input_center=input_center,
            eta_max=eta_max,
            eta_nor=eta_nor,
            length_cm=length_cm,
            pm_fwhm=pm_fwhm_hz,
            pump_frequency=nu_pump,
            pump_power=pump_power_w,
            coupling_in=coupling_in,
            coupling_out=1.0,
            noise_density=noise_density,
            noise_ref_power=peak_pump_power_w,
            pump_on=True,
            detuning=detuning_hz,
            noise_half_width=noise_half_width_hz,
            label=name,
        )

    elements: tuple[Element, ...] = (
        stage(Direction.DFG, nu_source, eta_max_dfg, coupling_in_dfg, "ppln1"),
        FilterElement(lpf_band, t_pass=lpf_transmission, t_stop=0.0, label="lpf"),
        FiberSegment(
            length_km=smf_length_km,
            attenuation=((telecom_band, telecom_alpha_db_per_km),),
            coupling=smf_coupling,
            label="smf",
        ),
        stage(Direction.SFG, nu_telecom, eta_max_sfg, coupling_in_sfg, "ppln2"),
        FilterElement(spf_band, t_pass=spf_transmission, t_stop=0.0, label="spf"),
        SpectrometerModel(
            passband=visible_band,
            resolution_fwhm=spectrometer_resolution_hz,
            efficiency=spectrometer_efficiency,
            label="spectrometer",
        ),
        FilterElement(visible_band, t_pass=bpf_transmission, t_stop=0.0, label="bpf"),
        DetectorModel(band=visible_band, quantum_efficiency=1.0,
                      dark_rate=detector_dark_rate, label="spcm"),
    )
    return Scenario(source=source, grid=grid, elements=elements, label=label)
