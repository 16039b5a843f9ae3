"""Models of the optical elements: PPLN conversion stages, filters, fiber,
spectrometer, detector.

Conventions
-----------
* Stage efficiencies are *external*: ``eta_max`` is the peak photon-number
  ratio measured outside the waveguide, so it already contains the input
  coupling.  The internal efficiency is ``eta_max / coupling_in``.
* Broadband noise converts through a stage inside a flat acceptance window
  of width ``pm_fwhm`` (top-hat approximation of the quasi-phase-matching
  response); the narrowband signal uses the full sinc^2 profile through
  :func:`phase_matching_factor` so small detunings behave correctly.
* Each pumped stage emits a flat telecom-band noise pedestal.  The pedestal
  enters the chain at the stage's telecom-side interface: at the output for
  a down-conversion (DFG) stage, at the input for an up-conversion (SFG)
  stage, where it is partly converted alongside any incoming noise.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .spectral import (
    Band,
    FrequencyGrid,
    SpectralLine,
    Spectrum,
    _deposit_line,
    integrate_band,
)

# Positive root of sinc^2(x) = 1/2; sets the FWHM of the acceptance profile.
SINC2_HALF_POWER_ARG = 1.3915573782515101


class Direction(str, enum.Enum):
    DFG = "dfg"
    SFG = "sfg"


@dataclass(frozen=True)
class PplnStage:
    """One frequency-conversion waveguide.

    ``input_center`` is the design centre of the accepted input band; the
    acceptance window and the telecom noise window are anchored to it.
    ``detuning`` adds a scalar offset of the signal from the design centre
    (drift studies) on top of any offset already present in the line itself.
    """

    direction: Direction
    input_center: float          # Hz, design centre of the accepted input band
    eta_max: float               # peak external conversion efficiency
    eta_nor: float               # normalized conversion efficiency, 1/(W cm^2)
    length_cm: float             # crystal length, cm
    pm_fwhm: float               # phase-matching acceptance FWHM, Hz
    pump_frequency: float        # Hz
    pump_power: float            # W
    coupling_in: float = 1.0
    coupling_out: float = 1.0
    noise_density: float = 0.0   # counts/s/Hz pedestal at reference pump power
    noise_ref_power: float = 0.5  # W
    pump_on: bool = True
    detuning: float = 0.0        # Hz, signal offset from the design centre
    noise_half_width: float = 2e12  # Hz, telecom pedestal half window
    label: str = "stage"

    def __post_init__(self):
        for name in ("eta_max", "coupling_in", "coupling_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        if self.eta_max > self.coupling_in:
            raise DomainError(
                f"eta_max {self.eta_max} exceeds coupling_in {self.coupling_in}; "
                "the implied internal efficiency would exceed 1")
        if self.length_cm <= 0:
            raise DomainError(f"length_cm must be positive, got {self.length_cm}")
        if self.pm_fwhm <= 0:
            raise DomainError(f"pm_fwhm must be positive, got {self.pm_fwhm}")
        if self.eta_nor < 0:
            raise DomainError(f"eta_nor must be non-negative, got {self.eta_nor}")
        if self.pump_power < 0:
            raise DomainError(f"pump_power must be non-negative, got {self.pump_power}")
        if self.pump_frequency <= 0:
            raise DomainError(f"pump_frequency must be positive, got {self.pump_frequency}")
        if self.input_center <= 0:
            raise DomainError(f"input_center must be positive, got {self.input_center}")
        if self.direction == Direction.DFG and self.input_center <= self.pump_frequency:
            raise DomainError(
                "DFG stage requires input_center above the pump frequency")
        if self.noise_density < 0:
            raise DomainError(f"noise_density must be non-negative, got {self.noise_density}")
        if self.noise_ref_power <= 0:
            raise DomainError(f"noise_ref_power must be positive, got {self.noise_ref_power}")
        if self.noise_half_width <= 0:
            raise DomainError(f"noise_half_width must be positive, got {self.noise_half_width}")

    @property
    def internal_peak(self) -> float:
        """Peak internal efficiency, eta_max corrected for input coupling."""
        if self.coupling_in == 0:
            return 0.0
        return self.eta_max / self.coupling_in

    @property
    def output_center(self) -> float:
        return converted_frequency(self.direction, self.input_center, self.pump_frequency)

    @property
    def telecom_center(self) -> float:
        """Centre of the telecom side of this stage (where pump noise lives)."""
        if self.direction == Direction.DFG:
            return self.output_center
        return self.input_center


@dataclass(frozen=True)
class FilterElement:
    """Two-level spectral filter: t_pass inside the passband, t_stop outside."""

    passband: Band
    t_pass: float
    t_stop: float = 0.0
    label: str = "filter"

    def __post_init__(self):
        if not 0.0 <= self.t_stop <= self.t_pass <= 1.0:
            raise DomainError(
                f"filter requires 0 <= t_stop <= t_pass <= 1, got "
                f"t_stop={self.t_stop}, t_pass={self.t_pass}")


@dataclass(frozen=True)
class FiberSegment:
    """A fiber span with per-band attenuation and a lumped coupling factor.

    Attenuation lookups outside every declared band are an error rather than
    a default, so silently unattenuated light cannot slip through.
    """

    length_km: float
    attenuation: tuple[tuple[Band, float], ...]
    coupling: float = 1.0
    label: str = "fiber"

    def __post_init__(self):
        if self.length_km < 0:
            raise DomainError(f"length_km must be non-negative, got {self.length_km}")
        if not 0.0 <= self.coupling <= 1.0:
            raise DomainError(f"coupling must lie in [0, 1], got {self.coupling}")
        bands = sorted(self.attenuation, key=lambda pair: pair[0].lo)
        for (a, alpha_a), (b, _) in zip(bands, bands[1:]):
            if a.hi > b.lo:
                raise DomainError(
                    f"attenuation bands overlap: [{a.lo}, {a.hi}] and [{b.lo}, {b.hi}]")
        for _, alpha in self.attenuation:
            if alpha < 0:
                raise DomainError(f"attenuation must be non-negative, got {alpha} dB/km")

    def alpha_for(self, frequency: float) -> float:
        for band, alpha in self.attenuation:
            if band.contains(frequency):
                return alpha
        raise DomainError(
            f"no attenuation defined at {frequency} Hz for this fiber segment")


@dataclass(frozen=True)
class SpectrometerModel:
    """Grating spectrometer: passband restriction, efficiency, finite resolution."""

    passband: Band
    resolution_fwhm: float
    efficiency: float
    label: str = "spectrometer"

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise DomainError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if self.resolution_fwhm <= 0:
            raise DomainError(
                f"resolution_fwhm must be positive, got {self.resolution_fwhm}")


@dataclass(frozen=True)
class DetectorModel:
    """Photon counter with a sensitivity band, quantum efficiency, dark rate."""

    band: Band
    quantum_efficiency: float = 1.0
    dark_rate: float = 0.0
    label: str = "detector"

    def __post_init__(self):
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            raise DomainError(
                f"quantum_efficiency must lie in [0, 1], got {self.quantum_efficiency}")
        if self.dark_rate < 0:
            raise DomainError(f"dark_rate must be non-negative, got {self.dark_rate}")


def conversion_efficiency(stage: PplnStage) -> float:
    """External conversion efficiency eta_max * sin^2(L * sqrt(P * eta_nor)).

    Returns 0 when the pump is off or has zero power.
    """
    if not stage.pump_on or stage.pump_power == 0.0:
        return 0.0
    arg = stage.length_cm * math.sqrt(stage.pump_power * stage.eta_nor)
    return stage.eta_max * math.sin(arg) ** 2


def derive_eta_nor_from_peak(p_peak: float, length_cm: float) -> float:
    """Normalized efficiency that puts the sin^2 maximum exactly at p_peak."""
    if p_peak <= 0:
        raise DomainError(f"p_peak must be positive, got {p_peak}")
    if length_cm <= 0:
        raise DomainError(f"length_cm must be positive, got {length_cm}")
    return (math.pi / (2.0 * length_cm)) ** 2 / p_peak


def converted_frequency(direction: Direction, input_frequency: float,
                        pump_frequency: float) -> float:
    """Output frequency under exact energy conservation."""
    if direction == Direction.DFG:
        if input_frequency <= pump_frequency:
            raise DomainError(
                f"DFG requires input above the pump, got input "
                f"{input_frequency} Hz <= pump {pump_frequency} Hz")
        return input_frequency - pump_frequency
    return input_frequency + pump_frequency


def phase_matching_factor(detuning: float, pm_fwhm: float) -> float:
    """Normalized sinc^2 acceptance: 1 at zero detuning, 1/2 at +-pm_fwhm/2."""
    if pm_fwhm <= 0:
        raise DomainError(f"pm_fwhm must be positive, got {pm_fwhm}")
    x = 2.0 * SINC2_HALF_POWER_ARG * detuning / pm_fwhm
    if x == 0.0:
        return 1.0
    return (math.sin(x) / x) ** 2


def fiber_transmission(length_km: float, alpha_db_per_km: float) -> float:
    """Power transmission 10^(-alpha * L / 10)."""
    if length_km < 0:
        raise DomainError(f"length_km must be non-negative, got {length_km}")
    if alpha_db_per_km < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha_db_per_km}")
    return 10.0 ** (-alpha_db_per_km * length_km / 10.0)


def _window_weights(grid: FrequencyGrid, lo: float, hi: float) -> np.ndarray:
    """Fractional overlap of each grid bin with [lo, hi], in [0, 1]."""
    w = grid.bin_width
    edges_lo = grid.f_min + np.arange(grid.n_bins) * w
    overlap = np.minimum(edges_lo + w, hi) - np.maximum(edges_lo, lo)
    return np.clip(overlap / w, 0.0, 1.0)


def _shift_deposit(rates: np.ndarray, grid: FrequencyGrid, shift: float) -> np.ndarray:
    """Deposit per-bin photon rates at bin-centre + shift, splitting linearly
    between the two nearest destination bins.  Rates shifted off the grid are
    dropped.  Returns a density array (rate / bin_width)."""
    out = np.zeros(grid.n_bins)
    src = np.nonzero(rates)[0]
    if src.size == 0:
        return out
    w = grid.bin_width
    pos = (grid.bin_centers()[src] + shift - grid.f_min) / w - 0.5
    i0 = np.floor(pos).astype(int)
    frac = pos - i0
    for idx, weight in ((i0, 1.0 - frac), (i0 + 1, frac)):
        ok = (idx >= 0) & (idx < grid.n_bins)
        np.add.at(out, idx[ok], rates[src[ok]] * weight[ok] / w)
    return out


def _stage_pedestal_density(stage: PplnStage) -> float:
    """Pedestal density at the operating pump power (linear pump scaling)."""
    if not stage.pump_on or stage.pump_power == 0.0:
        return 0.0
    return stage.noise_density * (stage.pump_power / stage.noise_ref_power)


def apply_stage(signal: SpectralLine, noise: Spectrum,
                stage: PplnStage) -> tuple[SpectralLine, Spectrum]:
    """Propagate a (line, spectrum) pair through one conversion stage.

    Signal: converted to the output frequency with external efficiency
    times the sinc^2 detuning factor times the output coupling; the
    unconverted remainder is deposited into the output spectrum at the
    original frequency (downstream filters remove it).

    Noise: the slice of incoming density inside the acceptance window is
    frequency-shifted by the pump and converted with the same external
    efficiency; everything else passes attenuated only by the couplings.
    A pumped stage adds its own flat telecom pedestal, which for an SFG
    stage joins the input and is itself partly converted.
    """
    grid = noise.grid
    eta_ext = conversion_efficiency(stage)
    eta_int = eta_ext / stage.coupling_in if stage.coupling_in > 0 else 0.0
    shift = (stage.pump_frequency if stage.direction == Direction.SFG
             else -stage.pump_frequency)

    signal_offset = (signal.center - stage.input_center) + stage.detuning
    pmf = phase_matching_factor(signal_offset, stage.pm_fwhm)

    out_center = converted_frequency(stage.direction, signal.center,
                                     stage.pump_frequency)
    out_line = SpectralLine(out_center, signal.fwhm,
                            signal.rate * eta_ext * pmf * stage.coupling_out)

    incoming = np.array(noise.density, copy=True)
    pedestal = _stage_pedestal_density(stage)
    tel_lo = stage.telecom_center - stage.noise_half_width
    tel_hi = stage.telecom_center + stage.noise_half_width
    if pedestal > 0 and stage.direction == Direction.SFG:
        incoming += pedestal * _window_weights(grid, tel_lo, tel_hi)

    acc = _window_weights(grid, stage.input_center - stage.pm_fwhm / 2,
                          stage.input_center + stage.pm_fwhm / 2)
    passed = incoming * stage.coupling_in * stage.coupling_out * (1.0 - eta_int * acc)
    converted_rates = incoming * grid.bin_width * eta_ext * stage.coupling_out * acc
    out_density = passed + _shift_deposit(converted_rates, grid, shift)

    leak_rate = signal.rate * stage.coupling_in * (1.0 - eta_int * pmf) * stage.coupling_out
    if leak_rate > 0 and grid.contains(signal.center):
        _deposit_line(out_density, grid, signal.with_rate(leak_rate))

    if pedestal > 0 and stage.direction == Direction.DFG:
        out_density += pedestal * _window_weights(grid, tel_lo, tel_hi)

    return out_line, Spectrum(grid, out_density)


def apply_filter(line: SpectralLine, noise: Spectrum,
                 f: FilterElement) -> tuple[SpectralLine, Spectrum]:
    """Two-level transmission applied to line and spectrum."""
    t_line = f.t_pass if f.passband.contains(line.center) else f.t_stop
    centers = noise.grid.bin_centers()
    inside = (centers >= f.passband.lo) & (centers <= f.passband.hi)
    trans = np.where(inside, f.t_pass, f.t_stop)
    return line.with_rate(line.rate * t_line), Spectrum(noise.grid, noise.density * trans)


def apply_fiber(line: SpectralLine, noise: Spectrum,
                seg: FiberSegment) -> tuple[SpectralLine, Spectrum]:
    """Coupling plus per-band exponential attenuation.

    Bins carrying density outside every declared attenuation band raise a
    domain error; zero-density bins pass with the coupling factor alone.
    """
    t_line = seg.coupling * fiber_transmission(seg.length_km, seg.alpha_for(line.center))
    trans = np.full(noise.grid.n_bins, np.nan)
    centers = noise.grid.bin_centers()
    for band, alpha in seg.attenuation:
        inside = (centers >= band.lo) & (centers <= band.hi)
        trans[inside] = fiber_transmission(seg.length_km, alpha)
    undefined = np.isnan(trans)
    if np.any(undefined & (noise.density > 0)):
        first = int(np.nonzero(undefined & (noise.density > 0))[0][0])
        raise DomainError(
            f"fiber attenuation undefined at {centers[first]} Hz "
            "where the spectrum is non-zero")
    trans[undefined] = 0.0
    return (line.with_rate(line.rate * t_line),
            Spectrum(noise.grid, noise.density * trans * seg.coupling))


def apply_spectrometer(line: SpectralLine, noise: Spectrum,
                       m: SpectrometerModel) -> tuple[SpectralLine, Spectrum]:
    """Passband restriction at the grating efficiency, then a top-hat blur of
    the broadband noise at the instrument resolution (integral preserved)."""
    as_filter = FilterElement(m.passband, t_pass=m.efficiency, t_stop=0.0)
    line, noise = apply_filter(line, noise, as_filter)
    kernel_bins = max(1, round(m.resolution_fwhm / noise.grid.bin_width))
    if kernel_bins > 1:
        kernel = np.full(kernel_bins, 1.0 / kernel_bins)
        blurred = np.convolve(noise.density, kernel, mode="same")
        noise = Spectrum(noise.grid, blurred)
    return line, noise


def detect(line: SpectralLine, noise: Spectrum, d: DetectorModel) -> float:
    """Detector reading in counts/s: QE * (in-band line + in-band noise) + dark."""
    line_part = line.rate if d.band.contains(line.center) else 0.0
    return d.quantum_efficiency * (line_part + integrate_band(noise, d.band)) + d.dark_rate


def stage_with_pump(stage: PplnStage, pump_on: bool) -> PplnStage:
    return replace(stage, pump_on=pump_on)
