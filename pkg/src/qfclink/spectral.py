"""Frequency-domain primitives: uniform grids, photon-flux spectra, narrow lines.

The whole engine works in frequency (Hz); wavelengths appear only at I/O
boundaries.  Spectra carry photon-flux density (counts/s/Hz) per bin, so
band integrals are photon rates and conversion efficiencies act linearly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridMismatchError, OutOfRangeError

SPEED_OF_LIGHT = 299_792_458.0
"""Vacuum speed of light in m/s, exact by definition."""


def wavelength_to_frequency(wavelength_nm: float) -> float:
    """Convert a vacuum wavelength in nanometres to a frequency in Hz."""
    if wavelength_nm <= 0:
        raise DomainError(f"wavelength must be positive, got {wavelength_nm} nm")
    return SPEED_OF_LIGHT / (wavelength_nm * 1e-9)


def frequency_to_wavelength(frequency_hz: float) -> float:
    """Inverse of :func:`wavelength_to_frequency` (Hz to nm)."""
    if frequency_hz <= 0:
        raise DomainError(f"frequency must be positive, got {frequency_hz} Hz")
    return SPEED_OF_LIGHT / frequency_hz * 1e9


@dataclass(frozen=True)
class Band:
    """A closed frequency interval [lo, hi] in Hz."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0 < self.lo < self.hi):
            raise DomainError(f"band requires 0 < lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, frequency: float) -> bool:
        return self.lo <= frequency <= self.hi


@dataclass(frozen=True)
class FrequencyGrid:
    """A uniform frequency axis from f_min to f_max split into n_bins bins.

    Bin i spans [f_min + i*w, f_min + (i+1)*w] with w = (f_max - f_min)/n_bins;
    its representative centre is the midpoint.  All band logic is bin-centre
    based, so edge errors vanish under refinement.
    """

    f_min: float
    f_max: float
    n_bins: int

    def __post_init__(self):
        if self.f_min <= 0:
            raise DomainError(f"f_min must be positive, got {self.f_min}")
        if self.f_max <= self.f_min:
            raise DomainError(f"f_max must exceed f_min, got [{self.f_min}, {self.f_max}]")
        if not isinstance(self.n_bins, int) or self.n_bins < 2:
            raise DomainError(f"n_bins must be an integer >= 2, got {self.n_bins!r}")

    @property
    def bin_width(self) -> float:
        return (self.f_max - self.f_min) / self.n_bins

    @property
    def span(self) -> float:
        return self.f_max - self.f_min

    def bin_centers(self) -> np.ndarray:
        return self.f_min + (np.arange(self.n_bins) + 0.5) * self.bin_width

    def contains(self, frequency: float) -> bool:
        return self.f_min <= frequency <= self.f_max

    def bin_index(self, frequency: float) -> int:
        """Index of the bin holding `frequency` (clipped to valid range)."""
        if not self.contains(frequency):
            raise OutOfRangeError(
                f"{frequency} Hz outside grid [{self.f_min}, {self.f_max}]")
        idx = int((frequency - self.f_min) / self.bin_width)
        return min(max(idx, 0), self.n_bins - 1)

    def refined(self, factor: int = 2) -> "FrequencyGrid":
        return FrequencyGrid(self.f_min, self.f_max, self.n_bins * factor)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Per-bin photon-flux density (counts/s/Hz) on a frequency grid.

    Immutable: the density array is copied and marked read-only at
    construction, so spectra can be shared between snapshots safely.
    """

    grid: FrequencyGrid
    density: np.ndarray

    def __post_init__(self):
        arr = np.array(self.density, dtype=float, copy=True)
        if arr.shape != (self.grid.n_bins,):
            raise GridMismatchError(
                f"density has shape {arr.shape}, grid has {self.grid.n_bins} bins")
        if not np.all(np.isfinite(arr)):
            raise DomainError("density values must be finite")
        if np.any(arr < 0):
            raise DomainError("density values must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "density", arr)

    def total(self) -> float:
        """Total photon rate over the whole grid (counts/s)."""
        return float(self.density.sum() * self.grid.bin_width)


@dataclass(frozen=True)
class SpectralLine:
    """A narrowband signal: centre frequency, FWHM linewidth, photon rate."""

    center: float
    fwhm: float
    rate: float

    def __post_init__(self):
        if self.center <= 0:
            raise DomainError(f"line center must be positive, got {self.center}")
        if self.fwhm <= 0:
            raise DomainError(f"line fwhm must be positive, got {self.fwhm}")
        if self.rate < 0:
            raise DomainError(f"line rate must be non-negative, got {self.rate}")

    def with_rate(self, rate: float) -> "SpectralLine":
        return SpectralLine(self.center, self.fwhm, rate)


def zero_spectrum(grid: FrequencyGrid) -> Spectrum:
    return Spectrum(grid, np.zeros(grid.n_bins))


def integrate_band(s: Spectrum, band: Band) -> float:
    """Photon rate (counts/s) in `band`.

    Sums density * bin_width over bins whose centres fall in [lo, hi];
    partial-edge bins count whole.  A band fully off the grid yields 0.
    """
    centers = s.grid.bin_centers()
    mask = (centers >= band.lo) & (centers <= band.hi)
    if not mask.any():
        return 0.0
    return float(s.density[mask].sum() * s.grid.bin_width)


def scale(s: Spectrum, k: float) -> Spectrum:
    """Pointwise multiplication by a non-negative factor."""
    if k < 0:
        raise DomainError(f"scale factor must be non-negative, got {k}")
    return Spectrum(s.grid, s.density * k)


def add(a: Spectrum, b: Spectrum) -> Spectrum:
    """Pointwise sum; both spectra must share the same grid."""
    if a.grid != b.grid:
        raise GridMismatchError(f"cannot add spectra on grids {a.grid} and {b.grid}")
    return Spectrum(a.grid, a.density + b.density)


def line_to_spectrum(line: SpectralLine, grid: FrequencyGrid) -> Spectrum:
    """Deposit a line as a flat top-hat of width max(fwhm, one bin).

    Membership is bin-centre based on the half-open window
    [center - w/2, center + w/2), so a line of width k bins lands on exactly
    k bins regardless of alignment.  The full rate is conserved exactly by
    normalising over the selected bins.
    """
    dens = np.zeros(grid.n_bins)
    dens = _deposit_line(dens, grid, line)
    return Spectrum(grid, dens)


def _deposit_line(dens: np.ndarray, grid: FrequencyGrid, line: SpectralLine) -> np.ndarray:
    """Add a line deposit to a density array in place; returns the array."""
    if not grid.contains(line.center):
        raise OutOfRangeError(
            f"line center {line.center} Hz outside grid [{grid.f_min}, {grid.f_max}]")
    if line.rate == 0:
        return dens
    width = max(line.fwhm, grid.bin_width)
    centers = grid.bin_centers()
    mask = (centers >= line.center - width / 2) & (centers < line.center + width / 2)
    n = int(mask.sum())
    if n == 0:
        idx = grid.bin_index(line.center)
        dens[idx] += line.rate / grid.bin_width
        return dens
    dens[mask] += line.rate / (n * grid.bin_width)
    return dens
