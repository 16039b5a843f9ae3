"""Unit tests for the optical element models."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfclink import (
    Band,
    DetectorModel,
    Direction,
    DomainError,
    FiberSegment,
    FilterElement,
    FrequencyGrid,
    PplnStage,
    SpectralLine,
    Spectrum,
    SpectrometerModel,
    conversion_efficiency,
    converted_frequency,
    derive_eta_nor_from_peak,
    detect,
    fiber_transmission,
    phase_matching_factor,
    wavelength_to_frequency,
    zero_spectrum,
)
from qfclink.photonics import apply_fiber, apply_filter, apply_spectrometer, apply_stage

# Frozen oracle: (pi / (2 * 4.8))^2 / 0.5 evaluated at 50-digit precision.
ETA_NOR_48MM_500MW = 0.21418412328752948
# Frozen oracle: sinc^2 at a 1 GHz detuning with a 40 GHz FWHM.
PMF_1GHZ_40GHZ = 0.998387347961497

NU_SIGNAL = wavelength_to_frequency(637.2)
NU_PUMP = wavelength_to_frequency(1071.0)
NU_TELECOM = NU_SIGNAL - NU_PUMP


def make_stage(direction=Direction.DFG, *, eta_max=0.271, coupling_in=0.31,
               pump_power=0.5, pump_on=True, noise_density=0.0, dfg_center=NU_SIGNAL,
               sfg_center=NU_TELECOM, pm_fwhm=40e9, detuning=0.0):
    return PplnStage(
        direction=direction,
        input_center=dfg_center if direction == Direction.DFG else sfg_center,
        eta_max=eta_max,
        eta_nor=ETA_NOR_48MM_500MW,
        length_cm=4.8,
        pm_fwhm=pm_fwhm,
        pump_frequency=NU_PUMP,
        pump_power=pump_power,
        coupling_in=coupling_in,
        coupling_out=1.0,
        noise_density=noise_density,
        noise_ref_power=0.5,
        pump_on=pump_on,
        detuning=detuning,
    )


def wide_grid(n_bins=20000):
    return FrequencyGrid(187.5e12, 474.0e12, n_bins)


class TestConversionEfficiency:
    def test_zero_pump_power(self):
        assert conversion_efficiency(make_stage(pump_power=0.0)) == 0.0

    def test_pump_off(self):
        assert conversion_efficiency(make_stage(pump_on=False)) == 0.0

    def test_peak_value(self):
        # L * sqrt(0.5 * eta_nor) lands exactly on pi/2 by construction
        assert conversion_efficiency(make_stage()) == 0.271

    def test_quarter_power(self):
        # sin^2(pi/4) = 1/2 exactly
        eta = conversion_efficiency(make_stage(pump_power=0.125))
        assert eta == pytest.approx(0.271 * 0.5, rel=1e-12)


class TestDeriveEtaNor:
    def test_frozen_oracle(self):
        assert derive_eta_nor_from_peak(0.5, 4.8) == pytest.approx(
            ETA_NOR_48MM_500MW, rel=1e-15)

    def test_symbols_cancel(self):
        assert derive_eta_nor_from_peak(1.0, math.pi / 2) == pytest.approx(1.0, rel=1e-12)

    def test_round_trip_peak_is_maximum(self):
        stage = make_stage()
        assert conversion_efficiency(stage) == pytest.approx(stage.eta_max, rel=1e-12)

    @pytest.mark.parametrize("p,l", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
    def test_nonpositive_rejected(self, p, l):
        with pytest.raises(DomainError):
            derive_eta_nor_from_peak(p, l)


class TestConvertedFrequency:
    def test_dfg_lands_near_1573nm(self):
        out = converted_frequency(Direction.DFG, NU_SIGNAL, NU_PUMP)
        wavelength_nm = 299792458.0 / out * 1e9
        assert abs(wavelength_nm - 1573.0) <= 0.5

    def test_sfg_after_dfg_is_identity(self):
        down = converted_frequency(Direction.DFG, NU_SIGNAL, NU_PUMP)
        up = converted_frequency(Direction.SFG, down, NU_PUMP)
        assert up == NU_SIGNAL  # bit-exact

    def test_dfg_requires_input_above_pump(self):
        with pytest.raises(DomainError):
            converted_frequency(Direction.DFG, NU_PUMP, NU_PUMP)


class TestPhaseMatchingFactor:
    def test_peak(self):
        assert phase_matching_factor(0.0, 40e9) == 1.0

    def test_half_power_at_half_fwhm(self):
        for sign in (+1, -1):
            assert phase_matching_factor(sign * 20e9, 40e9) == pytest.approx(
                0.5, abs=1e-9)

    def test_half_power_constant_against_bisection_oracle(self):
        # Independent oracle: bisect sinc^2(x) = 1/2 on [1, 2].
        f = lambda x: (math.sin(x) / x) ** 2 - 0.5
        lo, hi = 1.0, 2.0
        for _ in range(200):
            mid = (lo + hi) / 2
            if f(mid) > 0:
                lo = mid
            else:
                hi = mid
        x0 = (lo + hi) / 2
        assert phase_matching_factor(x0 * 40e9 / (2 * 1.3915573782515101), 40e9) \
            == pytest.approx(0.5, abs=1e-9)

    def test_one_ghz_drift_is_negligible(self):
        pmf = phase_matching_factor(1e9, 40e9)
        assert pmf > 0.99
        assert pmf == pytest.approx(PMF_1GHZ_40GHZ, rel=1e-12)

    @given(st.floats(min_value=-1e12, max_value=1e12))
    def test_even_and_bounded(self, detuning):
        pmf = phase_matching_factor(detuning, 40e9)
        assert 0.0 <= pmf <= 1.0
        assert pmf == phase_matching_factor(-detuning, 40e9)
        # strictly below 1 once the detuning is resolvable in double precision
        if abs(detuning) > 1e-4 * 40e9:
            assert pmf < 1.0


class TestStageValidation:
    def test_internal_efficiency_must_not_exceed_one(self):
        with pytest.raises(DomainError):
            make_stage(eta_max=0.5, coupling_in=0.31)

    def test_dfg_input_above_pump(self):
        with pytest.raises(DomainError):
            make_stage(direction=Direction.DFG, dfg_center=NU_PUMP / 2)


class TestApplyStage:
    def test_external_ratio_dfg(self):
        grid = wide_grid()
        line = SpectralLine(NU_SIGNAL, 10e6, 1e6)
        out_line, _ = apply_stage(line, zero_spectrum(grid), make_stage())
        assert out_line.rate / line.rate == pytest.approx(0.271, rel=1e-12)
        assert make_stage().internal_peak == pytest.approx(0.874, abs=0.005)

    def test_external_ratio_sfg(self):
        grid = wide_grid()
        line = SpectralLine(NU_TELECOM, 10e6, 1e6)
        stage = make_stage(Direction.SFG, eta_max=0.256, coupling_in=0.35)
        out_line, _ = apply_stage(line, zero_spectrum(grid), stage)
        assert out_line.rate / line.rate == pytest.approx(0.256, rel=1e-12)
        assert stage.internal_peak == pytest.approx(0.731, abs=0.005)

    def test_linewidth_and_center_conversion(self):
        grid = wide_grid()
        line = SpectralLine(NU_SIGNAL, 10e6, 1e6)
        out_line, _ = apply_stage(line, zero_spectrum(grid), make_stage())
        assert out_line.fwhm == line.fwhm
        assert out_line.center == NU_SIGNAL - NU_PUMP

    def test_pump_off_passes_leakage_only(self):
        grid = wide_grid()
        line = SpectralLine(NU_SIGNAL, 10e6, 1e6)
        stage = make_stage(pump_on=False)
        out_line, out_noise = apply_stage(line, zero_spectrum(grid), stage)
        assert out_line.rate == 0.0
        # unconverted signal leaks into the spectrum at coupling_in * coupling_out
        assert out_noise.total() == pytest.approx(1e6 * 0.31, rel=1e-9)
        band = Band(NU_SIGNAL - 1e9, NU_SIGNAL + 1e9)
        from qfclink import integrate_band
        assert integrate_band(out_noise, band) == pytest.approx(1e6 * 0.31, rel=1e-9)

    def test_pump_off_adds_no_pedestal(self):
        grid = wide_grid()
        line = SpectralLine(NU_SIGNAL, 10e6, 0.0)
        stage = make_stage(pump_on=False, noise_density=1e-3)
        _, out_noise = apply_stage(line, zero_spectrum(grid), stage)
        assert out_noise.total() == 0.0

    def test_dfg_pedestal_sits_in_telecom_window(self):
        grid = wide_grid()
        line = SpectralLine(NU_SIGNAL, 10e6, 0.0)
        stage = make_stage(noise_density=1e-3)
        _, out_noise = apply_stage(line, zero_spectrum(grid), stage)
        from qfclink import integrate_band
        window = Band(stage.telecom_center - 2e12, stage.telecom_center + 2e12)
        assert integrate_band(out_noise, window) == pytest.approx(
            out_noise.total(), rel=1e-6)
        assert out_noise.total() == pytest.approx(1e-3 * 4e12, rel=1e-3)

    def test_sfg_converts_own_pedestal_into_acceptance_image(self):
        grid = wide_grid(100000)
        line = SpectralLine(NU_TELECOM, 10e6, 0.0)
        stage = make_stage(Direction.SFG, eta_max=0.256, coupling_in=0.35,
                           noise_density=1e-3)
        _, out_noise = apply_stage(line, zero_spectrum(grid), stage)
        from qfclink import integrate_band
        image_band = Band(NU_SIGNAL - 25e9, NU_SIGNAL + 25e9)
        converted = integrate_band(out_noise, image_band)
        # flat acceptance window: density * 40 GHz * eta_ext * coupling_out
        assert converted == pytest.approx(1e-3 * 40e9 * 0.256, rel=1e-9)

    def test_incoming_noise_outside_acceptance_passes_with_couplings(self):
        grid = wide_grid(100000)
        stage = make_stage(Direction.SFG, eta_max=0.256, coupling_in=0.35)
        density = np.zeros(grid.n_bins)
        # flat block 1 THz above the acceptance window, 100 GHz wide
        lo = NU_TELECOM + 1e12
        centers = grid.bin_centers()
        block = (centers > lo) & (centers < lo + 1e11)
        density[block] = 2.0
        incoming = Spectrum(grid, density)
        line = SpectralLine(NU_TELECOM, 10e6, 0.0)
        _, out_noise = apply_stage(line, incoming, stage)
        assert out_noise.total() == pytest.approx(
            incoming.total() * 0.35 * 1.0, rel=1e-9)

    def test_incoming_noise_in_acceptance_converts_and_depletes(self):
        grid = wide_grid(200000)
        stage = make_stage(Direction.SFG, eta_max=0.256, coupling_in=0.35)
        density = np.zeros(grid.n_bins)
        centers = grid.bin_centers()
        inside = np.abs(centers - NU_TELECOM) < 10e9  # strictly inside the window
        density[inside] = 1.0
        incoming = Spectrum(grid, density)
        line = SpectralLine(NU_TELECOM, 10e6, 0.0)
        _, out_noise = apply_stage(line, incoming, stage)
        from qfclink import integrate_band
        rate_in = incoming.total()
        converted = integrate_band(out_noise, Band(NU_SIGNAL - 20e9, NU_SIGNAL + 20e9))
        remaining = integrate_band(out_noise, Band(NU_TELECOM - 20e9, NU_TELECOM + 20e9))
        eta_int = 0.256 / 0.35
        assert converted == pytest.approx(rate_in * 0.256, rel=1e-9)
        assert remaining == pytest.approx(rate_in * 0.35 * (1 - eta_int), rel=1e-9)


class TestApplyFilter:
    def setup_method(self):
        self.grid = FrequencyGrid(1e14, 2e14, 1000)
        self.line = SpectralLine(1.5e14, 1e7, 1000.0)
        self.noise = Spectrum(self.grid, np.ones(1000))

    def test_identity(self):
        f = FilterElement(Band(1e12, 1e15), t_pass=1.0, t_stop=1.0)
        line, noise = apply_filter(self.line, self.noise, f)
        assert line.rate == 1000.0
        assert np.array_equal(noise.density, self.noise.density)

    def test_stopband_zeroed(self):
        f = FilterElement(Band(1.4e14, 1.6e14), t_pass=1.0, t_stop=0.0)
        _, noise = apply_filter(self.line, self.noise, f)
        centers = self.grid.bin_centers()
        outside = (centers < 1.4e14) | (centers > 1.6e14)
        assert np.all(noise.density[outside] == 0.0)

    def test_line_in_passband(self):
        f = FilterElement(Band(1.4e14, 1.6e14), t_pass=0.87, t_stop=0.0)
        line, _ = apply_filter(self.line, self.noise, f)
        assert line.rate == pytest.approx(870.0, rel=1e-12)

    def test_invariant_ordering(self):
        with pytest.raises(DomainError):
            FilterElement(Band(1e12, 2e12), t_pass=0.5, t_stop=0.6)


class TestFiber:
    def test_50km_at_02(self):
        assert fiber_transmission(50.0, 0.2) == pytest.approx(0.1, rel=1e-12)

    def test_zero_length(self):
        assert fiber_transmission(0.0, 0.2) == 1.0

    def test_10km_at_1db(self):
        assert fiber_transmission(10.0, 1.0) == pytest.approx(0.1, rel=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            fiber_transmission(-1.0, 0.2)

    def test_lookup_outside_band_with_density_is_error(self):
        grid = FrequencyGrid(1e14, 2e14, 100)
        seg = FiberSegment(1.0, ((Band(1e14, 1.4e14), 0.2),), coupling=1.0)
        noise = Spectrum(grid, np.ones(100))
        line = SpectralLine(1.2e14, 1e7, 1.0)
        with pytest.raises(DomainError):
            apply_fiber(line, noise, seg)

    def test_zero_density_outside_band_passes(self):
        grid = FrequencyGrid(1e14, 2e14, 100)
        seg = FiberSegment(5.0, ((Band(1e14, 1.4e14), 0.2),), coupling=0.5)
        density = np.zeros(100)
        density[:10] = 1.0  # centres near f_min, inside the band
        line = SpectralLine(1.2e14, 1e7, 100.0)
        out_line, out_noise = apply_fiber(line, Spectrum(grid, density), seg)
        t = 0.5 * fiber_transmission(5.0, 0.2)
        assert out_line.rate == pytest.approx(100.0 * t, rel=1e-12)
        assert out_noise.total() == pytest.approx(
            Spectrum(grid, density).total() * t, rel=1e-12)

    def test_overlapping_bands_rejected(self):
        with pytest.raises(DomainError):
            FiberSegment(1.0, ((Band(1e14, 1.5e14), 0.2),
                               (Band(1.4e14, 2e14), 0.3)))


class TestDetector:
    def test_zero_inputs_give_dark(self):
        grid = FrequencyGrid(1e14, 2e14, 100)
        d = DetectorModel(Band(1.2e14, 1.6e14), 1.0, dark_rate=123.0)
        line = SpectralLine(1.5e14, 1e7, 0.0)
        assert detect(line, zero_spectrum(grid), d) == 123.0

    def test_line_only(self):
        grid = FrequencyGrid(1e14, 2e14, 100)
        d = DetectorModel(Band(1.2e14, 1.6e14), 1.0, dark_rate=0.0)
        line = SpectralLine(1.5e14, 1e7, 777.0)
        assert detect(line, zero_spectrum(grid), d) == 777.0

    def test_flat_noise_rectangle(self):
        # 2.5e-6 cts/s/Hz over a 40 GHz band reads 1e5 cts/s
        grid = FrequencyGrid(1e14, 1e14 + 40e9, 2000)
        d = DetectorModel(Band(grid.f_min, grid.f_max), 1.0, dark_rate=0.0)
        line = SpectralLine(1e14 + 20e9, 1e7, 0.0)
        noise = Spectrum(grid, np.full(2000, 2.5e-6))
        assert detect(line, noise, d) == pytest.approx(1.0e5, rel=1e-9)

    def test_monotone_in_inputs(self):
        grid = FrequencyGrid(1e14, 2e14, 50)
        d = DetectorModel(Band(1.1e14, 1.9e14), 0.8, dark_rate=10.0)
        line_lo = SpectralLine(1.5e14, 1e7, 10.0)
        line_hi = SpectralLine(1.5e14, 1e7, 20.0)
        noise_lo = Spectrum(grid, np.full(50, 1e-9))
        noise_hi = Spectrum(grid, np.full(50, 2e-9))
        assert detect(line_hi, noise_lo, d) >= detect(line_lo, noise_lo, d)
        assert detect(line_lo, noise_hi, d) >= detect(line_lo, noise_lo, d)


class TestSpectrometer:
    def test_identity_configuration(self):
        grid = FrequencyGrid(1e14, 2e14, 100)
        m = SpectrometerModel(Band(1e12, 1e15), resolution_fwhm=grid.bin_width / 2,
                              efficiency=1.0)
        line = SpectralLine(1.5e14, 1e7, 5.0)
        noise = Spectrum(grid, np.ones(100))
        out_line, out_noise = apply_spectrometer(line, noise, m)
        assert out_line.rate == 5.0
        assert np.allclose(out_noise.density, noise.density)

    def test_order_of_magnitude_penalty(self):
        grid = FrequencyGrid(1e14, 2e14, 100)
        m = SpectrometerModel(Band(1e12, 1e15), resolution_fwhm=1e9, efficiency=0.1)
        line = SpectralLine(1.5e14, 1e7, 1000.0)
        noise = Spectrum(grid, np.ones(100))
        out_line, out_noise = apply_spectrometer(line, noise, m)
        assert out_line.rate == pytest.approx(100.0, rel=1e-12)
        assert out_noise.total() == pytest.approx(noise.total() * 0.1, rel=1e-9)

    def test_spike_becomes_top_hat_with_same_integral(self):
        grid = FrequencyGrid(1e14, 1e14 + 1e12, 10000)  # 100 MHz bins
        m = SpectrometerModel(Band(1e12, 1e15), resolution_fwhm=40e9, efficiency=1.0)
        density = np.zeros(10000)
        density[5000] = 7.0
        noise = Spectrum(grid, density)
        line = SpectralLine(1e14 + 5e11, 1e7, 0.0)
        _, out_noise = apply_spectrometer(line, noise, m)
        assert out_noise.total() == pytest.approx(noise.total(), rel=1e-9)
        width_bins = int(np.count_nonzero(out_noise.density))
        assert width_bins == round(40e9 / grid.bin_width)
