"""SNR budget, sweep, attribution, and calibration tests."""
from dataclasses import replace

import numpy as np
import pytest

from qfclink import (
    DomainError,
    InfeasibleError,
    calibrate_noise_density,
    estimate_snr,
    noise_attribution,
    propagate,
    standard_scenario,
    sweep_distance,
    sweep_pump_power,
)
from qfclink.analysis import snr_noise_variant
from qfclink.photonics import PplnStage

N_BINS = 20000  # coarse grid is exact for these budgets; keeps tests fast


@pytest.fixture(scope="module")
def calibrated():
    """Standard scenario with the pedestal calibrated so the SNR-variant
    chain reports 1e5 counts/s of noise in the detector band."""
    s = standard_scenario(n_bins=N_BINS)
    density = calibrate_noise_density(1e5, snr_noise_variant(s))
    return s.with_stage_noise_density(density)


class TestEstimateSnr:
    def test_paper_budget_at_zero_km(self, calibrated):
        report = estimate_snr(calibrated, 10e6, 0.0)
        assert report.signal_rate == pytest.approx(1e6 * 0.271 * 0.256, rel=1e-9)
        assert report.noise_rate == pytest.approx(25.0 + 100.0, rel=1e-9)
        assert 500.0 <= report.snr <= 2000.0  # factor 2 around 1000

    def test_paper_budget_at_fifty_km(self, calibrated):
        report = estimate_snr(calibrated, 10e6, 50.0)
        assert 50.0 <= report.snr <= 200.0  # factor 2 around 100

    def test_ideal_filtering_noise_order_ten(self, calibrated):
        report = estimate_snr(calibrated, 10e6, 0.0, noise_floor=0.0)
        assert report.noise_rate == pytest.approx(25.0, rel=1e-9)

    def test_bandwidth_gain_is_exact(self, calibrated):
        report = estimate_snr(calibrated, 10e6, 0.0)
        assert report.bandwidth_gain == 4000.0

    def test_snr_arithmetic_identity(self, calibrated):
        report = estimate_snr(calibrated, 10e6, 0.0)
        assert report.snr * (report.noise_rate + report.dark_rate) == pytest.approx(
            report.signal_rate, rel=1e-9)

    def test_bandwidth_ratio_law(self, calibrated):
        # halving the final bandwidth halves the pedestal noise, signal fixed
        bw = 10e6
        full = estimate_snr(calibrated, bw, 0.0, noise_floor=0.0)
        half = estimate_snr(calibrated, bw / 2, 0.0, noise_floor=0.0)
        assert half.noise_rate == pytest.approx(full.noise_rate / 2, rel=1e-9)
        assert half.signal_rate == full.signal_rate
        # the law applies down to the signal linewidth (10 MHz here)
        at_linewidth = estimate_snr(calibrated, calibrated.source.fwhm, 0.0,
                                    noise_floor=0.0)
        assert at_linewidth.noise_rate == pytest.approx(full.noise_rate, rel=1e-9)

    def test_wide_filter_never_amplifies(self, calibrated):
        report = estimate_snr(calibrated, 80e9, 0.0, noise_floor=0.0)
        assert report.bandwidth_gain == 1.0

    def test_invalid_inputs(self, calibrated):
        with pytest.raises(DomainError):
            estimate_snr(calibrated, 0.0, 0.0)
        with pytest.raises(DomainError):
            estimate_snr(calibrated, 10e6, -1.0)

    def test_stagewise_breakdown_present(self, calibrated):
        report = estimate_snr(calibrated, 10e6, 0.0)
        labels = [label for label, _, _ in report.stagewise]
        assert labels[0] == "source"
        assert "ppln2" in labels
        assert len(report.assumptions) >= 3


class TestSweepPumpPower:
    def test_zero_row(self):
        s = standard_scenario(n_bins=N_BINS)
        assert sweep_pump_power(s, [0.0]) == [(0.0, 0.0, 0.0, 0.0)]

    def test_paper_maxima_at_half_watt(self):
        s = standard_scenario(n_bins=N_BINS)
        rows = sweep_pump_power(s, [0.5])
        p, dfg, sfg, total = rows[0]
        assert dfg == 0.271
        assert sfg == 0.256
        assert total == pytest.approx(0.271 * 0.256, rel=1e-12)

    def test_monotone_up_to_peak(self):
        s = standard_scenario(n_bins=N_BINS)
        powers = list(np.linspace(0.0, 0.5, 26))
        rows = sweep_pump_power(s, powers)
        for col in (1, 2, 3):
            values = [row[col] for row in rows]
            assert all(b >= a for a, b in zip(values, values[1:]))

    def test_negative_power_rejected(self):
        s = standard_scenario(n_bins=N_BINS)
        with pytest.raises(DomainError):
            sweep_pump_power(s, [-0.1])


class TestSweepDistance:
    def test_fifty_km_ratio_is_ten(self, calibrated):
        rows = dict(sweep_distance(calibrated, [0.0, 50.0]))
        assert rows[0.0] / rows[50.0] == pytest.approx(10.0, rel=1e-12)

    def test_two_db_total_loss_keeps_snr_within_37_percent(self, calibrated):
        rows = dict(sweep_distance(calibrated, [0.0, 10.0]))  # 10 km at 0.2 dB/km
        ratio = rows[10.0] / rows[0.0]
        assert ratio == pytest.approx(10 ** -0.2, rel=1e-12)
        assert ratio >= 0.63

    def test_empty_list(self, calibrated):
        assert sweep_distance(calibrated, []) == []

    def test_strictly_decreasing(self, calibrated):
        rows = sweep_distance(calibrated, list(np.linspace(0, 60, 13)))
        snrs = [snr for _, snr in rows]
        assert all(b < a for a, b in zip(snrs, snrs[1:]))


class TestNoiseAttribution:
    def test_ratio_and_dark(self, calibrated):
        report = noise_attribution(calibrated)
        assert report.counts_both >= report.counts_stage2_only >= 0.0
        assert report.ratio_both_to_stage2 == pytest.approx(1.40, abs=0.05)
        assert report.counts_stage1_only == calibrated.detector.dark_rate

    def test_all_pumps_off(self, calibrated):
        blocked = calibrated.with_pump_flags((False, False))
        counts = propagate(blocked.with_source_rate(0.0)).detector_counts
        assert counts == calibrated.detector.dark_rate

    def test_attribution_respects_scenario_pump_state(self, calibrated):
        # with both pumps off in the scenario, all three cases read dark
        report = noise_attribution(calibrated.with_pump_flags((False, False)))
        dark = calibrated.detector.dark_rate
        assert report.counts_both == dark
        assert report.counts_stage2_only == dark
        assert report.counts_stage1_only == dark

    def test_superposition(self, calibrated):
        # both-pumps noise = stage2-only noise + the stage-1 pedestal
        # propagated with the second pump running
        report = noise_attribution(calibrated)
        elements = []
        for el in calibrated.elements:
            if isinstance(el, PplnStage) and el.label == "ppln2":
                elements.append(replace(el, noise_density=0.0))
            else:
                elements.append(el)
        stage1_only_path = replace(calibrated.with_source_rate(0.0),
                                   elements=tuple(elements))
        stage1_noise = (propagate(stage1_only_path).detector_counts
                        - calibrated.detector.dark_rate)
        assert report.noise_both == pytest.approx(
            report.noise_stage2_only + stage1_noise, rel=1e-9)

    def test_requires_two_stages(self):
        s = standard_scenario(n_bins=N_BINS)
        one_stage = replace(s, elements=tuple(
            el for el in s.elements
            if not (isinstance(el, PplnStage) and el.label == "ppln2")))
        with pytest.raises(DomainError):
            noise_attribution(one_stage)


class TestCalibration:
    def test_target_equal_dark_gives_zero(self):
        s = standard_scenario(n_bins=N_BINS)
        assert calibrate_noise_density(s.detector.dark_rate, s) == 0.0

    def test_below_dark_rejected(self):
        s = standard_scenario(n_bins=N_BINS)
        with pytest.raises(DomainError):
            calibrate_noise_density(s.detector.dark_rate / 2, s)

    def test_linearity(self):
        s = standard_scenario(n_bins=N_BINS)
        dark = s.detector.dark_rate
        d1 = calibrate_noise_density(dark + 1e4, s)
        d2 = calibrate_noise_density(dark + 2e4, s)
        assert d2 == pytest.approx(2 * d1, rel=1e-12)

    def test_fixed_point(self):
        s = standard_scenario(n_bins=N_BINS)
        target = 1e5
        density = calibrate_noise_density(target, s)
        check = propagate(
            s.with_source_rate(0.0).with_stage_noise_density(density)
        ).detector_counts
        assert check == pytest.approx(target, rel=1e-6)

    def test_blocked_path_infeasible(self):
        s = standard_scenario(n_bins=N_BINS, bpf_transmission=0.0)
        with pytest.raises(InfeasibleError):
            calibrate_noise_density(1e5, s)
