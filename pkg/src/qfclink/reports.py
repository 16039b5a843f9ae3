"""Plain-text summaries and CSV tables for the analysis operations.

CSV output is deterministic: comma separator, '.' decimal point, LF line
endings, a mandatory header row, and numeric fields at 12+ significant
digits so downstream tools lose nothing.
"""
from __future__ import annotations

from typing import Iterable, Sequence

from .analysis import AttributionReport, SnrReport
from .chain import LinkState, Scenario, signal_conversion_ratio
from .fitting import FitResult


def fmt_number(x: float) -> str:
    return f"{x:.12g}"


def csv_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            fmt_number(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def budget_csv(state: LinkState) -> str:
    rows = [
        (i, snap.label, float(snap.line.rate), float(snap.noise_in_band))
        for i, snap in enumerate(state.snapshots)
    ]
    return csv_table(
        ("index", "element", "signal_rate_cts_s", "noise_in_band_cts_s"), rows)


def simulate_summary(s: Scenario, state: LinkState) -> str:
    ratio = signal_conversion_ratio(s)
    lines = [
        f"scenario: {s.label}",
        f"source rate: {fmt_number(s.source.rate)} cts/s",
        f"two-step conversion efficiency: {fmt_number(ratio)} ({100 * ratio:.2f}%)",
        f"detector reading: {fmt_number(state.detector_counts)} cts/s",
        f"final signal rate: {fmt_number(state.final.line.rate)} cts/s",
        f"final in-band noise: {fmt_number(state.final.noise_in_band)} cts/s",
    ]
    return "\n".join(lines) + "\n"


def fit_csv(result: FitResult) -> str:
    return csv_table(
        ("eta_max", "eta_nor_per_w_cm2", "rss", "n_samples", "degenerate"),
        [(float(result.eta_max), float(result.eta_nor), float(result.rss),
          result.n_samples, int(result.degenerate))])


def fit_summary(result: FitResult, length_cm: float) -> str:
    lines = [
        f"fitted eta_max: {fmt_number(result.eta_max)}",
        f"fitted eta_nor: {fmt_number(result.eta_nor)} W^-1 cm^-2",
        f"residual sum of squares: {fmt_number(result.rss)}",
        f"samples: {result.n_samples} (crystal length {fmt_number(length_cm)} cm)",
    ]
    if result.degenerate:
        lines.append("fit is degenerate: all efficiencies were zero")
    return "\n".join(lines) + "\n"


def sweep_power_csv(rows: Sequence[tuple[float, float, float, float]]) -> str:
    return csv_table(
        ("pump_power_w", "eta_dfg", "eta_sfg", "eta_total"),
        [(float(p), float(a), float(b), float(t)) for p, a, b, t in rows])


def sweep_distance_csv(rows: Sequence[tuple[float, float]]) -> str:
    return csv_table(("fiber_km", "snr"),
                     [(float(km), float(snr)) for km, snr in rows])


def snr_summary(report: SnrReport) -> str:
    lines = [
        f"signal rate: {fmt_number(report.signal_rate)} cts/s",
        f"noise rate (in band + floor): {fmt_number(report.noise_rate)} cts/s",
        f"dark rate: {fmt_number(report.dark_rate)} cts/s",
        f"bandwidth gain: {fmt_number(report.bandwidth_gain)}",
        f"fiber length: {fmt_number(report.fiber_km)} km",
        f"snr: {fmt_number(report.snr)}",
        "assumptions:",
    ]
    lines += [f"  - {a}" for a in report.assumptions]
    return "\n".join(lines) + "\n"


def attribution_csv(report: AttributionReport) -> str:
    rows = [
        ("both", float(report.counts_both), float(report.noise_both)),
        ("stage2_only", float(report.counts_stage2_only),
         float(report.noise_stage2_only)),
        ("stage1_only", float(report.counts_stage1_only),
         float(report.noise_stage1_only)),
    ]
    return csv_table(("pump_configuration", "detector_counts_cts_s",
                      "noise_above_dark_cts_s"), rows)


def attribution_summary(report: AttributionReport) -> str:
    return "\n".join([
        f"both pumps: {fmt_number(report.counts_both)} cts/s",
        f"stage 2 only: {fmt_number(report.counts_stage2_only)} cts/s",
        f"stage 1 only: {fmt_number(report.counts_stage1_only)} cts/s",
        f"dark rate: {fmt_number(report.dark_rate)} cts/s",
        f"noise ratio both/stage2: {fmt_number(report.ratio_both_to_stage2)}",
    ]) + "\n"
