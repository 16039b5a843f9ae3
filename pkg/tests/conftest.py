"""Shared helpers: seeded random scenario generation for property suites."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from qfclink import (
    Band,
    DetectorModel,
    Direction,
    FiberSegment,
    FilterElement,
    FrequencyGrid,
    PplnStage,
    Scenario,
    SpectralLine,
    SpectrometerModel,
)

GRID_LO = 100e12
GRID_HI = 300e12


def random_scenario(rng: np.random.Generator) -> Scenario:
    """A small, always-valid random chain on a coarse toy grid."""
    n_bins = int(rng.integers(100, 400))
    grid = FrequencyGrid(GRID_LO, GRID_HI, n_bins)
    center = float(rng.uniform(150e12, 250e12))
    source = SpectralLine(center, float(rng.uniform(1e6, 1e9)),
                          float(rng.uniform(0.0, 1e7)))

    elements = []
    current = center
    spectrometer_used = False
    n_stages = 0
    for i in range(int(rng.integers(0, 5))):
        kind = rng.choice(["stage", "filter", "fiber", "spectrometer"])
        if kind == "stage" and n_stages < 2:
            pump = float(rng.uniform(5e12, 30e12))
            if rng.random() < 0.5 and current - pump > 110e12:
                direction = Direction.DFG
            elif current + pump < 290e12:
                direction = Direction.SFG
            elif current - pump > 110e12:
                direction = Direction.DFG
            else:
                continue
            coupling_in = float(rng.uniform(0.2, 1.0))
            stage = PplnStage(
                direction=direction,
                input_center=current,
                eta_max=coupling_in * float(rng.uniform(0.0, 1.0)),
                eta_nor=float(rng.uniform(0.01, 5.0)),
                length_cm=float(rng.uniform(0.5, 5.0)),
                pm_fwhm=float(rng.uniform(2e9, 5e11)),
                pump_frequency=pump,
                pump_power=float(rng.uniform(0.0, 1.0)),
                coupling_in=coupling_in,
                coupling_out=float(rng.uniform(0.2, 1.0)),
                noise_density=float(rng.uniform(0.0, 1e-4)),
                noise_ref_power=0.5,
                pump_on=bool(rng.random() < 0.8),
                noise_half_width=float(rng.uniform(1e11, 5e12)),
                label=f"stage{i}",
            )
            elements.append(stage)
            current = stage.output_center
            n_stages += 1
        elif kind == "filter":
            lo = float(rng.uniform(GRID_LO, GRID_HI - 1e12))
            hi = float(rng.uniform(lo + 1e11, GRID_HI))
            t_pass = float(rng.uniform(0.0, 1.0))
            elements.append(FilterElement(
                Band(lo, hi), t_pass=t_pass,
                t_stop=t_pass * float(rng.uniform(0.0, 1.0)), label=f"filter{i}"))
        elif kind == "fiber":
            elements.append(FiberSegment(
                length_km=float(rng.uniform(0.0, 10.0)),
                attenuation=((Band(GRID_LO - 5e12, GRID_HI + 5e12),
                              float(rng.uniform(0.0, 2.0))),),
                coupling=float(rng.uniform(0.3, 1.0)),
                label=f"fiber{i}"))
        elif kind == "spectrometer" and not spectrometer_used:
            lo = float(rng.uniform(GRID_LO, GRID_HI - 10e12))
            elements.append(SpectrometerModel(
                passband=Band(lo, lo + float(rng.uniform(1e12, 10e12))),
                resolution_fwhm=float(rng.uniform(1e9, 1e11)),
                efficiency=float(rng.uniform(0.05, 1.0)),
                label=f"spectrometer{i}"))
            spectrometer_used = True

    band_lo = float(rng.uniform(GRID_LO, GRID_HI - 5e12))
    elements.append(DetectorModel(
        band=Band(band_lo, band_lo + float(rng.uniform(1e11, 5e12))),
        quantum_efficiency=float(rng.uniform(0.2, 1.0)),
        dark_rate=float(rng.uniform(0.0, 500.0)),
        label="detector"))
    return Scenario(source=source, grid=grid, elements=tuple(elements),
                    label="random")


def scale_one_transmission(s: Scenario, rng: np.random.Generator) -> Scenario:
    """Multiply one randomly chosen transmission parameter by u < 1."""
    u = float(rng.uniform(0.05, 0.95))
    idx = int(rng.integers(0, len(s.elements)))
    el = s.elements[idx]
    if isinstance(el, FilterElement):
        new = replace(el, t_pass=el.t_pass * u, t_stop=el.t_stop * u)
    elif isinstance(el, FiberSegment):
        new = replace(el, coupling=el.coupling * u)
    elif isinstance(el, SpectrometerModel):
        new = replace(el, efficiency=el.efficiency * u)
    elif isinstance(el, DetectorModel):
        new = replace(el, quantum_efficiency=el.quantum_efficiency * u)
    else:
        if rng.random() < 0.5:
            new = replace(el, coupling_out=el.coupling_out * u)
        else:
            new = replace(el, coupling_in=el.coupling_in * u,
                          eta_max=el.eta_max * u)
    elements = s.elements[:idx] + (new,) + s.elements[idx + 1:]
    return replace(s, elements=elements)
