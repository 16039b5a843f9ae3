"""Nonlinear least-squares fit of the pump-power efficiency curve.

Model: eta(P) = eta_max * sin^2(L * sqrt(P * eta_nor)).

The fit runs a coarse scan (logarithmic in eta_nor, with the optimal
eta_max obtained in closed form per eta_nor since the model is linear in
it) followed by coordinate-descent refinement.  The search is restricted
to the first half-period at the maximum sampled power, which removes the
sin^2 alias minima and matches the physical single-peak curve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

DEFAULT_ETA_NOR_RANGE = (1e-4, 1e2)
_SCAN_NOR_POINTS = 2000      # >= the 200 required by the coarse-scan contract
_SCAN_EMAX_POINTS = 128
_REL_TOL = 1e-6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EfficiencySample:
    """One measured point of the pump-power efficiency curve."""

    pump_power: float   # W
    eta: float          # dimensionless, in [0, 1]

    def __post_init__(self):
        if self.pump_power < 0:
            raise DomainError(f"pump_power must be non-negative, got {self.pump_power}")
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {self.eta}")


@dataclass(frozen=True)
class FitResult:
    eta_max: float
    eta_nor: float      # 1/(W cm^2)
    rss: float
    n_samples: int
    degenerate: bool = False


def model_efficiency(eta_max: float, eta_nor: float, length_cm: float,
                     powers: np.ndarray | float) -> np.ndarray | float:
    """Forward model evaluated at one or many pump powers."""
    arg = length_cm * np.sqrt(np.asarray(powers, dtype=float) * eta_nor)
    out = eta_max * np.sin(arg) ** 2
    return float(out) if np.isscalar(powers) else out


def predict_curve(fit: FitResult, length_cm: float,
                  powers: Sequence[float]) -> list[float]:
    """Evaluate the fitted model at each power."""
    if length_cm <= 0:
        raise DomainError(f"length_cm must be positive, got {length_cm}")
    return [float(model_efficiency(fit.eta_max, fit.eta_nor, length_cm, p))
            for p in powers]


def _best_eta_max(s2: np.ndarray, etas: np.ndarray) -> float:
    """Closed-form minimizer of sum((emax * s2 - eta)^2) over emax in [0, 1]."""
    denom = float(np.dot(s2, s2))
    if denom == 0.0:
        return 0.0
    return min(1.0, max(0.0, float(np.dot(s2, etas)) / denom))


def _rss(eta_max: float, eta_nor: float, length_cm: float,
         powers: np.ndarray, etas: np.ndarray) -> float:
    resid = eta_max * np.sin(length_cm * np.sqrt(powers * eta_nor)) ** 2 - etas
    return float(np.dot(resid, resid))


def _profile_rss(eta_nor: float, length_cm: float,
                 powers: np.ndarray, etas: np.ndarray) -> tuple[float, float]:
    """(rss, eta_max) with eta_max optimized out at this eta_nor."""
    s2 = np.sin(length_cm * np.sqrt(powers * eta_nor)) ** 2
    emax = _best_eta_max(s2, etas)
    resid = emax * s2 - etas
    return float(np.dot(resid, resid)), emax


def _golden_refine(lo: float, hi: float, length_cm: float,
                   powers: np.ndarray, etas: np.ndarray) -> float:
    """Golden-section minimum of the profile rss over log(eta_nor) in [lo, hi]."""
    a, b = math.log(lo), math.log(hi)
    fa = lambda x: _profile_rss(math.exp(x), length_cm, powers, etas)[0]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fa(c), fa(d)
    while b - a > _REL_TOL / 4:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fa(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fa(d)
    return math.exp((a + b) / 2)


def fit_efficiency_curve(
    samples: Iterable[EfficiencySample],
    length_cm: float,
    *,
    eta_nor_range: tuple[float, float] = DEFAULT_ETA_NOR_RANGE,
) -> FitResult:
    """Least-squares fit of (eta_max, eta_nor) to measured samples.

    Requires at least 3 samples with at least 2 distinct non-zero powers.
    All-zero efficiencies return a flagged degenerate result.  Ties are
    broken deterministically toward the smallest eta_nor, then the smallest
    eta_max; samples are canonically ordered first so the result does not
    depend on input order.
    """
    if length_cm <= 0:
        raise DomainError(f"length_cm must be positive, got {length_cm}")
    ordered = sorted(samples, key=lambda s: (s.pump_power, s.eta))
    if len(ordered) < 3:
        raise DomainError(f"need at least 3 samples, got {len(ordered)}")
    powers = np.array([s.pump_power for s in ordered])
    etas = np.array([s.eta for s in ordered])
    if len(set(p for p in powers if p > 0)) < 2:
        raise DomainError("need at least 2 distinct non-zero pump powers")
    if np.all(etas == 0.0):
        return FitResult(eta_max=0.0, eta_nor=eta_nor_range[0], rss=0.0,
                         n_samples=len(ordered), degenerate=True)

    # Restrict to the first half-period at the largest sampled power.
    p_max = float(powers.max())
    nor_hi = min(eta_nor_range[1], (math.pi / length_cm) ** 2 / p_max)
    nor_lo = min(eta_nor_range[0], nor_hi)
    if nor_lo == nor_hi:
        nor_lo = nor_hi / 100.0

    nor_grid = np.geomspace(nor_lo, nor_hi, _SCAN_NOR_POINTS)
    emax_grid = np.linspace(0.0, 1.0, _SCAN_EMAX_POINTS)

    # rss(nor, emax) = c - 2 b(nor) emax + a(nor) emax^2, evaluated on the grid.
    s2 = np.sin(length_cm * np.sqrt(powers[None, :] * nor_grid[:, None])) ** 2
    a = np.einsum("ij,ij->i", s2, s2)
    b = s2 @ etas
    c = float(np.dot(etas, etas))
    grid_rss = c - 2.0 * np.outer(b, emax_grid) + np.outer(a, emax_grid ** 2)

    # Coarse winner with the smallest-nor-then-smallest-emax tie-break
    # (argmin returns the first occurrence in nor-major order).
    flat_best = int(np.argmin(grid_rss))
    scan_i = flat_best // _SCAN_EMAX_POINTS

    # Refine around every local minimum of the profile rss so a separate
    # basin cannot be missed, then keep the lexicographically best result.
    profile = np.where(a > 0, c - b * b / np.where(a > 0, a, 1.0), c)
    clipped = b / np.where(a > 0, a, 1.0) > 1.0
    profile = np.where(clipped & (a > 0), c - 2.0 * b + a, profile)
    interior = np.nonzero(
        (profile[1:-1] <= profile[:-2]) & (profile[1:-1] <= profile[2:]))[0] + 1
    seeds = sorted({0, scan_i, _SCAN_NOR_POINTS - 1, *interior.tolist()})

    candidates: list[tuple[float, float, float]] = []
    for i in seeds:
        lo = nor_grid[max(i - 1, 0)]
        hi = nor_grid[min(i + 1, _SCAN_NOR_POINTS - 1)]
        nor = nor_grid[i] if lo == hi else _golden_refine(lo, hi, length_cm, powers, etas)
        emax = _profile_rss(nor, length_cm, powers, etas)[1]
        # Coordinate descent: alternate the closed-form eta_max step with a
        # bracketed eta_nor step until both parameters settle.
        for _ in range(64):
            lo_b = max(nor_lo, nor / 1.5)
            hi_b = min(nor_hi, nor * 1.5)
            new_nor = _golden_refine(lo_b, hi_b, length_cm, powers, etas)
            new_rss, new_emax = _profile_rss(new_nor, length_cm, powers, etas)
            if (abs(new_nor - nor) <= _REL_TOL * abs(nor)
                    and abs(new_emax - emax) <= _REL_TOL * max(abs(emax), 1e-30)):
                nor, emax = new_nor, new_emax
                break
            nor, emax = new_nor, new_emax
        candidates.append((_rss(emax, nor, length_cm, powers, etas), nor, emax))

    rss, nor, emax = min(candidates)
    return FitResult(eta_max=emax, eta_nor=nor, rss=rss, n_samples=len(ordered))
