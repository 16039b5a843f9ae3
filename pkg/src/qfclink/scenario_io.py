"""Scenario file parsing and serialization.

The format is a sectioned plain-text document::

    label = standard

    [source]
    wavelength = 637.2 nm
    linewidth = 10 MHz
    rate = 1e6 cts/s

    [grid]
    f_min = 187.5 THz
    f_max = 474 THz
    n_bins = 143250

    [element.1]
    type = stage
    ...

    [analysis]
    snr_filter_bandwidth = 10 MHz

Keys are lower_snake_case and every dimensioned value carries a unit.
Frequency-valued keys accept wavelength units (nm, um, m) as well, converted
through c/lambda.  Parsing is fail-closed: unknown sections or keys are
errors with the offending line, section and key named.  Element sections are
numbered contiguously from 1 and are applied in that order.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .chain import AnalysisDefaults, Element, Scenario
from .errors import DomainError, ScenarioParseError
from .photonics import (
    DetectorModel,
    Direction,
    FiberSegment,
    FilterElement,
    PplnStage,
    SpectrometerModel,
    converted_frequency,
    derive_eta_nor_from_peak,
)
from .spectral import Band, FrequencyGrid, SpectralLine, wavelength_to_frequency

_FREQ_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12}
_WAVELENGTH_UNITS = {"nm": 1.0, "um": 1e3, "m": 1e9}  # factors to nm
_POWER_UNITS = {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "nW": 1e-9}
_CM_UNITS = {"cm": 1.0, "mm": 0.1, "m": 100.0}
_KM_UNITS = {"km": 1.0, "m": 1e-3}

_SECTION_RE = re.compile(r"^\[([a-z0-9_.]+)\]$")
_ELEMENT_RE = re.compile(r"^element\.([0-9]+)$")
_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


@dataclass
class _Entry:
    key: str
    value: str
    line: int


@dataclass
class _Section:
    name: str
    line: int
    entries: list[_Entry]


class _Context:
    """Carries the current location so every diagnostic can name it."""

    def __init__(self, section: str | None = None):
        self.section = section
        self.key: str | None = None
        self.line: int | None = None

    def fail(self, message: str) -> ScenarioParseError:
        return ScenarioParseError(message, line=self.line,
                                  section=self.section, key=self.key)


def _parse_number(token: str, ctx: _Context) -> float:
    if not _NUMBER_RE.match(token):
        raise ctx.fail(f"expected a number, got {token!r}")
    return float(token)


def _split_quantity(value: str, ctx: _Context) -> tuple[float, str]:
    parts = value.split()
    if len(parts) != 2:
        raise ctx.fail(
            f"expected '<number> <unit>', got {value!r} (units are mandatory "
            "on dimensioned quantities)")
    return _parse_number(parts[0], ctx), parts[1]


def _parse_frequency(value: str, ctx: _Context, allow_signed: bool = False) -> float:
    number, unit = _split_quantity(value, ctx)
    if unit in _FREQ_UNITS:
        result = number * _FREQ_UNITS[unit]
    elif unit in _WAVELENGTH_UNITS:
        if number <= 0:
            raise ctx.fail(f"wavelength must be positive, got {value!r}")
        result = wavelength_to_frequency(number * _WAVELENGTH_UNITS[unit])
    else:
        raise ctx.fail(f"unknown frequency/wavelength unit {unit!r}")
    if not allow_signed and result <= 0:
        raise ctx.fail(f"frequency must be positive, got {value!r}")
    return result


def _parse_with_units(value: str, units: dict[str, float], what: str,
                      ctx: _Context) -> float:
    number, unit = _split_quantity(value, ctx)
    if unit not in units:
        raise ctx.fail(f"unknown {what} unit {unit!r}")
    return number * units[unit]


def _parse_rate(value: str, ctx: _Context) -> float:
    number, unit = _split_quantity(value, ctx)
    if unit != "cts/s":
        raise ctx.fail(f"expected a rate in cts/s, got {value!r}")
    return number


def _parse_density(value: str, ctx: _Context) -> float:
    number, unit = _split_quantity(value, ctx)
    if unit != "cts/s/Hz":
        raise ctx.fail(f"expected a density in cts/s/Hz, got {value!r}")
    return number


def _parse_eta_nor(value: str, ctx: _Context) -> float:
    number, unit = _split_quantity(value, ctx)
    if unit != "W^-1cm^-2":
        raise ctx.fail(f"expected a normalized efficiency in W^-1cm^-2, got {value!r}")
    return number


def _parse_dimensionless(value: str, ctx: _Context) -> float:
    if len(value.split()) != 1:
        raise ctx.fail(f"expected a bare number (no unit), got {value!r}")
    return _parse_number(value, ctx)


def _parse_int(value: str, ctx: _Context) -> int:
    if not re.match(r"^[+-]?\d+$", value):
        raise ctx.fail(f"expected an integer, got {value!r}")
    return int(value)


def _parse_bool(value: str, ctx: _Context) -> bool:
    if value == "true":
        return True
    if value == "false":
        return False
    raise ctx.fail(f"expected 'true' or 'false', got {value!r}")


def _parse_attenuation_entry(value: str, ctx: _Context) -> tuple[Band, float]:
    # "<alpha> dB/km from <freq> to <freq>"
    m = re.match(r"^(\S+)\s+dB/km\s+from\s+(\S+\s+\S+)\s+to\s+(\S+\s+\S+)$", value)
    if not m:
        raise ctx.fail(
            f"expected '<alpha> dB/km from <freq> to <freq>', got {value!r}")
    alpha = _parse_number(m.group(1), ctx)
    lo = _parse_frequency(m.group(2), ctx)
    hi = _parse_frequency(m.group(3), ctx)
    lo, hi = min(lo, hi), max(lo, hi)
    try:
        return Band(lo, hi), alpha
    except DomainError as exc:
        raise ctx.fail(str(exc)) from exc


def _parse_alpha(value: str, ctx: _Context) -> float:
    number, unit = _split_quantity(value, ctx)
    if unit != "dB/km":
        raise ctx.fail(f"expected an attenuation in dB/km, got {value!r}")
    return number


def _tokenize(text: str) -> tuple[list[_Entry], list[_Section]]:
    top: list[_Entry] = []
    sections: list[_Section] = []
    current: _Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            current = _Section(m.group(1), lineno, [])
            sections.append(current)
            continue
        if "=" not in line:
            raise ScenarioParseError(
                f"expected 'key = value' or a [section] header, got {line!r}",
                line=lineno,
                section=current.name if current else None)
        key, _, value = line.partition("=")
        entry = _Entry(key.strip(), value.strip(), lineno)
        if not re.match(r"^[a-z][a-z0-9_]*$", entry.key):
            raise ScenarioParseError(
                f"keys must be lower_snake_case, got {entry.key!r}",
                line=lineno, section=current.name if current else None,
                key=entry.key)
        if current is None:
            top.append(entry)
        else:
            current.entries.append(entry)
    return top, sections


class _SectionReader:
    """Fail-closed access to one section's entries."""

    def __init__(self, section: _Section, allowed: set[str],
                 repeatable: set[str] = frozenset()):
        self.section = section
        self.taken: dict[str, _Entry] = {}
        self.repeated: dict[str, list[_Entry]] = {}
        for entry in section.entries:
            ctx = self._ctx(entry)
            if entry.key not in allowed:
                raise ctx.fail(f"unknown key {entry.key!r}")
            if entry.key in repeatable:
                self.repeated.setdefault(entry.key, []).append(entry)
            elif entry.key in self.taken:
                raise ctx.fail(f"duplicate key {entry.key!r}")
            else:
                self.taken[entry.key] = entry

    def _ctx(self, entry: _Entry) -> _Context:
        ctx = _Context(self.section.name)
        ctx.key = entry.key
        ctx.line = entry.line
        return ctx

    def get(self, key: str, parser, default=None, required: bool = False):
        entry = self.taken.get(key)
        if entry is None:
            if required:
                ctx = _Context(self.section.name)
                ctx.key = key
                ctx.line = self.section.line
                raise ctx.fail(f"missing required key {key!r}")
            return default
        return parser(entry.value, self._ctx(entry))

    def get_all(self, key: str, parser) -> list:
        return [parser(e.value, self._ctx(e)) for e in self.repeated.get(key, [])]

    def raw(self, key: str) -> str | None:
        entry = self.taken.get(key)
        return entry.value if entry else None


def _parse_label(value: str, ctx: _Context) -> str:
    if not re.match(r"^[A-Za-z0-9_.-]+$", value):
        raise ctx.fail(f"labels must be alphanumeric with ._-, got {value!r}")
    return value


_STAGE_KEYS = {
    "type", "label", "direction", "input_center", "eta_max", "eta_nor",
    "peak_pump_power", "length", "acceptance_fwhm", "pump_wavelength",
    "pump_frequency", "pump_power", "coupling_in", "coupling_out",
    "noise_density", "noise_ref_power", "noise_half_width", "detuning",
    "pump_on",
}
_FILTER_KEYS = {"type", "label", "pass_from", "pass_to", "t_pass", "t_stop"}
_FIBER_KEYS = {"type", "label", "length", "coupling", "attenuation"}
_SPECTROMETER_KEYS = {"type", "label", "pass_from", "pass_to", "efficiency",
                      "resolution_fwhm"}
_DETECTOR_KEYS = {"type", "label", "band_from", "band_to",
                  "quantum_efficiency", "dark_rate"}


def _band_from_keys(reader: _SectionReader, lo_key: str, hi_key: str) -> Band:
    lo = reader.get(lo_key, _parse_frequency, required=True)
    hi = reader.get(hi_key, _parse_frequency, required=True)
    lo, hi = min(lo, hi), max(lo, hi)
    ctx = _Context(reader.section.name)
    ctx.line = reader.section.line
    try:
        return Band(lo, hi)
    except DomainError as exc:
        raise ctx.fail(str(exc)) from exc


def _element_from_section(section: _Section) -> tuple[str, dict]:
    """Returns (type name, parsed parameter dict); stages are finished later
    because the input centre may be inferred from the chain."""
    first = _Context(section.name)
    first.line = section.line
    type_entry = next((e for e in section.entries if e.key == "type"), None)
    if type_entry is None:
        first.key = "type"
        raise first.fail("missing required key 'type'")
    kind = type_entry.value

    if kind == "stage":
        r = _SectionReader(section, _STAGE_KEYS)
        direction_raw = r.get("direction", lambda v, c: v, required=True)
        if direction_raw not in ("dfg", "sfg"):
            ctx = r._ctx(r.taken["direction"])
            raise ctx.fail(f"direction must be 'dfg' or 'sfg', got {direction_raw!r}")
        if (r.raw("pump_wavelength") is None) == (r.raw("pump_frequency") is None):
            first.key = "pump_frequency"
            raise first.fail(
                "exactly one of 'pump_wavelength' or 'pump_frequency' is required")
        pump = (r.get("pump_wavelength", _parse_frequency)
                if r.raw("pump_wavelength") is not None
                else r.get("pump_frequency", _parse_frequency))
        length = r.get("length", lambda v, c: _parse_with_units(v, _CM_UNITS, "length", c),
                       required=True)
        if (r.raw("eta_nor") is None) == (r.raw("peak_pump_power") is None):
            first.key = "eta_nor"
            raise first.fail(
                "exactly one of 'eta_nor' or 'peak_pump_power' is required")
        if r.raw("eta_nor") is not None:
            eta_nor = r.get("eta_nor", _parse_eta_nor)
        else:
            peak = r.get("peak_pump_power",
                         lambda v, c: _parse_with_units(v, _POWER_UNITS, "power", c))
            ctx = r._ctx(r.taken["peak_pump_power"])
            try:
                eta_nor = derive_eta_nor_from_peak(peak, length)
            except DomainError as exc:
                raise ctx.fail(str(exc)) from exc
        params = dict(
            direction=Direction(direction_raw),
            input_center=r.get("input_center", _parse_frequency),
            eta_max=r.get("eta_max", _parse_dimensionless, required=True),
            eta_nor=eta_nor,
            length_cm=length,
            pm_fwhm=r.get("acceptance_fwhm", _parse_frequency, required=True),
            pump_frequency=pump,
            pump_power=r.get("pump_power",
                             lambda v, c: _parse_with_units(v, _POWER_UNITS, "power", c),
                             required=True),
            coupling_in=r.get("coupling_in", _parse_dimensionless, default=1.0),
            coupling_out=r.get("coupling_out", _parse_dimensionless, default=1.0),
            noise_density=r.get("noise_density", _parse_density, default=0.0),
            noise_ref_power=r.get("noise_ref_power",
                                  lambda v, c: _parse_with_units(v, _POWER_UNITS, "power", c),
                                  default=0.5),
            pump_on=r.get("pump_on", _parse_bool, default=True),
            detuning=r.get("detuning",
                           lambda v, c: _parse_frequency(v, c, allow_signed=True),
                           default=0.0),
            noise_half_width=r.get("noise_half_width", _parse_frequency, default=2e12),
            label=r.get("label", _parse_label, default="stage"),
        )
        return "stage", params

    if kind == "filter":
        r = _SectionReader(section, _FILTER_KEYS)
        return "filter", dict(
            passband=_band_from_keys(r, "pass_from", "pass_to"),
            t_pass=r.get("t_pass", _parse_dimensionless, required=True),
            t_stop=r.get("t_stop", _parse_dimensionless, default=0.0),
            label=r.get("label", _parse_label, default="filter"),
        )

    if kind == "fiber":
        r = _SectionReader(section, _FIBER_KEYS, repeatable={"attenuation"})
        attenuation = tuple(r.get_all("attenuation", _parse_attenuation_entry))
        if not attenuation:
            first.key = "attenuation"
            raise first.fail("a fiber needs at least one attenuation band")
        return "fiber", dict(
            length_km=r.get("length",
                            lambda v, c: _parse_with_units(v, _KM_UNITS, "length", c),
                            required=True),
            attenuation=attenuation,
            coupling=r.get("coupling", _parse_dimensionless, default=1.0),
            label=r.get("label", _parse_label, default="fiber"),
        )

    if kind == "spectrometer":
        r = _SectionReader(section, _SPECTROMETER_KEYS)
        return "spectrometer", dict(
            passband=_band_from_keys(r, "pass_from", "pass_to"),
            resolution_fwhm=r.get("resolution_fwhm", _parse_frequency, required=True),
            efficiency=r.get("efficiency", _parse_dimensionless, required=True),
            label=r.get("label", _parse_label, default="spectrometer"),
        )

    if kind == "detector":
        r = _SectionReader(section, _DETECTOR_KEYS)
        return "detector", dict(
            band=_band_from_keys(r, "band_from", "band_to"),
            quantum_efficiency=r.get("quantum_efficiency", _parse_dimensionless,
                                     default=1.0),
            dark_rate=r.get("dark_rate", _parse_rate, default=0.0),
            label=r.get("label", _parse_label, default="detector"),
        )

    ctx = _Context(section.name)
    ctx.key = "type"
    ctx.line = type_entry.line
    raise ctx.fail(
        f"unknown element type {kind!r} (expected stage, filter, fiber, "
        "spectrometer or detector)")


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document; diagnostics carry locations."""
    top, sections = _tokenize(text)

    label = "scenario"
    for entry in top:
        ctx = _Context()
        ctx.key = entry.key
        ctx.line = entry.line
        if entry.key != "label":
            raise ctx.fail("only 'label' may appear before the first section")
        label = _parse_label(entry.value, ctx)

    seen: dict[str, _Section] = {}
    element_sections: list[_Section] = []
    for section in sections:
        ctx = _Context(section.name)
        ctx.line = section.line
        if _ELEMENT_RE.match(section.name):
            element_sections.append(section)
            if section.name in seen:
                raise ctx.fail(f"duplicate section [{section.name}]")
            seen[section.name] = section
        elif section.name in ("source", "grid", "analysis"):
            if section.name in seen:
                raise ctx.fail(f"duplicate section [{section.name}]")
            seen[section.name] = section
        else:
            raise ctx.fail(f"unknown section [{section.name}]")

    for required in ("source", "grid"):
        if required not in seen:
            raise ScenarioParseError(f"missing required section [{required}]")

    for position, section in enumerate(element_sections, start=1):
        number = int(_ELEMENT_RE.match(section.name).group(1))
        if number != position:
            ctx = _Context(section.name)
            ctx.line = section.line
            raise ctx.fail(
                f"element sections must be numbered contiguously from 1; "
                f"expected [element.{position}]")

    src = _SectionReader(seen["source"], {"wavelength", "linewidth", "rate"})
    source = SpectralLine(
        center=src.get("wavelength", _parse_frequency, required=True),
        fwhm=src.get("linewidth", _parse_frequency, required=True),
        rate=src.get("rate", _parse_rate, required=True),
    )

    grd = _SectionReader(seen["grid"], {"f_min", "f_max", "n_bins"})
    grid_ctx = _Context("grid")
    grid_ctx.line = seen["grid"].line
    try:
        grid = FrequencyGrid(
            f_min=grd.get("f_min", _parse_frequency, required=True),
            f_max=grd.get("f_max", _parse_frequency, required=True),
            n_bins=grd.get("n_bins", _parse_int, required=True),
        )
    except DomainError as exc:
        raise grid_ctx.fail(str(exc)) from exc

    analysis = AnalysisDefaults()
    if "analysis" in seen:
        ana = _SectionReader(seen["analysis"],
                             {"snr_filter_bandwidth", "snr_noise_floor",
                              "link_attenuation"})
        ana_ctx = _Context("analysis")
        ana_ctx.line = seen["analysis"].line
        try:
            analysis = AnalysisDefaults(
                snr_filter_bandwidth=ana.get("snr_filter_bandwidth",
                                             _parse_frequency, default=10e6),
                snr_noise_floor=ana.get("snr_noise_floor", _parse_rate, default=100.0),
                link_alpha_db_per_km=ana.get("link_attenuation", _parse_alpha,
                                             default=0.2),
            )
        except DomainError as exc:
            raise ana_ctx.fail(str(exc)) from exc

    elements: list[Element] = []
    detector_seen: str | None = None
    current_center = source.center
    for section in element_sections:
        kind, params = _element_from_section(section)
        ctx = _Context(section.name)
        ctx.line = section.line
        if kind == "detector":
            if detector_seen is not None:
                raise ctx.fail(
                    f"duplicate detector: a detector was already declared in "
                    f"[{detector_seen}]")
            detector_seen = section.name
        try:
            if kind == "stage":
                if params["input_center"] is None:
                    params["input_center"] = current_center
                element: Element = PplnStage(**params)
                current_center = converted_frequency(
                    element.direction, params["input_center"],
                    element.pump_frequency)
            elif kind == "filter":
                element = FilterElement(**params)
            elif kind == "fiber":
                element = FiberSegment(**params)
            elif kind == "spectrometer":
                element = SpectrometerModel(**params)
            else:
                element = DetectorModel(**params)
        except DomainError as exc:
            raise ctx.fail(str(exc)) from exc
        elements.append(element)

    try:
        return Scenario(source=source, grid=grid, elements=tuple(elements),
                        label=label, analysis=analysis)
    except DomainError as exc:
        raise ScenarioParseError(str(exc)) from exc


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_scenario(s: Scenario) -> str:
    """Render a scenario back to the file format using internal units.

    parse_scenario(serialize_scenario(s)) reconstructs the identical value:
    floats are written with full repr precision and frequencies in Hz.
    """
    lines = [f"label = {s.label}", ""]
    lines += [
        "[source]",
        f"wavelength = {_fmt(s.source.center)} Hz",
        f"linewidth = {_fmt(s.source.fwhm)} Hz",
        f"rate = {_fmt(s.source.rate)} cts/s",
        "",
        "[grid]",
        f"f_min = {_fmt(s.grid.f_min)} Hz",
        f"f_max = {_fmt(s.grid.f_max)} Hz",
        f"n_bins = {s.grid.n_bins}",
        "",
    ]
    for i, element in enumerate(s.elements, start=1):
        lines.append(f"[element.{i}]")
        if isinstance(element, PplnStage):
            lines += [
                "type = stage",
                f"label = {element.label}",
                f"direction = {element.direction.value}",
                f"input_center = {_fmt(element.input_center)} Hz",
                f"eta_max = {_fmt(element.eta_max)}",
                f"eta_nor = {_fmt(element.eta_nor)} W^-1cm^-2",
                f"length = {_fmt(element.length_cm)} cm",
                f"acceptance_fwhm = {_fmt(element.pm_fwhm)} Hz",
                f"pump_frequency = {_fmt(element.pump_frequency)} Hz",
                f"pump_power = {_fmt(element.pump_power)} W",
                f"coupling_in = {_fmt(element.coupling_in)}",
                f"coupling_out = {_fmt(element.coupling_out)}",
                f"noise_density = {_fmt(element.noise_density)} cts/s/Hz",
                f"noise_ref_power = {_fmt(element.noise_ref_power)} W",
                f"noise_half_width = {_fmt(element.noise_half_width)} Hz",
                f"detuning = {_fmt(element.detuning)} Hz",
                f"pump_on = {'true' if element.pump_on else 'false'}",
            ]
        elif isinstance(element, FilterElement):
            lines += [
                "type = filter",
                f"label = {element.label}",
                f"pass_from = {_fmt(element.passband.lo)} Hz",
                f"pass_to = {_fmt(element.passband.hi)} Hz",
                f"t_pass = {_fmt(element.t_pass)}",
                f"t_stop = {_fmt(element.t_stop)}",
            ]
        elif isinstance(element, FiberSegment):
            lines += [
                "type = fiber",
                f"label = {element.label}",
                f"length = {_fmt(element.length_km)} km",
                f"coupling = {_fmt(element.coupling)}",
            ]
            lines += [
                f"attenuation = {_fmt(alpha)} dB/km from {_fmt(band.lo)} Hz "
                f"to {_fmt(band.hi)} Hz"
                for band, alpha in element.attenuation
            ]
        elif isinstance(element, SpectrometerModel):
            lines += [
                "type = spectrometer",
                f"label = {element.label}",
                f"pass_from = {_fmt(element.passband.lo)} Hz",
                f"pass_to = {_fmt(element.passband.hi)} Hz",
                f"efficiency = {_fmt(element.efficiency)}",
                f"resolution_fwhm = {_fmt(element.resolution_fwhm)} Hz",
            ]
        elif isinstance(element, DetectorModel):
            lines += [
                "type = detector",
                f"label = {element.label}",
                f"band_from = {_fmt(element.band.lo)} Hz",
                f"band_to = {_fmt(element.band.hi)} Hz",
                f"quantum_efficiency = {_fmt(element.quantum_efficiency)}",
                f"dark_rate = {_fmt(element.dark_rate)} cts/s",
            ]
        lines.append("")
    lines += [
        "[analysis]",
        f"snr_filter_bandwidth = {_fmt(s.analysis.snr_filter_bandwidth)} Hz",
        f"snr_noise_floor = {_fmt(s.analysis.snr_noise_floor)} cts/s",
        f"link_attenuation = {_fmt(s.analysis.link_alpha_db_per_km)} dB/km",
    ]
    return "\n".join(lines) + "\n"
