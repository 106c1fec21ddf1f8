"""
Reading and writing TOML config files.

    [units]
    system = "scaled"          # or "SI"
    temperature = 300.0        # optional, SI only: sets both bath occupations

    [mode_a]
    frequency = 1000.0
    decay_rate = 1.0
    bath_occupation = 0.0      # or: temperature = ...

    [mode_b]
    frequency = 1.0
    decay_rate = 0.01
    bath_occupation = 100.0

    [drive]
    amplitude = 10.0
    drive_frequency = 999.0

    [coupling]
    kind = "beam_splitter"     # beam_splitter | full | generalized
    f_spec = [[1, 1, 1.0]]     # generalized only: (m, n, coefficient) triples
    g_prime = 0.01             # generalized only
    f_drive = 0.5              # generalized only
"""
from __future__ import annotations

import hashlib
import re
import sys

from .errors import ConfigError
from .linearization import FSpec
from .model import (BeamSplitter, DriveParams, Full, Generalized, ModeParams, SystemConfig,
                    thermal_occupation)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["parse_config", "load_config", "dump_config", "config_hash"]

_MODE_KEYS = {"frequency", "decay_rate", "bath_occupation", "temperature"}
_SECTIONS = {
    "units": {"system", "temperature"},
    "mode_a": _MODE_KEYS,
    "mode_b": _MODE_KEYS,
    "drive": {"amplitude", "drive_frequency"},
    "coupling": {"kind", "f_spec", "g_prime", "f_drive"},
}
_KINDS = {"beam_splitter", "full", "generalized"}
_LOCATION = re.compile(r"line (\d+), column (\d+)")


def _section(doc, name, required=True):
    sec = doc.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing section [{name}]", field=name)
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table", field=name)
    return sec


def _require(sec, section, key):
    if key not in sec:
        raise ConfigError(f"missing key {section}.{key}", field=f"{section}.{key}")
    return sec[key]


def _mode(sec, name, units):
    freq = _require(sec, name, "frequency")
    decay = _require(sec, name, "decay_rate")
    if "bath_occupation" in sec and "temperature" in sec:
        raise ConfigError(f"[{name}] takes bath_occupation or temperature, not both",
                          field=f"{name}.temperature")
    try:
        if "temperature" in sec:
            occ = thermal_occupation(freq, sec["temperature"], units=units)
        else:
            occ = sec.get("bath_occupation", 0.0)
        return ModeParams(freq, decay, occ)
    except ConfigError as exc:
        raise ConfigError(f"{name}.{exc.field}: {exc}", field=f"{name}.{exc.field}") from None


def _coupling(sec):
    kind = sec.get("kind", "beam_splitter")
    if kind not in _KINDS:
        raise ConfigError(f"coupling.kind must be one of {sorted(_KINDS)}, got {kind!r}",
                          field="coupling.kind")
    if kind == "beam_splitter":
        return BeamSplitter()
    if kind == "full":
        return Full()
    raw = _require(sec, "coupling", "f_spec")
    if raw == "number":
        spec = FSpec.number()
    elif raw == "position":
        spec = FSpec.position()
    elif isinstance(raw, list):
        spec = FSpec(tuple(tuple(item) if isinstance(item, list) else item for item in raw))
    else:
        raise ConfigError("coupling.f_spec must be a list of [m, n, coefficient] triples",
                          field="coupling.f_spec")
    try:
        return Generalized(spec, _require(sec, "coupling", "f_drive"),
                           _require(sec, "coupling", "g_prime"))
    except ConfigError as exc:
        if exc.field and exc.field.startswith("coupling."):
            raise
        raise ConfigError(f"coupling.{exc.field}: {exc}", field=f"coupling.{exc.field}") from None


def parse_config(text: str) -> SystemConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = _LOCATION.search(str(exc))
        line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        raise ConfigError(f"config parse error: {exc}", line=line, column=col) from None
    for name, value in doc.items():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]", field=name)
        if isinstance(value, dict):
            for key in value:
                if key not in _SECTIONS[name]:
                    raise ConfigError(f"unknown key {name}.{key}", field=f"{name}.{key}")

    units_sec = _section(doc, "units", required=False)
    units = units_sec.get("system", "scaled")
    if units not in ("scaled", "SI"):
        raise ConfigError(f"units.system must be 'scaled' or 'SI', got {units!r}",
                          field="units.system")
    mode_a = _mode(_section(doc, "mode_a"), "mode_a", units)
    mode_b = _mode(_section(doc, "mode_b"), "mode_b", units)
    drive_sec = _section(doc, "drive")
    try:
        drive = DriveParams(drive_sec.get("amplitude", 0.0),
                            _require(drive_sec, "drive", "drive_frequency"))
    except ConfigError as exc:
        if exc.field and not exc.field.startswith("drive."):
            raise ConfigError(f"drive.{exc.field}: {exc}", field=f"drive.{exc.field}") from None
        raise
    coupling = _coupling(_section(doc, "coupling", required=False))
    try:
        return SystemConfig(mode_a, mode_b, drive, coupling, unit_system=units,
                            temperature=units_sec.get("temperature"))
    except ConfigError as exc:
        field = exc.field if exc.field and "." in exc.field else f"units.{exc.field}"
        raise ConfigError(f"{field}: {exc}", field=field) from None


def load_config(path) -> SystemConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}", field="config") from None
    return parse_config(text)


def _fmt(x) -> str:
    return repr(float(x))


def dump_config(config: SystemConfig) -> str:
    """Canonical TOML text; ``parse_config(dump_config(c)) == c``.

    Bath occupations are always written explicitly, so a temperature-based
    config round-trips to occupation form.
    """
    lines = ["[units]", f'system = "{config.unit_system}"', ""]
    for name in ("mode_a", "mode_b"):
        mode = getattr(config, name)
        lines += [f"[{name}]", f"frequency = {_fmt(mode.frequency)}",
                  f"decay_rate = {_fmt(mode.decay_rate)}",
                  f"bath_occupation = {_fmt(mode.bath_occupation)}", ""]
    lines += ["[drive]", f"amplitude = {_fmt(config.drive.amplitude)}",
              f"drive_frequency = {_fmt(config.drive.drive_frequency)}", ""]
    c = config.coupling
    lines += ["[coupling]", f'kind = "{c.name}"']
    if isinstance(c, Generalized):
        triples = ", ".join(f"[{m}, {n}, {_fmt(v)}]" for m, n, v in c.f_spec.monomials)
        lines += [f"f_spec = [{triples}]", f"g_prime = {_fmt(c.g_prime)}",
                  f"f_drive = {_fmt(c.f_drive)}"]
    return "\n".join(lines) + "\n"


def config_hash(config: SystemConfig) -> str:
    return hashlib.sha256(dump_config(config).encode()).hexdigest()[:16]
