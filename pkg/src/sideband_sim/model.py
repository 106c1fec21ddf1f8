"""
Parameter types shared by every engine.

Two unit systems are supported.  ``"scaled"`` treats every frequency and
rate as a plain number (conventionally in units of γ_a) with ħ = k_B = 1.
``"SI"`` uses rad/s and kelvin with the exact SI values of ħ and k_B.

The drive is absorbed into a rotating frame, so the engines only ever see
the detuning ``Δ = ω_a - ω_d``; :meth:`SystemConfig.from_detuning` builds a
config directly from Δ.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigError
from .linearization import FSpec

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J/K

UNIT_SYSTEMS = ("scaled", "SI")


def _finite(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}", field=name) from None
    if not np.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}", field=name)
    return value


@dataclass(frozen=True)
class ModeParams:
    frequency: float
    decay_rate: float
    bath_occupation: float = 0.0

    def __post_init__(self):
        for name in ("frequency", "decay_rate", "bath_occupation"):
            object.__setattr__(self, name, _finite(getattr(self, name), name))
        if self.frequency <= 0:
            raise ConfigError(f"frequency must be > 0, got {self.frequency}", field="frequency")
        if self.decay_rate < 0:
            raise ConfigError(f"decay_rate must be >= 0, got {self.decay_rate}", field="decay_rate")
        if self.bath_occupation < 0:
            raise ConfigError(f"bath_occupation must be >= 0, got {self.bath_occupation}",
                              field="bath_occupation")


@dataclass(frozen=True)
class DriveParams:
    """Drive (or coupling) amplitude and drive frequency.

    ``amplitude`` is Ω for the beam-splitter model and g for the Full model.
    """

    amplitude: float
    drive_frequency: float

    def __post_init__(self):
        object.__setattr__(self, "amplitude", _finite(self.amplitude, "amplitude"))
        object.__setattr__(self, "drive_frequency",
                           _finite(self.drive_frequency, "drive_frequency"))
        if self.amplitude < 0:
            raise ConfigError(f"amplitude must be >= 0, got {self.amplitude}", field="amplitude")


@dataclass(frozen=True)
class BeamSplitter:
    """Excitation-conserving exchange ``Ω(a†b + b†a)``."""

    name = "beam_splitter"


@dataclass(frozen=True)
class Full:
    """Position-position coupling ``g(a† + a)(b† + b)``."""

    name = "full"


@dataclass(frozen=True)
class Generalized:
    """Driven model ``g' F(a†, a)(b† + b) + f(a† + a)``, linearized before simulation."""

    f_spec: FSpec
    f_drive: float
    g_prime: float
    name = "generalized"

    def __post_init__(self):
        if not isinstance(self.f_spec, FSpec):
            object.__setattr__(self, "f_spec", FSpec(tuple(self.f_spec)))
        object.__setattr__(self, "f_drive", _finite(self.f_drive, "f_drive"))
        object.__setattr__(self, "g_prime", _finite(self.g_prime, "g_prime"))


CouplingKind = Union[BeamSplitter, Full, Generalized]


def thermal_occupation(frequency, temperature, units: str = "SI"):
    """Bose-Einstein occupation ``1/(exp(ħω/k_B T) - 1)``.

    With ``units="scaled"`` the ratio is ``ω/T`` (ħ = k_B = 1).  Works
    element-wise on arrays.
    """
    frequency = np.asarray(frequency, dtype=float)
    temperature = np.asarray(temperature, dtype=float)
    if np.any(frequency <= 0):
        raise ConfigError("frequency must be > 0", field="frequency")
    if np.any(temperature <= 0):
        raise ConfigError("temperature must be > 0", field="temperature")
    x = frequency / temperature
    if units == "SI":
        x = x * (HBAR / K_B)
    elif units != "scaled":
        raise ConfigError(f"unknown unit system {units!r}", field="units.system")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(x)  # overflow -> exactly empty
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SystemConfig:
    """Complete parameter set of one two-mode cooling problem.

    When ``temperature`` is given (SI only) both bath occupations are
    recomputed from it at construction.
    """

    mode_a: ModeParams
    mode_b: ModeParams
    drive: DriveParams
    coupling: CouplingKind = field(default_factory=BeamSplitter)
    unit_system: str = "scaled"
    temperature: float | None = None

    def __post_init__(self):
        if self.unit_system not in UNIT_SYSTEMS:
            raise ConfigError(f"unit_system must be one of {UNIT_SYSTEMS}, got {self.unit_system!r}",
                              field="units.system")
        if not isinstance(self.coupling, (BeamSplitter, Full, Generalized)):
            raise ConfigError(f"unknown coupling {self.coupling!r}", field="coupling.kind")
        if self.temperature is not None:
            if self.unit_system != "SI":
                raise ConfigError("temperature is only meaningful with unit_system='SI'",
                                  field="units.temperature")
            t = _finite(self.temperature, "temperature")
            object.__setattr__(self, "temperature", t)
            for name in ("mode_a", "mode_b"):
                mode = getattr(self, name)
                occ = thermal_occupation(mode.frequency, t)
                object.__setattr__(self, name, dataclasses.replace(mode, bath_occupation=occ))

    @classmethod
    def from_detuning(cls, *, delta, omega_b, gamma_a, gamma_b, amplitude=0.0,
                      n_a=0.0, n_b=0.0, coupling=None, omega_a=None) -> "SystemConfig":
        """Scaled-units config specified by the rotating-frame detuning Δ.

        ``omega_a`` only fixes the absolute drive frequency (``ω_d = ω_a - Δ``)
        and defaults to a value far above every other scale.
        """
        if omega_a is None:
            omega_a = 1e3 * max(1.0, abs(delta), omega_b, gamma_a, amplitude)
        return cls(
            mode_a=ModeParams(omega_a, gamma_a, n_a),
            mode_b=ModeParams(omega_b, gamma_b, n_b),
            drive=DriveParams(amplitude, omega_a - delta),
            coupling=BeamSplitter() if coupling is None else coupling,
        )

    # shorthand used throughout the engines
    @property
    def delta(self) -> float:
        return self.mode_a.frequency - self.drive.drive_frequency

    @property
    def omega_b(self) -> float:
        return self.mode_b.frequency

    @property
    def gamma_a(self) -> float:
        return self.mode_a.decay_rate

    @property
    def gamma_b(self) -> float:
        return self.mode_b.decay_rate

    @property
    def n_a(self) -> float:
        return self.mode_a.bath_occupation

    @property
    def n_b(self) -> float:
        return self.mode_b.bath_occupation

    @property
    def amplitude(self) -> float:
        return self.drive.amplitude

    def with_detuning(self, delta: float) -> "SystemConfig":
        return dataclasses.replace(
            self, drive=dataclasses.replace(self.drive, drive_frequency=self.mode_a.frequency - delta))

    def with_amplitude(self, amplitude: float) -> "SystemConfig":
        return dataclasses.replace(self, drive=dataclasses.replace(self.drive, amplitude=amplitude))

    def with_coupling(self, coupling: CouplingKind) -> "SystemConfig":
        return dataclasses.replace(self, coupling=coupling)

    def with_modes(self, **changes) -> "SystemConfig":
        """Replace mode fields by prefixed names, e.g. ``gamma_b=0.1, n_a=0``."""
        names = {"gamma": "decay_rate", "n": "bath_occupation", "omega": "frequency"}
        a, b = {}, {}
        for key, value in changes.items():
            prefix, _, mode = key.rpartition("_")
            if prefix not in names or mode not in ("a", "b"):
                raise TypeError(f"unknown mode parameter {key!r}")
            (a if mode == "a" else b)[names[prefix]] = value
        return dataclasses.replace(
            self, mode_a=dataclasses.replace(self.mode_a, **a),
            mode_b=dataclasses.replace(self.mode_b, **b), temperature=None)


def detunings(config: SystemConfig) -> tuple[float, float, float]:
    """``(Δ, Δ_c, Δ_h)``: carrier, anti-Stokes (cooling) and Stokes (heating) detunings."""
    delta = config.delta
    return delta, delta - config.omega_b, delta + config.omega_b


@dataclass(frozen=True)
class ValidationReport:
    detuning_ratio: float
    coupling_ratio: float
    strictness: float
    detuning_ok: bool
    coupling_ok: bool
    messages: tuple = ()

    @property
    def passed(self) -> bool:
        return self.detuning_ok and self.coupling_ok


def validate_rwa(config: SystemConfig, strictness: float = 0.01) -> ValidationReport:
    """Check ``{|ω_ab - ω_d|, |Ω|} ≪ ω_ab + ω_d`` with ``≪`` meaning ``≤ strictness ×``."""
    omega_ab = config.mode_a.frequency - config.mode_b.frequency
    omega_d = config.drive.drive_frequency
    scale = omega_ab + omega_d
    lhs_detuning = abs(omega_ab - omega_d)
    lhs_coupling = abs(config.amplitude)
    limit = strictness * scale
    detuning_ok = scale > 0 and lhs_detuning <= limit
    coupling_ok = scale > 0 and lhs_coupling <= limit
    messages = []
    if not detuning_ok:
        messages.append(f"|omega_ab - omega_d| = {lhs_detuning:.6g} exceeds "
                        f"{strictness:g} * (omega_ab + omega_d) = {limit:.6g}")
    if not coupling_ok:
        messages.append(f"|amplitude| = {lhs_coupling:.6g} exceeds "
                        f"{strictness:g} * (omega_ab + omega_d) = {limit:.6g}")
    with np.errstate(divide="ignore", invalid="ignore"):
        d_ratio = lhs_detuning / scale if scale > 0 else float("inf")
        c_ratio = lhs_coupling / scale if scale > 0 else float("inf")
    return ValidationReport(float(d_ratio), float(c_ratio), strictness,
                            detuning_ok, coupling_ok, tuple(messages))
