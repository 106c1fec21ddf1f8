"""Analytic steady-state cooling results."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateConfigError
from .model import HBAR, K_B, SystemConfig
from .rate_dynamics import _steady_solve

__all__ = [
    "SteadyStateReport",
    "CoolingLimit",
    "SidebandLimit",
    "cooling_efficiency_xi",
    "steady_population",
    "effective_temperature",
    "resonant_strong_drive_population",
    "jc_cooling_limit",
    "sideband_cooling_limit",
    "steady_report",
]

MUCH_LESS = 0.01
RESOLVED_SIDEBAND = 0.3


def _check_decay(config: SystemConfig):
    if config.gamma_a + config.gamma_b <= 0:
        raise DegenerateConfigError("gamma_a + gamma_b must be > 0")


def cooling_efficiency_xi(config: SystemConfig) -> float:
    """Fraction ξ of the bath-occupation gap removed from mode b.

    ``n_b_final = n̄_b - ξ (n̄_b - n̄_a)`` with

        ξ = Ω² γ_a (γ_a + γ_b) / [(γ_a + γ_b)² (Ω² + γ_a γ_b/4) + γ_a γ_b (Δ - ω_b)²]
    """
    _check_decay(config)
    ga, gb, om = config.gamma_a, config.gamma_b, config.amplitude
    s = ga + gb
    denom = s * s * (om * om + ga * gb / 4) + ga * gb * (config.delta - config.omega_b) ** 2
    if denom == 0:
        # Ω = 0 with one undamped mode: nothing is exchanged
        return 0.0
    return om * om * ga * s / denom


def steady_population(config: SystemConfig) -> tuple[float, float]:
    """``(n_b_final, n_a_final)`` in the steady state.

    ``n_b_final`` is the closed form; ``n_a_final`` has no printed formula and
    comes from the linear steady-state solve of the rate equations.
    """
    xi = cooling_efficiency_xi(config)
    n_b_final = config.n_b - xi * (config.n_b - config.n_a)
    if config.amplitude == 0:
        return n_b_final, config.n_a
    return n_b_final, _steady_solve(config).n_a


def effective_temperature(n_b_final: float, omega_b: float, units: str = "SI") -> float:
    """Temperature whose Bose-Einstein occupation at ``omega_b`` equals ``n_b_final``.

    ``units="scaled"`` returns ``ω_b / ln(1 + 1/n)`` (ħ = k_B = 1); ``"SI"``
    returns kelvin.  Zero occupation maps to zero temperature.
    """
    if n_b_final < 0:
        raise ConfigError(f"occupation must be >= 0, got {n_b_final}", field="n_b_final")
    if omega_b <= 0:
        raise ConfigError("omega_b must be > 0", field="omega_b")
    if n_b_final == 0:
        return 0.0
    t = omega_b / np.log1p(1.0 / n_b_final)
    if units == "SI":
        return float(t * HBAR / K_B)
    if units == "scaled":
        return float(t)
    raise ConfigError(f"unknown unit system {units!r}", field="units.system")


def resonant_strong_drive_population(config: SystemConfig) -> float:
    """Large-Ω limit at Δ = ω_b: the decay-weighted mean of the bath occupations."""
    _check_decay(config)
    ga, gb = config.gamma_a, config.gamma_b
    return (gb * config.n_b + ga * config.n_a) / (ga + gb)


@dataclass(frozen=True)
class CoolingLimit:
    limit: float
    regime_ok: bool
    ratio: float


def jc_cooling_limit(config: SystemConfig, threshold: float = MUCH_LESS) -> CoolingLimit:
    """Beam-splitter cooling limit ``n̄_a``.

    ``regime_ok`` reports ``γ_b n̄_b ≤ threshold · γ_a n̄_a``; ``ratio`` is the
    left side over the right side without the threshold.
    """
    lhs = config.gamma_b * config.n_b
    rhs = config.gamma_a * config.n_a
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0 else float("inf")
    return CoolingLimit(config.n_a, bool(rhs > 0 and lhs <= threshold * rhs), ratio)


@dataclass(frozen=True)
class SidebandLimit:
    limit: float
    optimal_detuning: float
    resolved: bool


def sideband_cooling_limit(config: SystemConfig,
                           resolved_threshold: float = RESOLVED_SIDEBAND) -> SidebandLimit:
    """Usual sideband limit ``n̄_a + γ_a²/4ω_b²`` reached at ``Δ = √(ω_b² + γ_a²)``."""
    ga, wb = config.gamma_a, config.omega_b
    return SidebandLimit(
        config.n_a + ga * ga / (4 * wb * wb),
        float(np.hypot(wb, ga)),
        bool(ga / wb < resolved_threshold),
    )


@dataclass(frozen=True)
class SteadyStateReport:
    xi: float
    n_b_final: float
    n_a_final: float
    t_eff: float


def steady_report(config: SystemConfig) -> SteadyStateReport:
    """ξ, both final occupations and the effective temperature of mode b."""
    xi = cooling_efficiency_xi(config)
    n_b_final, n_a_final = steady_population(config)
    units = "SI" if config.unit_system == "SI" else "scaled"
    t_eff = effective_temperature(max(n_b_final, 0.0), config.omega_b, units=units)
    return SteadyStateReport(xi, n_b_final, n_a_final, t_eff)
