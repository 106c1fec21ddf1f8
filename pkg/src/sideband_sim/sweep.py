"""
Parameter sweeps and single-point reports over all engines.

Engines: ``closed_form`` (analytic formulas), ``rate`` (steady rate
equations), ``lindblad`` (truncated master equation) and ``langevin``
(c-number Monte Carlo).  The first two and the last one exist only for the
beam-splitter coupling; for other couplings their columns hold ``nan`` and
the row's ``reason`` says why.
"""
from __future__ import annotations

import dataclasses
import datetime as _dt
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .closed_form import (cooling_efficiency_xi, effective_temperature, jc_cooling_limit,
                          sideband_cooling_limit, steady_population)
from .config_io import config_hash
from .errors import ConfigError, SidebandError
from .lindblad import steady_density, truncation_check
from .model import BeamSplitter, Generalized, SystemConfig, detunings, validate_rwa
from .rate_dynamics import generator, langevin_sample, rate_coefficients, steady_moments

__all__ = ["ENGINES", "PARAMETERS", "SweepSpec", "EngineOptions", "SweepResult",
           "evaluate_point", "run_sweep", "run_point", "format_point_report"]

ENGINES = ("closed_form", "rate", "lindblad", "langevin")
PARAMETERS = ("delta", "omega_drive", "amplitude", "g")

# engine agreement tolerances for the reason column
RATE_REL_TOL = 1e-8
LINDBLAD_REL_TOL = 1e-2
LINDBLAD_ABS_TOL = 1e-6
LANGEVIN_SIGMAS = 4.0
MAX_LANGEVIN_STEPS = 200_000


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    points: int
    spacing: str = "linear"
    engines: tuple = ("closed_form", "rate")

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ConfigError(f"sweep parameter must be one of {PARAMETERS}", field="parameter")
        if not self.start < self.stop:
            raise ConfigError("sweep requires start < stop", field="start")
        if int(self.points) < 2:
            raise ConfigError("sweep requires at least 2 points", field="points")
        if self.spacing not in ("linear", "log"):
            raise ConfigError("spacing must be 'linear' or 'log'", field="spacing")
        if self.spacing == "log" and self.start <= 0:
            raise ConfigError("log spacing requires start > 0", field="start")
        engines = tuple(self.engines)
        unknown = [e for e in engines if e not in ENGINES]
        if unknown or not engines:
            raise ConfigError(f"engines must be a non-empty subset of {ENGINES}", field="engines")
        # canonical order, no duplicates
        object.__setattr__(self, "engines", tuple(e for e in ENGINES if e in engines))
        object.__setattr__(self, "points", int(self.points))

    def grid(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class EngineOptions:
    tol: float = 1e-3
    seed: int = 0
    n_traj: int = 2000
    langevin_dt: float | None = None
    langevin_t_final: float | None = None


def apply_parameter(config: SystemConfig, parameter: str, value: float) -> SystemConfig:
    if parameter == "delta":
        return config.with_detuning(value)
    if parameter == "omega_drive":
        return dataclasses.replace(
            config, drive=dataclasses.replace(config.drive, drive_frequency=value))
    if parameter == "amplitude":
        return config.with_amplitude(value)
    if parameter == "g":
        if isinstance(config.coupling, Generalized):
            return config.with_coupling(dataclasses.replace(config.coupling, g_prime=value))
        return config.with_amplitude(value)
    raise ConfigError(f"unknown sweep parameter {parameter!r}", field="parameter")


def _langevin_settings(config: SystemConfig, options: EngineOptions):
    rc = rate_coefficients(config)
    fastest = max(abs(rc.gamma_a_complex), abs(rc.gamma_b_complex), config.amplitude)
    dt = options.langevin_dt or 0.05 / fastest
    t_final = options.langevin_t_final
    if t_final is None:
        A, _ = generator(config)
        slowest = float(np.min(-np.linalg.eigvals(A).real))
        if slowest <= 0:
            raise SidebandError("langevin: moment dynamics has no decay")
        t_final = 15.0 / slowest
    steps = t_final / dt
    if steps > MAX_LANGEVIN_STEPS:
        raise SidebandError(f"langevin: relaxation needs {steps:.3g} steps "
                            f"(limit {MAX_LANGEVIN_STEPS})")
    return dt, t_final


def evaluate_point(config: SystemConfig, engines, options: EngineOptions = EngineOptions()) -> dict:
    """One row: occupations per engine, auxiliary columns and a ``reason`` string."""
    row: dict = {}
    reasons: list[str] = []
    is_bs = isinstance(config.coupling, BeamSplitter)
    nan = float("nan")
    for engine in engines:
        row[f"n_b_{engine}"] = row[f"n_a_{engine}"] = nan
        if engine == "langevin":
            row["n_b_langevin_se"] = row["n_a_langevin_se"] = nan
        if engine == "lindblad":
            row["lindblad_residual"] = nan
            row["lindblad_dims"] = ""
        try:
            if engine in ("closed_form", "rate", "langevin") and not is_bs:
                raise SidebandError(f"{engine}: not defined for {config.coupling.name} coupling")
            if engine == "closed_form":
                n_b, n_a = steady_population(config)
            elif engine == "rate":
                m = steady_moments(config)
                n_b, n_a = m.n_b, m.n_a
            elif engine == "lindblad":
                dims = truncation_check(config, tol=options.tol)
                sol = steady_density(config, dims, truncation_flag=True)
                n_b, n_a = sol.n_b, sol.n_a
                row["lindblad_residual"] = sol.residual
                row["lindblad_dims"] = f"{dims.dim_a}x{dims.dim_b}"
            else:
                dt, t_final = _langevin_settings(config, options)
                est = langevin_sample(config, options.n_traj, options.seed, t_final, dt, threads=1)
                n_b, n_a = est.mean.n_b, est.mean.n_a
                row["n_b_langevin_se"] = est.stderr_n_b
                row["n_a_langevin_se"] = est.stderr_n_a
            row[f"n_b_{engine}"] = n_b
            row[f"n_a_{engine}"] = n_a
        except SidebandError as exc:
            msg = str(exc)
            reasons.append(msg if msg.startswith(engine) else f"{engine}: {msg}")

    reasons += _disagreements(row, engines)
    row["t_eff"] = nan
    units = "SI" if config.unit_system == "SI" else "scaled"
    for engine in engines:
        n_b = row[f"n_b_{engine}"]
        if np.isfinite(n_b):
            row["t_eff"] = effective_temperature(max(n_b, 0.0), config.omega_b, units=units)
            break
    row["reason"] = "; ".join(reasons)
    return row


def _disagreements(row, engines) -> list[str]:
    ref_name = next((e for e in ("closed_form", "rate") if e in engines
                     and np.isfinite(row[f"n_b_{e}"])), None)
    if ref_name is None:
        return []
    ref = row[f"n_b_{ref_name}"]
    out = []
    if ref_name == "closed_form" and "rate" in engines and np.isfinite(row["n_b_rate"]):
        if abs(row["n_b_rate"] - ref) > RATE_REL_TOL * max(abs(ref), 1e-300):
            out.append("rate disagrees with closed_form")
    if "lindblad" in engines and np.isfinite(row["n_b_lindblad"]):
        if abs(row["n_b_lindblad"] - ref) > LINDBLAD_REL_TOL * abs(ref) + LINDBLAD_ABS_TOL:
            out.append(f"lindblad disagrees with {ref_name} beyond 1%")
    if "langevin" in engines and np.isfinite(row["n_b_langevin"]):
        se = row["n_b_langevin_se"]
        if abs(row["n_b_langevin"] - ref) > LANGEVIN_SIGMAS * se + 1e-12:
            out.append(f"langevin deviates from {ref_name} by more than {LANGEVIN_SIGMAS:g} s.e.")
    return out


def _columns(parameter, engines) -> list[str]:
    cols = [parameter]
    for e in engines:
        cols += [f"n_b_{e}", f"n_a_{e}"]
        if e == "langevin":
            cols += ["n_b_langevin_se", "n_a_langevin_se"]
        if e == "lindblad":
            cols += ["lindblad_residual", "lindblad_dims"]
    return cols + ["t_eff", "reason"]


def _format(value) -> str:
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value + 0.0:.12g}"  # no "-0"


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _timestamp(config_path=None) -> str:
    """ISO-8601 stamp that is stable across reruns.

    ``SOURCE_DATE_EPOCH`` wins; otherwise the config file's modification
    time; otherwise ``unset``.
    """
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None and config_path is not None:
        try:
            epoch = os.path.getmtime(config_path)
        except OSError:
            epoch = None
    if epoch is None:
        return "unset"
    stamp = _dt.datetime.fromtimestamp(int(float(epoch)), tz=_dt.timezone.utc)
    return stamp.isoformat().replace("+00:00", "Z")


@dataclass
class SweepResult:
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def column(self, name) -> np.ndarray:
        return np.array([row[name] for row in self.rows])

    @property
    def all_failed(self) -> bool:
        engines = [c[4:] for c in self.columns if c.startswith("n_b_") and not c.endswith("_se")]
        return all(not np.isfinite(row[f"n_b_{e}"]) for row in self.rows for e in engines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {value}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_csv_field(_format(row[c])) for c in self.columns) + "\n")
        return buf.getvalue()


def run_sweep(config, spec: SweepSpec, out_path=None, options: EngineOptions = EngineOptions(),
              threads: int | None = None) -> SweepResult:
    """Evaluate every grid point of ``spec`` and optionally write the CSV.

    ``config`` is a :class:`SystemConfig` or a path to a config file.  Grid
    points are statically partitioned across ``threads`` workers and
    gathered back in grid order, so output is independent of the worker count.
    """
    from .config_io import load_config

    config_path = None
    if not isinstance(config, SystemConfig):
        config_path = config
        config = load_config(config)
    if threads is None:
        threads = int(os.environ.get("SIDEBAND_SIM_THREADS", "1") or 1)
    grid = spec.grid()

    def work(indices):
        return [(i, evaluate_point(apply_parameter(config, spec.parameter, grid[i]),
                                   spec.engines, options)) for i in indices]

    parts = [p for p in np.array_split(np.arange(len(grid)), max(1, threads)) if len(p)]
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = [r for chunk in pool.map(work, parts) for r in chunk]
    else:
        results = [r for chunk in map(work, parts) for r in chunk]
    results.sort(key=lambda item: item[0])
    rows = []
    for i, row in results:
        rows.append({spec.parameter: float(grid[i]), **row})

    metadata = {
        "tool": f"sideband_sim {__version__}",
        "timestamp": _timestamp(config_path),
        "config_hash": config_hash(config),
        "seed": options.seed,
        "sweep": f"{spec.parameter} {spec.spacing} [{spec.start:.12g}, {spec.stop:.12g}] "
                 f"x {spec.points}",
        "engines": " ".join(spec.engines),
        "units": config.unit_system,
    }
    result = SweepResult(_columns(spec.parameter, spec.engines), rows, metadata)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(result.to_csv())
    return result


def run_point(config, engines=("closed_form", "rate"),
              options: EngineOptions = EngineOptions()) -> dict:
    """Machine-readable summary of one configuration (see :func:`format_point_report`)."""
    from .config_io import load_config

    if not isinstance(config, SystemConfig):
        config = load_config(config)
    engines = tuple(e for e in ENGINES if e in engines)
    row = evaluate_point(config, engines, options)
    delta, delta_c, delta_h = detunings(config)
    rwa = validate_rwa(config)
    is_bs = isinstance(config.coupling, BeamSplitter)
    jc = jc_cooling_limit(config)
    sid = sideband_cooling_limit(config)
    decoupled = (config.coupling.g_prime == 0 if isinstance(config.coupling, Generalized)
                 else config.amplitude == 0)
    try:
        xi = cooling_efficiency_xi(config) if is_bs else float("nan")
    except SidebandError:
        xi = float("nan")
    flags = []
    if decoupled:
        flags.append("no cooling (decoupled)")
    if not rwa.passed:
        flags.append("RWA conditions not satisfied")
    if not sid.resolved:
        flags.append("not in the resolved-sideband regime")
    return {
        "coupling": config.coupling.name,
        "units": config.unit_system,
        "detunings": {"delta": delta, "delta_c": delta_c, "delta_h": delta_h},
        "xi": xi,
        "engines": {e: {"n_b": row[f"n_b_{e}"] + 0.0, "n_a": row[f"n_a_{e}"] + 0.0} for e in engines},
        "langevin_stderr": ({"n_b": row["n_b_langevin_se"], "n_a": row["n_a_langevin_se"]}
                            if "langevin" in engines else None),
        "t_eff": row["t_eff"],
        "limits": {
            "jc_limit": jc.limit,
            "jc_regime": jc.regime_ok,
            "sideband_limit": sid.limit,
            "sideband_optimal_detuning": sid.optimal_detuning,
            "resolved_sideband": sid.resolved,
        },
        "rwa": {"passed": rwa.passed, "messages": list(rwa.messages)},
        "flags": flags,
        "reason": row["reason"],
    }


def format_point_report(report: dict) -> str:
    lines = [f"coupling: {report['coupling']}   units: {report['units']}"]
    d = report["detunings"]
    lines.append(f"detunings: delta={d['delta']:.6g}  delta_c={d['delta_c']:.6g}  "
                 f"delta_h={d['delta_h']:.6g}")
    lines.append(f"xi: {_format(report['xi'])}")
    for name, vals in report["engines"].items():
        extra = ""
        if name == "langevin" and report["langevin_stderr"]:
            extra = f" +/- {_format(report['langevin_stderr']['n_b'])}"
        lines.append(f"{name:>12}: n_b = {_format(vals['n_b'])}{extra}   "
                     f"n_a = {_format(vals['n_a'])}")
    t_unit = "K" if report["units"] == "SI" else "(omega_b units, k_B = 1)"
    lines.append(f"T_eff: {_format(report['t_eff'])} {t_unit}")
    lim = report["limits"]
    lines.append(f"JC cooling limit: {_format(lim['jc_limit'])} "
                 f"(regime {'satisfied' if lim['jc_regime'] else 'not satisfied'})")
    lines.append(f"sideband limit: {_format(lim['sideband_limit'])} at "
                 f"delta = {_format(lim['sideband_optimal_detuning'])}")
    for msg in report["rwa"]["messages"]:
        lines.append(f"warning: {msg}")
    for flag in report["flags"]:
        lines.append(f"note: {flag}")
    if report["reason"]:
        lines.append(f"reason: {report['reason']}")
    return "\n".join(lines)
