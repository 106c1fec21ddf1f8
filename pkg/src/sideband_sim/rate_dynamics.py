"""
Langevin and rate-equation dynamics of the beam-splitter model.

For ``H = Δ a†a + ω_b b†b + Ω(a†b + b†a)`` with thermal baths the second
moments ``n_a = ⟨a†a⟩``, ``n_b = ⟨b†b⟩`` and ``Σ = ⟨a†b⟩`` form a closed set

    dn_a/dt = γ_a(n̄_a - n_a) - iΩ(Σ - Σ*)
    dn_b/dt = γ_b(n̄_b - n_b) + iΩ(Σ - Σ*)
    dΣ/dt   = -ζ Σ + iΩ(n_b - n_a),     ζ = (γ_a + γ_b)/2 + i(ω_b - Δ)

The exchange terms in the two population equations carry opposite signs so
that coherent exchange conserves ``n_a + n_b``.  Internally the state is the
real vector ``x = (n_a, n_b, Re Σ, Im Σ)`` obeying ``dx/dt = A x + c``.
"""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import ConfigError, DegenerateConfigError, StiffnessError, UnsupportedModelError
from .model import BeamSplitter, SystemConfig

__all__ = [
    "MomentState",
    "RateCoefficients",
    "Trajectory",
    "LangevinEstimate",
    "rate_coefficients",
    "generator",
    "moment_derivatives",
    "propagate_exact",
    "evolve_moments",
    "steady_moments",
    "langevin_sample",
]

CONDITION_WARNING = 1e12
LANGEVIN_BLOCK = 2048


@dataclass(frozen=True)
class MomentState:
    n_a: float
    n_b: float
    sigma: complex = 0j

    def as_vector(self) -> np.ndarray:
        return np.array([self.n_a, self.n_b, self.sigma.real, self.sigma.imag])

    @classmethod
    def from_vector(cls, x) -> "MomentState":
        return cls(float(x[0]), float(x[1]), complex(x[2], x[3]))

    def is_physical(self, tol: float = 1e-8) -> bool:
        """Non-negative populations and the bosonic Cauchy-Schwarz bound on |Σ|."""
        if self.n_a < -1e-12 or self.n_b < -1e-12:
            return False
        bound = self.n_a * self.n_b + min(self.n_a, self.n_b) + 1
        return abs(self.sigma) ** 2 <= bound + tol


@dataclass(frozen=True)
class RateCoefficients:
    gamma_a_complex: complex
    gamma_b_complex: complex
    zeta: complex


def rate_coefficients(config: SystemConfig) -> RateCoefficients:
    ga = config.gamma_a / 2 + 1j * config.delta
    gb = config.gamma_b / 2 + 1j * config.omega_b
    zeta = (config.gamma_a + config.gamma_b) / 2 + 1j * (config.omega_b - config.delta)
    return RateCoefficients(ga, gb, zeta)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def n_a(self) -> np.ndarray:
        return np.array([s.n_a for s in self.states])

    @property
    def n_b(self) -> np.ndarray:
        return np.array([s.n_b for s in self.states])

    @property
    def sigma(self) -> np.ndarray:
        return np.array([s.sigma for s in self.states])


def _require_beam_splitter(config: SystemConfig):
    if not isinstance(config.coupling, BeamSplitter):
        raise UnsupportedModelError(
            f"moment equations do not close for {config.coupling.name} coupling; "
            "use the Lindblad oracle")


def generator(config: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Drift matrix ``A`` and source ``c`` of ``dx/dt = A x + c``.

    No coupling check: the closed-form layer evaluates the same linear system
    for whatever amplitude the config carries.
    """
    ga, gb, om = config.gamma_a, config.gamma_b, config.amplitude
    k = (ga + gb) / 2
    d = config.omega_b - config.delta
    A = np.array([
        [-ga, 0.0, 0.0, 2 * om],
        [0.0, -gb, 0.0, -2 * om],
        [0.0, 0.0, -k, d],
        [-om, om, -d, -k],
    ])
    c = np.array([ga * config.n_a, gb * config.n_b, 0.0, 0.0])
    return A, c


def moment_derivatives(state: MomentState, config: SystemConfig) -> MomentState:
    """Right-hand side of the rate equations, returned as a ``MomentState``."""
    _require_beam_splitter(config)
    rc = rate_coefficients(config)
    om = config.amplitude
    s = complex(state.sigma)
    exchange = -1j * om * (s - s.conjugate())
    dn_a = config.gamma_a * (config.n_a - state.n_a) + exchange
    dn_b = config.gamma_b * (config.n_b - state.n_b) - exchange
    ds = -rc.zeta * s + 1j * om * (state.n_b - state.n_a)
    return MomentState(float(np.real(dn_a)), float(np.real(dn_b)), complex(ds))


def propagate_exact(initial: MomentState, config: SystemConfig, times) -> Trajectory:
    """Exact solution via the matrix exponential of the augmented 5×5 system."""
    _require_beam_splitter(config)
    A, c = generator(config)
    aug = np.zeros((5, 5))
    aug[:4, :4] = A
    aug[:4, 4] = c
    y0 = np.append(initial.as_vector(), 1.0)
    times = np.asarray(times, dtype=float)
    states = tuple(MomentState.from_vector((expm(aug * t) @ y0)[:4]) for t in times)
    return Trajectory(times, states)


def evolve_moments(initial: MomentState, config: SystemConfig, t_final: float,
                   rel_tol: float = 1e-8, n_points: int = 201, method: str = "DOP853") -> Trajectory:
    """Integrate the rate equations with an adaptive embedded Runge-Kutta scheme.

    Output is sampled on ``n_points`` equally spaced times through the
    integrator's dense output.
    """
    _require_beam_splitter(config)
    if not t_final > 0:
        raise ConfigError("t_final must be > 0", field="t_final")
    if not 1e-14 < rel_tol < 1e-2:
        raise ConfigError("rel_tol must lie in (1e-14, 1e-2)", field="rel_tol")
    A, c = generator(config)
    x0 = initial.as_vector()
    times = np.linspace(0.0, t_final, n_points)
    extra = {"jac": A} if method in ("Radau", "BDF", "LSODA") else {}
    # local error control two decades below the target keeps the global error within rel_tol
    rtol = max(rel_tol * 1e-2, 2.5e-14)
    sol = solve_ivp(lambda t, x: A @ x + c, (0.0, t_final), x0, method=method,
                    t_eval=times, rtol=rtol, atol=rtol * 1e-2, **extra)
    if not sol.success:
        raise StiffnessError(
            f"rate-equation integration failed at t={sol.t[-1] if sol.t.size else 0.0:.6g}: "
            f"{sol.message}; reduce amplitude*dt or loosen rel_tol")
    states = tuple(MomentState.from_vector(x) for x in sol.y.T)
    return Trajectory(sol.t, states)


def steady_moments(config: SystemConfig) -> MomentState:
    """Algebraic steady state of the rate equations (dense LU solve)."""
    _require_beam_splitter(config)
    return _steady_solve(config)


def _steady_solve(config: SystemConfig) -> MomentState:
    if config.gamma_a + config.gamma_b <= 0:
        raise DegenerateConfigError("both decay rates are zero: no steady state")
    A, c = generator(config)
    try:
        x = np.linalg.solve(A, -c)
    except np.linalg.LinAlgError:
        raise DegenerateConfigError(
            "steady-state system is singular (a mode is undamped and uncoupled)") from None
    cond = np.linalg.cond(A)
    if cond > CONDITION_WARNING:
        warnings.warn(f"steady-state system is ill-conditioned (cond = {cond:.3e})",
                      RuntimeWarning, stacklevel=3)
    return MomentState.from_vector(x)


@dataclass(frozen=True)
class LangevinEstimate:
    """Sample means over trajectories with their standard errors."""

    mean: MomentState
    stderr_n_a: float
    stderr_n_b: float
    stderr_sigma: float
    n_traj: int
    seed: int

    @property
    def stderr(self) -> MomentState:
        return MomentState(self.stderr_n_a, self.stderr_n_b, complex(self.stderr_sigma, 0.0))


def _block_rng(seed: int, block: int) -> np.random.Generator:
    # counter-based stream per (seed, block): independent of scheduling
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def _run_block(drift, dt, noise_std, initial_std, n, steps, rng, chunk=256):
    """Final states of ``n`` trajectories after ``steps`` exponential-Euler steps.

    In the eigenbasis of the drift the recursion ``y ← e^{λ dt} y + w'`` is
    diagonal, so each chunk of steps collapses into one weighted sum of the
    chunk's noise increments.
    """
    lam, vec = np.linalg.eig(drift)
    if np.linalg.cond(vec) > 1e8:
        return _run_block_matrix(drift, dt, noise_std, initial_std, n, steps, rng, chunk)
    vinv = np.linalg.inv(vec)
    step = np.exp(lam * dt)
    to_eig = np.exp(lam * dt / 2)[:, None] * vinv  # midpoint injection
    z = rng.standard_normal((2, 2, n))
    y = vinv @ (initial_std[:, None] * (z[0] + 1j * z[1]) / np.sqrt(2))
    done = 0
    while done < steps:
        k = min(chunk, steps - done)
        z = rng.standard_normal((k, 2, 2, n))
        w = noise_std[None, :, None] * (z[:, 0] + 1j * z[:, 1])
        w = np.einsum("ij,kjn->kin", to_eig, w)
        weights = step[:, None] ** np.arange(k - 1, -1, -1)[None, :]
        y = step[:, None] ** k * y + np.einsum("ik,kin->in", weights, w)
        done += k
    return vec @ y


def _run_block_matrix(drift, dt, noise_std, initial_std, n, steps, rng, chunk):
    # defective drift (exceptional point): plain matrix recursion
    prop = expm(drift * dt)
    half = expm(drift * dt / 2)
    z = rng.standard_normal((2, 2, n))
    x = initial_std[:, None] * (z[0] + 1j * z[1]) / np.sqrt(2)
    done = 0
    while done < steps:
        k = min(chunk, steps - done)
        z = rng.standard_normal((k, 2, 2, n))
        w = noise_std[None, :, None] * (z[:, 0] + 1j * z[:, 1])
        w = np.einsum("ij,kjn->kin", half, w)
        for j in range(k):
            x = prop @ x + w[j]
        done += k
    return x


def langevin_sample(config: SystemConfig, n_traj: int, seed: int, t_final: float,
                    dt: float, initial: MomentState | None = None,
                    threads: int | None = None) -> LangevinEstimate:
    """Monte Carlo estimate of the moments from c-number Langevin trajectories.

    Each trajectory obeys ``dC = (-Γ_C C - iΩ C') dt + dW_C`` with complex
    Wiener increments, ``E|dW_C|² = γ_C n̄_C dt`` (normal ordering, so
    ``|b|²`` estimates ``⟨b†b⟩``).  Steps use the exact drift propagator
    ``exp(M dt)`` with each noise increment injected at the step midpoint;
    plain Euler-Maruyama is unstable for ``Ω dt`` near the allowed bound.

    Trajectories start from zero, or from independent complex Gaussians with
    the populations of ``initial`` (its Σ is ignored).  Trajectories are split
    into fixed blocks, each with its own Philox stream keyed by
    ``(seed, block index)``, so results do not depend on ``threads``.
    """
    _require_beam_splitter(config)
    if n_traj < 100:
        raise ConfigError("n_traj must be >= 100", field="n_traj")
    if not (t_final > 0 and dt > 0):
        raise ConfigError("t_final and dt must be > 0", field="dt")
    rc = rate_coefficients(config)
    om = config.amplitude
    fastest = max(abs(rc.gamma_a_complex), abs(rc.gamma_b_complex), om)
    if dt * fastest >= 0.1:
        raise StiffnessError(
            f"dt = {dt:g} too large: dt * max(|Gamma|, amplitude) = {dt * fastest:.3g} >= 0.1")

    drift = np.array([[-rc.gamma_a_complex, -1j * om], [-1j * om, -rc.gamma_b_complex]])
    noise_std = np.sqrt(np.array([config.gamma_a * config.n_a, config.gamma_b * config.n_b]) * dt / 2)
    if initial is None:
        initial_std = np.zeros(2)
    else:
        initial_std = np.sqrt(np.maximum([initial.n_a, initial.n_b], 0.0))
    steps = int(round(t_final / dt))

    sizes = [LANGEVIN_BLOCK] * (n_traj // LANGEVIN_BLOCK)
    if n_traj % LANGEVIN_BLOCK:
        sizes.append(n_traj % LANGEVIN_BLOCK)
    if threads is None:
        threads = int(os.environ.get("SIDEBAND_SIM_THREADS", "1") or 1)

    def work(block):
        return _run_block(drift, dt, noise_std, initial_std, sizes[block], steps,
                          _block_rng(seed, block))

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            finals = list(pool.map(work, range(len(sizes))))
    else:
        finals = [work(i) for i in range(len(sizes))]
    x = np.concatenate(finals, axis=1)

    pa = np.abs(x[0]) ** 2
    pb = np.abs(x[1]) ** 2
    s = np.conj(x[0]) * x[1]
    root_n = np.sqrt(n_traj)
    mean = MomentState(float(pa.mean()), float(pb.mean()), complex(s.mean()))
    return LangevinEstimate(
        mean=mean,
        stderr_n_a=float(pa.std(ddof=1) / root_n),
        stderr_n_b=float(pb.std(ddof=1) / root_n),
        stderr_sigma=float(np.sqrt(np.sum(np.abs(s - s.mean()) ** 2) / (n_traj - 1)) / root_n),
        n_traj=n_traj,
        seed=seed,
    )
