"""
Exact N-atom simulation and the bosonization behind the two-mode model.

Each atom has levels ``|g⟩, |a⟩, |b⟩`` (basis order 0, 1, 2).  In the
rotating frame of the drive the ensemble Hamiltonian is

    H = Σ_i [Δ σ_aa + ω_b σ_bb + Ω(σ_ab + σ_ba)]^(i)

and the collective operators ``a = Σ σ_ga / √N``, ``b = Σ σ_gb / √N`` become
independent bosons for N → ∞ at low excitation.  Everything here is dense
over the full 3^N space (N ≤ 6).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, ConfigError
from .lindblad import FockDims, build_hamiltonian, mode_operators
from .model import SystemConfig

__all__ = [
    "AtomicConfig",
    "CollectiveOps",
    "build_atomic_hamiltonian",
    "collective_operators",
    "excitation_number_operator",
    "symmetric_state",
    "collective_commutator",
    "bosonization_error",
    "dynamics_traces",
    "compare_dynamics",
    "is_permutation_symmetric",
]

MAX_ATOMS = 6
G, A, B = 0, 1, 2


def _check_atoms(n_atoms):
    if not 1 <= int(n_atoms) <= MAX_ATOMS:
        raise CapacityError(f"n_atoms must lie in [1, {MAX_ATOMS}], got {n_atoms}")
    return int(n_atoms)


@dataclass(frozen=True)
class AtomicConfig:
    n_atoms: int
    delta: float
    omega_b: float
    omega_drive_coupling: float

    def __post_init__(self):
        object.__setattr__(self, "n_atoms", _check_atoms(self.n_atoms))


def _transition(i, j):
    m = np.zeros((3, 3))
    m[i, j] = 1.0
    return m


def _embed(op, site, n_atoms):
    """``op`` acting on atom ``site`` of ``n_atoms``."""
    out = np.ones((1, 1))
    for k in range(n_atoms):
        out = np.kron(out, op if k == site else np.eye(3))
    return out


@lru_cache(maxsize=None)
def _site_sums(n_atoms):
    # Σ_i σ_xy^(i) for the transitions we need
    pairs = [(A, A), (B, B), (A, B), (B, A), (G, A), (G, B)]
    return {p: sum(_embed(_transition(*p), i, n_atoms) for i in range(n_atoms)) for p in pairs}


def build_atomic_hamiltonian(cfg: AtomicConfig) -> np.ndarray:
    s = _site_sums(cfg.n_atoms)
    h = (cfg.delta * s[A, A] + cfg.omega_b * s[B, B]
         + cfg.omega_drive_coupling * (s[A, B] + s[B, A]))
    return h


def excitation_number_operator(n_atoms: int) -> np.ndarray:
    """Total non-ground population ``Σ_i (σ_aa + σ_bb)``."""
    s = _site_sums(_check_atoms(n_atoms))
    return s[A, A] + s[B, B]


@dataclass(frozen=True, eq=False)
class CollectiveOps:
    op_a: np.ndarray
    op_b: np.ndarray


def collective_operators(n_atoms: int) -> CollectiveOps:
    n_atoms = _check_atoms(n_atoms)
    s = _site_sums(n_atoms)
    root = np.sqrt(n_atoms)
    return CollectiveOps(s[G, A] / root, s[G, B] / root)


def collective_commutator(n_atoms: int, mode: str) -> np.ndarray:
    """``[C, C†]`` for ``C`` = ``"a"`` or ``"b"``.

    Formed from the unscaled site sums (integer entries) and divided by N
    once, so that e.g. the vacuum expectation is exactly 1.
    """
    n_atoms = _check_atoms(n_atoms)
    level = {"a": A, "b": B}.get(mode)
    if level is None:
        raise ConfigError(f"mode must be 'a' or 'b', got {mode!r}", field="mode")
    s = _site_sums(n_atoms)[G, level]
    return (s @ s.T - s.T @ s) / n_atoms


def _vacuum(n_atoms):
    psi = np.zeros(3**n_atoms)
    psi[0] = 1.0
    return psi


def symmetric_state(n_atoms: int, m_a: int, n_b: int) -> np.ndarray:
    """Normalised ``(a†)^m_a (b†)^n_b |g…g⟩``."""
    ops = collective_operators(n_atoms)
    psi = _vacuum(n_atoms)
    for _ in range(n_b):
        psi = ops.op_b.T @ psi
    for _ in range(m_a):
        psi = ops.op_a.T @ psi
    norm = np.linalg.norm(psi)
    if norm < 1e-12:
        raise ConfigError(
            f"({m_a}, {n_b}) excitations do not fit in {n_atoms} atoms", field="initial_excitations")
    return psi / norm


def bosonization_error(n_atoms: int, state) -> float:
    """``max_C ‖([C, C†] - 1)|state⟩‖`` over the two collective modes."""
    n_atoms = _check_atoms(n_atoms)
    state = np.asarray(state, dtype=complex)
    if state.shape != (3**n_atoms,):
        raise ConfigError(f"state must have length {3**n_atoms}", field="state")
    if abs(np.linalg.norm(state) - 1.0) > 1e-10:
        raise ConfigError("state must be normalised", field="state")
    eye = np.eye(3**n_atoms)
    errs = []
    for mode in ("a", "b"):
        comm = collective_commutator(n_atoms, mode)
        errs.append(np.linalg.norm((comm - eye) @ state))
    return float(max(errs))


def is_permutation_symmetric(state, n_atoms: int, tol: float = 1e-10) -> bool:
    """Invariance under every transposition of neighbouring atoms."""
    t = np.asarray(state).reshape((3,) * n_atoms)
    for k in range(n_atoms - 1):
        axes = list(range(n_atoms))
        axes[k], axes[k + 1] = axes[k + 1], axes[k]
        if np.max(np.abs(t - t.transpose(axes))) > tol:
            return False
    return True


def _evolve(h, psi0, times):
    w, v = np.linalg.eigh(h)
    c = v.conj().T @ psi0
    return (v @ (np.exp(-1j * np.outer(w, times)) * c[:, None])).T


@dataclass(frozen=True, eq=False)
class DynamicsTraces:
    times: np.ndarray
    atomic: np.ndarray
    bosonic: np.ndarray
    stayed_symmetric: bool

    @property
    def deviation(self) -> float:
        return float(np.max(np.abs(self.atomic - self.bosonic)))


def dynamics_traces(cfg: AtomicConfig, initial_excitations, t_grid) -> DynamicsTraces:
    """⟨b†b⟩(t) from the exact ensemble and from the lossless two-mode model."""
    m_a, n_b = (int(x) for x in initial_excitations)
    if m_a < 0 or n_b < 0 or m_a + n_b > 2:
        raise ConfigError("initial excitations must satisfy m_a + n_b <= 2",
                          field="initial_excitations")
    if m_a + n_b > cfg.n_atoms:
        raise ConfigError(f"{m_a + n_b} excitations need at least as many atoms, got {cfg.n_atoms}",
                          field="initial_excitations")
    times = np.asarray(t_grid, dtype=float)

    psi0 = symmetric_state(cfg.n_atoms, m_a, n_b)
    ops = collective_operators(cfg.n_atoms)
    nb_op = ops.op_b.T @ ops.op_b
    states = _evolve(build_atomic_hamiltonian(cfg), psi0, times)
    atomic = np.real(np.einsum("ti,ij,tj->t", states.conj(), nb_op, states))
    symmetric = all(is_permutation_symmetric(s, cfg.n_atoms) for s in states[:: max(1, len(states) // 8)])

    # the beam-splitter model conserves m + n, so this space is exact
    dims = FockDims(max(2, m_a + n_b + 1), max(2, m_a + n_b + 1))
    boson_cfg = SystemConfig.from_detuning(delta=cfg.delta, omega_b=cfg.omega_b, gamma_a=0.0,
                                           gamma_b=0.0, amplitude=cfg.omega_drive_coupling,
                                           omega_a=max(1.0, abs(cfg.delta), cfg.omega_b) * 1e3)
    phi0 = np.zeros(dims.total)
    phi0[m_a * dims.dim_b + n_b] = 1.0
    boson_states = _evolve(build_hamiltonian(boson_cfg, dims), phi0, times)
    _, b = mode_operators(dims)
    bosonic = np.real(np.einsum("ti,ij,tj->t", boson_states.conj(), b.T @ b, boson_states))
    return DynamicsTraces(times, atomic, bosonic, symmetric)


def compare_dynamics(cfg: AtomicConfig, initial_excitations, t_grid) -> float:
    """Max over the grid of |⟨b†b⟩_atomic - ⟨b†b⟩_bosonic|."""
    return dynamics_traces(cfg, initial_excitations, t_grid).deviation
