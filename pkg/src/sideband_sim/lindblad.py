"""
Truncated-Fock-space master-equation oracle for the two-mode models.

    dρ/dt = -i[H, ρ] + Σ_C γ_C (n̄_C + 1) D[C]ρ + γ_C n̄_C D[C†]ρ,
    D[X]ρ = XρX† - ½{X†X, ρ}

Superoperators act on row-major vectorised density matrices, so that
``vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)``.  The dense Liouvillian is only built for
small spaces.  Larger problems use a sparse solve restricted
to the block of coherences the dynamics can reach from a diagonal state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import (CapacityError, ConfigError, DegenerateConfigError, IntegrationError,
                     MultiplicityError)
from .linearization import linearize
from .model import BeamSplitter, Generalized, SystemConfig

__all__ = [
    "FockDims",
    "DensityMatrix",
    "SteadySolution",
    "mode_operators",
    "number_operator",
    "build_hamiltonian",
    "build_liouvillian",
    "apply_liouvillian",
    "steady_density",
    "evolve_density",
    "density_trajectory",
    "truncation_check",
    "effective_full_params",
    "mean_field_drift",
]

MAX_TOTAL_DIM = 4096
# largest Fock dimension for which the dense (n² × n²) Liouvillian is formed
DENSE_LIMIT = 64
# default steady-state method switches from dense to sparse LU above this
DENSE_DEFAULT = 25
# unknowns in the sparse symmetry-block solve; LU fill-in makes larger blocks impractical
SPARSE_LIMIT = 60_000


@dataclass(frozen=True)
class FockDims:
    dim_a: int
    dim_b: int
    max_total: int = field(default=MAX_TOTAL_DIM, compare=False)

    def __post_init__(self):
        if int(self.dim_a) < 2 or int(self.dim_b) < 2:
            raise ConfigError(f"Fock dimensions must be >= 2, got ({self.dim_a}, {self.dim_b})",
                              field="dims")
        object.__setattr__(self, "dim_a", int(self.dim_a))
        object.__setattr__(self, "dim_b", int(self.dim_b))
        if self.total > self.max_total:
            raise CapacityError(
                f"Fock space {self.dim_a}x{self.dim_b} = {self.total} exceeds the bound {self.max_total}")

    @property
    def total(self) -> int:
        return self.dim_a * self.dim_b


def _lowering(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def mode_operators(dims: FockDims) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation operators ``a ⊗ 1`` and ``1 ⊗ b``."""
    a = np.kron(_lowering(dims.dim_a), np.eye(dims.dim_b))
    b = np.kron(np.eye(dims.dim_a), _lowering(dims.dim_b))
    return a, b


def number_operator(dims: FockDims) -> np.ndarray:
    na = np.arange(dims.dim_a)[:, None]
    nb = np.arange(dims.dim_b)[None, :]
    return np.diag((na + nb).ravel().astype(float))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dims: FockDims
    elements: np.ndarray

    def __post_init__(self):
        n = self.dims.total
        el = np.asarray(self.elements, dtype=complex)
        if el.shape != (n, n):
            raise ConfigError(f"density matrix must be {n}x{n}, got {el.shape}", field="rho")
        object.__setattr__(self, "elements", el)

    @classmethod
    def fock(cls, m: int, n: int, dims: FockDims) -> "DensityMatrix":
        """Pure product state ``|m⟩_a |n⟩_b``."""
        if not (0 <= m < dims.dim_a and 0 <= n < dims.dim_b):
            raise ConfigError(f"|{m},{n}> lies outside the truncated space", field="rho")
        psi = np.zeros(dims.total)
        psi[m * dims.dim_b + n] = 1.0
        return cls(dims, np.outer(psi, psi))

    @classmethod
    def thermal(cls, n_a: float, n_b: float, dims: FockDims) -> "DensityMatrix":
        """Product of (renormalised, truncated) thermal states."""
        def probs(nbar, dim):
            if nbar == 0:
                p = np.zeros(dim)
                p[0] = 1.0
                return p
            p = (nbar / (nbar + 1)) ** np.arange(dim)
            return p / p.sum()
        p = np.kron(probs(n_a, dims.dim_a), probs(n_b, dims.dim_b))
        return cls(dims, np.diag(p))

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.sum(op.T * self.elements))

    def populations(self) -> tuple[float, float]:
        """``(⟨a†a⟩, ⟨b†b⟩)``."""
        p = np.real(np.diag(self.elements)).reshape(self.dims.dim_a, self.dims.dim_b)
        return (float(np.arange(self.dims.dim_a) @ p.sum(axis=1)),
                float(np.arange(self.dims.dim_b) @ p.sum(axis=0)))

    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        p = np.real(np.diag(self.elements)).reshape(self.dims.dim_a, self.dims.dim_b)
        return p.sum(axis=1), p.sum(axis=0)

    def trace_deviation(self) -> float:
        return float(abs(np.trace(self.elements) - 1.0))

    def hermiticity_deviation(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def min_eigenvalue(self) -> float:
        herm = (self.elements + self.elements.conj().T) / 2
        return float(np.linalg.eigvalsh(herm)[0])

    def purity(self) -> float:
        return float(np.real(np.sum(self.elements * self.elements.T)))

    def check(self, herm_tol=1e-10, trace_tol=1e-10, pos_tol=1e-8) -> None:
        """Raise :class:`IntegrationError` if any physical-state tolerance fails."""
        problems = []
        if self.trace_deviation() > trace_tol:
            problems.append(f"trace deviation {self.trace_deviation():.3e}")
        if self.hermiticity_deviation() > herm_tol:
            problems.append(f"hermiticity deviation {self.hermiticity_deviation():.3e}")
        lam = self.min_eigenvalue()
        if lam < -pos_tol:
            problems.append(f"minimum eigenvalue {lam:.3e}")
        if problems:
            raise IntegrationError("unphysical density matrix: " + ", ".join(problems))


@dataclass(frozen=True, eq=False)
class SteadySolution:
    rho: DensityMatrix
    n_a: float
    n_b: float
    residual: float
    truncation_flag: bool = False
    method: str = "null_space"


def effective_full_params(config: SystemConfig) -> tuple[float, float]:
    """(Δ, g) of the Full model equivalent to ``config``'s coupling."""
    c = config.coupling
    if isinstance(c, Generalized):
        lin = linearize(c.f_spec, c.g_prime, c.f_drive, config.delta, config.omega_b)
        return lin.delta_eff, lin.g_eff
    return config.delta, config.amplitude


def build_hamiltonian(config: SystemConfig, dims: FockDims) -> np.ndarray:
    """Rotating-frame Hamiltonian for the configured coupling kind.

    Generalized couplings are linearized first and then built as Full.
    """
    a, b = mode_operators(dims)
    ad, bd = a.conj().T, b.conj().T
    delta, amp = effective_full_params(config)
    h = delta * (ad @ a) + config.omega_b * (bd @ b)
    if isinstance(config.coupling, BeamSplitter):
        h = h + amp * (ad @ b + bd @ a)
    else:
        h = h + amp * (ad + a) @ (bd + b)
    return h


def _collapse_ops(config: SystemConfig, dims: FockDims):
    a, b = mode_operators(dims)
    ops = []
    for gamma, nbar, op in ((config.gamma_a, config.n_a, a), (config.gamma_b, config.n_b, b)):
        if gamma > 0:
            ops.append((gamma * (nbar + 1), op))
            if nbar > 0:
                ops.append((gamma * nbar, op.conj().T))
    return ops


def build_liouvillian(config: SystemConfig, dims: FockDims) -> np.ndarray:
    """Dense superoperator acting on row-major ``vec(ρ)``."""
    n = dims.total
    if n > DENSE_LIMIT:
        raise CapacityError(
            f"dense Liouvillian limited to Fock dimension {DENSE_LIMIT}, got {n}")
    h = build_hamiltonian(config, dims)
    eye = np.eye(n)
    L = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, x in _collapse_ops(config, dims):
        xdx = x.conj().T @ x
        L += rate * (np.kron(x, x.conj()) - 0.5 * np.kron(xdx, eye) - 0.5 * np.kron(eye, xdx.T))
    return L


def apply_liouvillian(rho: np.ndarray, h: np.ndarray, collapse) -> np.ndarray:
    """``L ρ`` in matrix form (no superoperator)."""
    out = -1j * (h @ rho - rho @ h)
    for rate, x in collapse:
        xd = x.conj().T
        xdx = xd @ x
        out += rate * (x @ rho @ xd - 0.5 * (xdx @ rho + rho @ xdx))
    return out


def _check_uniqueness(config: SystemConfig):
    ga, gb = config.gamma_a, config.gamma_b
    if ga == 0 and gb == 0:
        raise MultiplicityError("no dissipation: every Hamiltonian eigenprojector is stationary")
    if config.amplitude == 0 and not isinstance(config.coupling, Generalized) and min(ga, gb) == 0:
        mode = "a" if ga == 0 else "b"
        raise MultiplicityError(f"mode {mode} is undamped and uncoupled: steady state not unique")


def mean_field_drift(config: SystemConfig) -> np.ndarray:
    """Drift matrix of ``(⟨a⟩, ⟨a†⟩, ⟨b⟩, ⟨b†⟩)`` for the configured coupling."""
    delta, amp = effective_full_params(config)
    ka, kb = config.gamma_a / 2, config.gamma_b / 2
    wb = config.omega_b
    if isinstance(config.coupling, BeamSplitter):
        cross = np.array([[-1j, 0], [0, 1j]]) * amp
    else:
        cross = np.array([[-1j, -1j], [1j, 1j]]) * amp
    m = np.zeros((4, 4), dtype=complex)
    m[:2, :2] = np.diag([-1j * delta - ka, 1j * delta - ka])
    m[2:, 2:] = np.diag([-1j * wb - kb, 1j * wb - kb])
    m[:2, 2:] = cross
    m[2:, :2] = cross
    return m


def _check_stability(config: SystemConfig):
    # counter-rotating terms can amplify; the quadratic model then has no steady state
    if isinstance(config.coupling, BeamSplitter):
        return
    rate = float(np.max(np.linalg.eigvals(mean_field_drift(config)).real))
    if rate >= 0:
        raise DegenerateConfigError(
            f"parametrically unstable (mean-field growth rate {rate:.3g} >= 0): no steady state")


def _null_space_solve(config: SystemConfig, dims: FockDims):
    L = build_liouvillian(config, dims)
    n = dims.total
    # replace one equation with the trace condition
    A = L.copy()
    A[0, :] = np.eye(n).reshape(-1)
    rhs = np.zeros(n * n, dtype=complex)
    rhs[0] = 1.0
    try:
        lu = sla.lu_factor(A, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise MultiplicityError(f"Liouvillian null space is not one-dimensional: {exc}") from None
    if np.min(np.abs(np.diag(lu[0]))) < 1e-14 * np.max(np.abs(np.diag(lu[0]))):
        raise MultiplicityError("Liouvillian null space is not one-dimensional (singular pivot)")
    vec = sla.lu_solve(lu, rhs, check_finite=False)
    rho = vec.reshape(n, n)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho)
    residual = float(np.max(np.abs(L @ rho.reshape(-1))))
    return rho, residual


def _sparse_liouvillian(config: SystemConfig, dims: FockDims):
    n = dims.total
    h = sps.csr_matrix(build_hamiltonian(config, dims))
    eye = sps.identity(n, format="csr")
    L = -1j * (sps.kron(h, eye) - sps.kron(eye, h.T))
    for rate, x in _collapse_ops(config, dims):
        x = sps.csr_matrix(x)
        xdx = x.conj().T @ x
        L = L + rate * (sps.kron(x, x.conj()) - 0.5 * sps.kron(xdx, eye)
                        - 0.5 * sps.kron(eye, xdx.T))
    return L.tocsr()


def _stationary_block(config: SystemConfig, dims: FockDims) -> np.ndarray:
    """Indices of vec(ρ) in the symmetry block that holds the steady state.

    The beam-splitter dynamics conserves the difference of total excitation
    number between ket and bra; the full coupling conserves its parity.
    """
    m, n = np.divmod(np.arange(dims.total), dims.dim_b)
    q = m + n
    diff = q[:, None] - q[None, :]
    if isinstance(config.coupling, BeamSplitter):
        keep = diff == 0
    else:
        keep = diff % 2 == 0
    return np.flatnonzero(keep.reshape(-1))


def _sparse_solve(config: SystemConfig, dims: FockDims):
    n = dims.total
    L = _sparse_liouvillian(config, dims)
    idx = _stationary_block(config, dims)
    if len(idx) > SPARSE_LIMIT:
        raise CapacityError(
            f"steady-state block of {len(idx)} unknowns at dims {dims.dim_a}x{dims.dim_b} "
            f"exceeds the sparse solver bound {SPARSE_LIMIT}")
    A = L[idx][:, idx].tolil()
    trace_row = np.zeros(len(idx))
    diag = np.flatnonzero(np.isin(idx, np.arange(n) * (n + 1)))
    trace_row[diag] = 1.0
    A[0, :] = trace_row
    rhs = np.zeros(len(idx), dtype=complex)
    rhs[0] = 1.0
    try:
        sub = spla.splu(A.tocsc()).solve(rhs)
    except RuntimeError as exc:  # exactly singular factor
        raise MultiplicityError(f"Liouvillian null space is not one-dimensional: {exc}") from None
    if not np.all(np.isfinite(sub)):
        raise MultiplicityError("Liouvillian null space is not one-dimensional")
    vec = np.zeros(n * n, dtype=complex)
    vec[idx] = sub
    rho = vec.reshape(n, n)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho)
    residual = float(np.max(np.abs(L @ rho.reshape(-1))))
    return rho, residual


def _long_time_solve(config: SystemConfig, dims: FockDims, tol: float, max_time: float | None):
    h = build_hamiltonian(config, dims)
    collapse = _collapse_ops(config, dims)
    rho = DensityMatrix.thermal(config.n_a, config.n_b, dims).elements
    n = dims.total
    slow = min(g for g in (config.gamma_a, config.gamma_b) if g > 0)
    fast = max(config.gamma_a, config.gamma_b)
    chunk = 5.0 / fast
    if max_time is None:
        max_time = 2000.0 / slow

    def rhs(t, y):
        return apply_liouvillian(y.reshape(n, n), h, collapse).reshape(-1)

    t = 0.0
    while True:
        sol = solve_ivp(rhs, (0.0, chunk), rho.reshape(-1), method="DOP853",
                        rtol=1e-10, atol=1e-12)
        if not sol.success:
            raise IntegrationError(f"long-time evolution failed: {sol.message}")
        rho = sol.y[:, -1].reshape(n, n)
        rho = (rho + rho.conj().T) / 2
        rho /= np.trace(rho)
        t += chunk
        residual = float(np.max(np.abs(apply_liouvillian(rho, h, collapse))))
        if residual < tol:
            return rho, residual
        if t >= max_time:
            raise IntegrationError(
                f"long-time evolution did not settle by t={t:.4g}: residual {residual:.3e}")
        chunk = min(chunk * 1.5, max_time - t)


def steady_density(config: SystemConfig, dims: FockDims, method: str | None = None,
                   tol: float = 1e-10, max_time: float | None = None,
                   truncation_flag: bool = False) -> SteadySolution:
    """Stationary state of the master equation.

    ``method="null_space"`` solves ``L ρ = 0`` with unit trace by dense LU;
    ``"sparse"`` does the same with a sparse LU on the symmetry block that
    contains the steady state; ``"long_time"`` evolves a thermal product
    state until ``‖dρ/dt‖_max < tol``.  The default is the dense solve up to
    Fock dimension ``DENSE_DEFAULT`` and the sparse one above.
    """
    _check_uniqueness(config)
    _check_stability(config)
    if method is None:
        method = "null_space" if dims.total <= DENSE_DEFAULT else "sparse"
    if method == "null_space":
        rho, residual = _null_space_solve(config, dims)
    elif method == "sparse":
        rho, residual = _sparse_solve(config, dims)
    elif method == "long_time":
        rho, residual = _long_time_solve(config, dims, tol, max_time)
    else:
        raise ConfigError(f"unknown steady-state method {method!r}", field="method")
    state = DensityMatrix(dims, rho)
    n_a, n_b = state.populations()
    return SteadySolution(state, n_a, n_b, residual, truncation_flag, method)


def density_trajectory(rho0: DensityMatrix, config: SystemConfig, times,
                       tol: float = 1e-9, check_every: int = 10) -> list[DensityMatrix]:
    """States at each of ``times`` (the first must be 0).

    Trace and Hermiticity are checked at every output time, positivity at
    every ``check_every``-th one and at the end.
    """
    rho0.check()
    dims = rho0.dims
    n = dims.total
    h = build_hamiltonian(config, dims)
    collapse = _collapse_ops(config, dims)
    times = np.asarray(times, dtype=float)
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ConfigError("times must start at 0 and increase strictly", field="times")
    if times.size == 1:
        return [rho0]

    def rhs(t, y):
        return apply_liouvillian(y.reshape(n, n), h, collapse).reshape(-1)

    sol = solve_ivp(rhs, (0.0, times[-1]), rho0.elements.reshape(-1), method="DOP853",
                    t_eval=times, rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise IntegrationError(f"density evolution failed: {sol.message}")
    out = []
    last = len(times) - 1
    for k, y in enumerate(sol.y.T):
        state = DensityMatrix(dims, y.reshape(n, n))
        herm_tol = max(1e-10, 10 * tol)
        if state.trace_deviation() > max(1e-10, 10 * tol) or state.hermiticity_deviation() > herm_tol:
            raise IntegrationError(
                f"state drifted at t={times[k]:.6g}: trace deviation "
                f"{state.trace_deviation():.3e}, hermiticity {state.hermiticity_deviation():.3e}")
        if k % check_every == 0 or k == last:
            lam = state.min_eigenvalue()
            if lam < -1e-8:
                raise IntegrationError(f"negative eigenvalue {lam:.3e} at t={times[k]:.6g}")
        out.append(state)
    return out


def evolve_density(rho0: DensityMatrix, config: SystemConfig, t_final: float,
                   tol: float = 1e-9) -> DensityMatrix:
    if not t_final > 0:
        raise ConfigError("t_final must be > 0", field="t_final")
    return density_trajectory(rho0, config, [0.0, t_final], tol=tol)[-1]


def _tail_levels(nbar: float, tol: float) -> int:
    """Levels needed so a geometric distribution of mean ``nbar`` leaves < tol·1e-2 beyond."""
    if nbar <= 0:
        return 2
    q = nbar / (nbar + 1)
    return max(2, math.ceil(math.log(tol * 1e-2) / math.log(q)))


def _settled(history: list[float], tol: float) -> bool:
    """Last change below ``tol``, or the geometric extrapolation of the remaining change is."""
    if len(history) < 2:
        return False
    d1 = history[-1] - history[-2]
    if abs(d1) < tol:
        return True
    if len(history) < 3 or history[-2] == history[-3]:
        return False
    r = d1 / (history[-2] - history[-3])
    return 0 <= r < 1 and abs(d1) * r / (1 - r) < tol


def _grow(d: int) -> int:
    return math.ceil(d * 1.5)


def truncation_check(config: SystemConfig, tol: float = 1e-3,
                     start: FockDims | None = None, max_total: int = MAX_TOTAL_DIM,
                     max_rounds: int = 30) -> FockDims:
    """Smallest geometrically grown dims at which the steady state has converged.

    Converged means each mode's top Fock level holds less than ``tol·1e-2``
    population and the steady ``n_b`` has stopped moving: its last change,
    or the Aitken extrapolation of all further changes, is below ``tol``.
    A quick a-priori bound (geometric tail of the larger of bath and
    rate-equation occupation) rejects hopeless cases before any solve.
    """
    from .rate_dynamics import _steady_solve

    _check_uniqueness(config)
    _check_stability(config)
    estimates = {"a": config.n_a, "b": config.n_b}
    if isinstance(config.coupling, BeamSplitter) and config.gamma_a + config.gamma_b > 0:
        try:
            m = _steady_solve(config)
            estimates = {"a": max(m.n_a, 0.0), "b": max(m.n_b, 0.0)}
        except Exception:
            pass  # fall back to the bath occupations
    need = {k: _tail_levels(v, tol) for k, v in estimates.items()}
    if need["a"] * need["b"] > max_total:
        worst = max(need, key=need.get)
        nbar = config.n_a if worst == "a" else config.n_b
        raise CapacityError(
            f"mode {worst} with occupation {nbar:g} needs about {need[worst]} Fock levels; "
            f"Fock space bound {max_total} exceeded (use the rate equations instead)")

    dims = start or FockDims(2, 2, max_total)
    history: list[float] = []
    for _ in range(max_rounds):
        sol = steady_density(config, dims)
        pa, pb = sol.rho.marginals()
        tail_a, tail_b = pa[-1], pb[-1]
        boundary_ok = tail_a < tol * 1e-2 and tail_b < tol * 1e-2
        history.append(sol.n_b)
        if boundary_ok and (_settled(history, tol) or (config.n_a == 0 and config.n_b == 0)):
            return dims
        grow_a = tail_a >= tol * 1e-2 or boundary_ok
        grow_b = tail_b >= tol * 1e-2 or boundary_ok
        new_a = _grow(dims.dim_a) if grow_a else dims.dim_a
        new_b = _grow(dims.dim_b) if grow_b else dims.dim_b
        if new_a * new_b > max_total:
            worst = "a" if tail_a >= tail_b else "b"
            nbar = config.n_a if worst == "a" else config.n_b
            raise CapacityError(
                f"truncation did not converge within {max_total} states "
                f"(mode {worst}, bath occupation {nbar:g})")
        dims = FockDims(new_a, new_b, max_total)
    raise CapacityError("truncation check exceeded its round limit")
