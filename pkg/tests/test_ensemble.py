import numpy as np
import pytest

from sideband_sim import (AtomicConfig, CapacityError, ConfigError, bosonization_error,
                          compare_dynamics, dynamics_traces)
from sideband_sim.ensemble import (build_atomic_hamiltonian, collective_commutator, collective_operators,
                                   excitation_number_operator, is_permutation_symmetric,
                                   symmetric_state)

T_GRID = np.linspace(0.0, 12.0, 121)


def _site_op(i, j, site, n):
    one = np.zeros((3, 3))
    one[i, j] = 1.0
    out = np.ones((1, 1))
    for k in range(n):
        out = np.kron(out, one if k == site else np.eye(3))
    return out


def _vacuum(n):
    v = np.zeros(3**n)
    v[0] = 1.0
    return v


class TestHamiltonian:
    def test_single_atom(self):
        h = build_atomic_hamiltonian(AtomicConfig(1, 0.7, 1.3, 0.4))
        np.testing.assert_allclose(h, [[0, 0, 0], [0, 0.7, 0.4], [0, 0.4, 1.3]])

    def test_no_drive_is_diagonal(self):
        h = build_atomic_hamiltonian(AtomicConfig(3, 0.7, 1.3, 0.0))
        assert np.count_nonzero(h - np.diag(np.diag(h))) == 0

    @pytest.mark.parametrize("n", range(1, 7))
    def test_excitation_number_conserved(self, n):
        h = build_atomic_hamiltonian(AtomicConfig(n, 0.9, 1.1, 0.5))
        nop = excitation_number_operator(n)
        assert np.max(np.abs(h @ nop - nop @ h)) < 1e-12
        np.testing.assert_allclose(h, h.T, atol=0)

    def test_one_excitation_symmetric_sector_spectrum(self):
        cfg = AtomicConfig(4, 0.7, 1.3, 0.4)
        h = build_atomic_hamiltonian(cfg)
        basis = np.column_stack([symmetric_state(4, 1, 0), symmetric_state(4, 0, 1)])
        block = basis.T @ h @ basis
        np.testing.assert_allclose(np.linalg.eigvalsh(block),
                                   np.linalg.eigvalsh([[0.7, 0.4], [0.4, 1.3]]), atol=1e-12)

    @pytest.mark.parametrize("n", [0, 7])
    def test_atom_count_bounds(self, n):
        with pytest.raises(CapacityError):
            AtomicConfig(n, 1.0, 1.0, 1.0)


class TestCollectiveOperators:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_commutation_and_vacuum(self, n):
        ops = collective_operators(n)
        a, b = ops.op_a, ops.op_b
        assert np.max(np.abs(a @ b - b @ a)) < 1e-12
        # [a, b†] = -Σ_i σ_ba^(i)/N: it vanishes on the vacuum and as N grows, not identically
        s_ba = sum(_site_op(2, 1, i, n) for i in range(n))
        assert np.max(np.abs((a @ b.T - b.T @ a) + s_ba / n)) < 1e-12
        vac = _vacuum(n)
        assert np.all(a @ vac == 0) and np.all(b @ vac == 0)
        assert np.all((a @ b.T - b.T @ a) @ vac == 0)
        for mode, c in (("a", a), ("b", b)):
            comm = collective_commutator(n, mode)
            assert np.max(np.abs(comm - (c @ c.T - c.T @ c))) < 1e-12
            assert vac @ comm @ vac == 1.0

    def test_one_excitation_error_scales_inverse_n(self):
        ns = np.array([2, 3, 4, 5])
        errs = np.array([bosonization_error(n, symmetric_state(n, 0, 1)) for n in ns])
        c = np.sum(errs / ns) / np.sum(1 / ns**2)  # least-squares c in c/N
        assert np.max(np.abs(errs - c / ns) / errs) < 0.1

    def test_error_ordering(self):
        assert bosonization_error(3, _vacuum(3)) == 0.0
        assert bosonization_error(4, symmetric_state(4, 0, 2)) > bosonization_error(
            4, symmetric_state(4, 0, 1))
        e3 = bosonization_error(3, symmetric_state(3, 0, 1))
        e6 = bosonization_error(6, symmetric_state(6, 0, 1))
        assert e6 < e3
        assert e6 / e3 == pytest.approx(0.5, rel=0.05)

    def test_error_non_increasing_in_n(self):
        for m, k in [(0, 1), (1, 0), (1, 1), (0, 2)]:
            errs = [bosonization_error(n, symmetric_state(n, m, k)) for n in range(max(2, m + k), 7)]
            assert all(x >= y - 1e-12 for x, y in zip(errs, errs[1:]))

    def test_state_validation(self):
        with pytest.raises(ConfigError):
            bosonization_error(2, np.ones(9))
        with pytest.raises(ConfigError):
            bosonization_error(2, np.ones(4))

    def test_over_excitation(self):
        with pytest.raises(ConfigError):
            symmetric_state(1, 0, 2)

    def test_symmetry_check(self):
        assert is_permutation_symmetric(symmetric_state(3, 1, 1), 3)
        psi = np.zeros(27)
        psi[9] = 1.0  # |a g g>
        assert not is_permutation_symmetric(psi, 3)


class TestDynamics:
    def test_vacuum_stays_empty(self):
        tr = dynamics_traces(AtomicConfig(3, 1.0, 1.0, 0.5), (0, 0), T_GRID)
        assert np.max(np.abs(tr.atomic)) < 1e-15
        assert np.max(np.abs(tr.bosonic)) < 1e-15

    @pytest.mark.parametrize("n", range(1, 7))
    def test_single_excitation_is_exact(self, n):
        cfg = AtomicConfig(n, 1.0, 1.0, 0.5)
        tr = dynamics_traces(cfg, (0, 1), T_GRID)
        assert tr.deviation < 1e-10
        assert tr.stayed_symmetric
        # resonant Rabi exchange: n_b = cos^2(Ω t)
        np.testing.assert_allclose(tr.bosonic, np.cos(0.5 * T_GRID) ** 2, atol=1e-12)

    @pytest.mark.parametrize("delta,omega", [(0.3, 0.9), (2.0, 0.2)])
    def test_single_excitation_off_resonance(self, delta, omega):
        assert compare_dynamics(AtomicConfig(5, delta, 1.0, omega), (1, 0), T_GRID) < 1e-10

    def test_two_excitations_improve_with_n(self):
        devs = [compare_dynamics(AtomicConfig(n, 1.0, 1.0, 0.5), (0, 2), T_GRID) for n in (3, 4, 5)]
        assert devs[0] > devs[1] > devs[2]

    def test_preconditions(self):
        cfg = AtomicConfig(2, 1.0, 1.0, 0.5)
        with pytest.raises(ConfigError):
            dynamics_traces(cfg, (2, 1), T_GRID)
        with pytest.raises(ConfigError):
            dynamics_traces(AtomicConfig(1, 1.0, 1.0, 0.5), (1, 1), T_GRID)
