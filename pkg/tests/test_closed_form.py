import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from sideband_sim import (ConfigError, DegenerateConfigError, cooling_efficiency_xi,
                          effective_temperature, jc_cooling_limit,
                          resonant_strong_drive_population, sideband_cooling_limit,
                          steady_moments, steady_population, steady_report)
from sideband_sim.model import HBAR, K_B

from conftest import make_config

configs = st.builds(
    make_config,
    delta=st.floats(-5, 5), omega_b=st.floats(0.1, 5), gamma_a=st.floats(1e-3, 10),
    gamma_b=st.floats(1e-4, 1), amplitude=st.floats(0, 50),
    n_a=st.floats(0, 10), n_b=st.floats(0, 1e4))


def _xi_oracle(ga, gb, om, d):
    # 4x4 linear steady solve, independent of the formula: n_b = n̄_b − ξ(n̄_b − n̄_a)
    cfg = make_config(gamma_a=ga, gamma_b=gb, amplitude=om, delta=d + 1.0, omega_b=1.0,
                      n_a=0.0, n_b=1.0)
    return 1.0 - steady_moments(cfg).n_b


class TestXi:
    def test_zero_drive(self):
        assert cooling_efficiency_xi(make_config(amplitude=0.0)) == 0.0

    def test_reference_value(self, jc_config):
        xi = cooling_efficiency_xi(jc_config)
        assert xi == pytest.approx(0.990075, abs=1e-6)
        assert xi == pytest.approx(_xi_oracle(1.0, 0.01, 10.0, 0.0), rel=1e-12)

    def test_strong_drive_limit(self):
        xi = cooling_efficiency_xi(make_config(amplitude=1e6))
        assert xi == pytest.approx(1 / 1.01, rel=1e-8)

    def test_degenerate(self):
        with pytest.raises(DegenerateConfigError):
            cooling_efficiency_xi(make_config(gamma_a=0.0, gamma_b=0.0))

    @given(configs)
    def test_bounds(self, cfg):
        xi = cooling_efficiency_xi(cfg)
        assert 0.0 <= xi < 1.0

    @given(configs, st.floats(-10, 10))
    def test_depends_on_detuning_difference_only(self, cfg, shift):
        assume(cfg.omega_b + shift > 0.05)
        moved = cfg.with_modes(omega_b=cfg.omega_b + shift).with_detuning(cfg.delta + shift)
        assert cooling_efficiency_xi(moved) == pytest.approx(cooling_efficiency_xi(cfg),
                                                             rel=1e-9, abs=1e-12)

    @given(configs, st.floats(1.0, 10.0))
    def test_monotone_in_drive(self, cfg, factor):
        stronger = cfg.with_amplitude(cfg.amplitude * factor)
        assert cooling_efficiency_xi(stronger) >= cooling_efficiency_xi(cfg) - 1e-15

    @given(configs)
    def test_maximal_at_resonance(self, cfg):
        grid = cfg.omega_b + np.linspace(-3, 3, 61)
        vals = [cooling_efficiency_xi(cfg.with_detuning(d)) for d in grid]
        assert np.argmax(vals) == 30 or math.isclose(max(vals), vals[30], rel_tol=1e-12)


class TestSteadyPopulation:
    def test_equal_baths(self):
        cfg = make_config(n_a=3.0, n_b=3.0)
        n_b, n_a = steady_population(cfg)
        assert n_b == pytest.approx(3.0, rel=1e-14)
        assert n_a == pytest.approx(3.0, rel=1e-12)

    def test_reference_value(self, jc_config):
        n_b, n_a = steady_population(jc_config)
        assert n_b == pytest.approx(0.9925, abs=1e-4)
        m = steady_moments(jc_config)
        assert n_b == pytest.approx(m.n_b, rel=1e-10)
        assert n_a == pytest.approx(m.n_a, rel=1e-12)

    def test_decoupled(self):
        assert steady_population(make_config(amplitude=0.0, n_a=0.3)) == (100.0, 0.3)

    @given(configs)
    def test_agrees_with_rate_solve(self, cfg):
        n_b, _ = steady_population(cfg)
        assert n_b == pytest.approx(steady_moments(cfg).n_b, rel=1e-9, abs=1e-12)

    @given(configs)
    def test_bracketed_by_bath_occupations(self, cfg):
        assume(cfg.n_b >= cfg.n_a)
        n_b, n_a = steady_population(cfg)
        slack = 1e-9 * max(1.0, cfg.n_b)
        assert cfg.n_a - slack <= n_b <= cfg.n_b + slack
        assert n_a >= cfg.n_a - slack  # cooling b heats a


class TestEffectiveTemperature:
    def test_logarithm_one(self):
        w = 2 * math.pi * 1e9
        assert effective_temperature(1 / (math.e - 1), w) == pytest.approx(HBAR * w / K_B, rel=1e-12)

    def test_room_temperature_round_trip(self):
        assert effective_temperature(6.25e3, 2 * math.pi * 1e9) == pytest.approx(300.0, rel=2e-3)

    def test_classical_asymptote(self):
        n = 1e8
        assert effective_temperature(n, 1.0, units="scaled") / n == pytest.approx(1.0, rel=1e-7)

    def test_zero_and_negative(self):
        assert effective_temperature(0.0, 1.0) == 0.0
        with pytest.raises(ConfigError):
            effective_temperature(-1e-3, 1.0)

    @given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
    def test_strictly_increasing(self, n1, n2):
        assume(n1 != n2)
        lo, hi = sorted((n1, n2))
        assert effective_temperature(lo, 1.0, "scaled") < effective_temperature(hi, 1.0, "scaled")


class TestLimits:
    def test_resonant_strong_drive(self, jc_config):
        target = resonant_strong_drive_population(jc_config)
        assert target == pytest.approx(0.990099, abs=1e-6)
        near = steady_population(jc_config.with_amplitude(100.0))[0]
        assert abs(near - target) < 1e-3

    def test_resonant_strong_drive_trivial_cases(self):
        assert resonant_strong_drive_population(make_config(gamma_b=0.0, n_a=0.2)) == 0.2
        assert resonant_strong_drive_population(make_config(n_a=7.0, n_b=7.0)) == pytest.approx(7.0)

    def test_resonant_limit_is_approached(self, jc_config):
        target = resonant_strong_drive_population(jc_config)
        gaps = [abs(steady_population(jc_config.with_amplitude(om))[0] - target)
                for om in (1.0, 10.0, 100.0, 1000.0)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_jc_limit_flag_example(self):
        cfg = make_config(gamma_a=1.0, gamma_b=1e-6, n_b=1e4, n_a=0.1)
        # γ_b n̄_b = 1e-2 against γ_a n̄_a = 0.1: a ratio of 0.1
        assert jc_cooling_limit(cfg).limit == 0.1
        assert jc_cooling_limit(cfg).ratio == pytest.approx(0.1)
        assert jc_cooling_limit(cfg, threshold=0.1).regime_ok
        assert not jc_cooling_limit(cfg).regime_ok  # default threshold 0.01

    def test_jc_limit_no_bath_in_a(self):
        res = jc_cooling_limit(make_config(n_a=0.0))
        assert res.limit == 0.0 and not res.regime_ok

    def test_jc_limit_wrong_direction(self):
        res = jc_cooling_limit(make_config(gamma_b=0.01, n_b=100.0, n_a=1e-7))
        assert res.limit == 1e-7 and not res.regime_ok

    def test_sideband_limit_example(self):
        lim = sideband_cooling_limit(make_config(gamma_a=0.2, omega_b=1.0, n_a=0.0))
        assert lim.limit == pytest.approx(0.01)
        assert lim.optimal_detuning == pytest.approx(math.sqrt(1.04))
        assert lim.resolved

    def test_sideband_limit_zero_linewidth(self):
        lim = sideband_cooling_limit(make_config(gamma_a=0.0, gamma_b=0.01, n_a=0.4))
        assert (lim.limit, lim.optimal_detuning) == (0.4, 1.0)

    @given(st.floats(0.01, 1.0), st.floats(0.5, 5.0), st.floats(0, 1.0))
    def test_jc_limit_below_sideband_limit(self, ga, wb, frac):
        n_a = frac * ga * ga / (4 * wb * wb) * 0.999
        cfg = make_config(gamma_a=ga, omega_b=wb, n_a=n_a)
        assert jc_cooling_limit(cfg).limit < sideband_cooling_limit(cfg).limit


def test_report(jc_config):
    rep = steady_report(jc_config)
    assert rep.n_b_final == pytest.approx(steady_population(jc_config)[0])
    assert rep.t_eff == pytest.approx(1.0 / math.log1p(1 / rep.n_b_final))
