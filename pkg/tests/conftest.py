import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from sideband_sim import SystemConfig

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DEMO_CONFIGS = Path(__file__).resolve().parent.parent / "demos" / "configs"


def make_config(delta=1.0, omega_b=1.0, gamma_a=1.0, gamma_b=0.01, amplitude=10.0,
                n_a=0.0, n_b=100.0, coupling=None):
    return SystemConfig.from_detuning(delta=delta, omega_b=omega_b, gamma_a=gamma_a,
                                      gamma_b=gamma_b, amplitude=amplitude, n_a=n_a, n_b=n_b,
                                      coupling=coupling)


@pytest.fixture
def jc_config():
    """Reference beam-splitter config: γ_a=1, γ_b=0.01, Ω=10, Δ=ω_b=1, n̄_b=100."""
    return make_config()


@pytest.fixture
def demo_configs():
    return DEMO_CONFIGS


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
