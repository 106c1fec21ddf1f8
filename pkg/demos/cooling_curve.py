"""Cooling of a thermal low-frequency mode through a driven high-frequency mode.

Run:  python demos/cooling_curve.py

Walks through the basic behaviour of the beam-splitter model:
1. sweep the detuning and see the minimum sit at Δ = ω_b,
2. raise the drive and watch n_b approach (γ_b n̄_b + γ_a n̄_a)/(γ_a + γ_b),
3. cross-check one point against the master-equation oracle.
"""
from pathlib import Path

import numpy as np

from sideband_sim import (SweepSpec, cooling_efficiency_xi, load_config, run_sweep, steady_density,
                          steady_moments, steady_population, truncation_check)

CONFIGS = Path(__file__).parent / "configs"

cfg = load_config(CONFIGS / "moderate_drive.toml")
print(f"mode b: omega_b={cfg.omega_b}, gamma_b={cfg.gamma_b}, bath n={cfg.n_b}")
print(f"mode a: gamma_a={cfg.gamma_a}, bath n={cfg.n_a}; drive Omega={cfg.amplitude}\n")

# 1. detuning sweep, closed form and rate equations side by side
spec = SweepSpec("delta", cfg.omega_b - 5 * cfg.gamma_a, cfg.omega_b + 5 * cfg.gamma_a, 11,
                 engines=("closed_form", "rate"))
res = run_sweep(CONFIGS / "moderate_drive.toml", spec)
print(f"{'delta':>8} {'n_b closed':>12} {'n_b rate':>12}")
for d, a, b in zip(res.column("delta"), res.column("n_b_closed_form"), res.column("n_b_rate")):
    print(f"{d:8.3f} {a:12.6f} {b:12.6f}")
best = res.column("delta")[int(np.argmin(res.column("n_b_closed_form")))]
print(f"-> best cooling at delta = {best:.3f} (omega_b = {cfg.omega_b})\n")

# 2. drive-strength dependence on resonance
target = (cfg.gamma_b * cfg.n_b + cfg.gamma_a * cfg.n_a) / (cfg.gamma_a + cfg.gamma_b)
print(f"{'Omega':>8} {'xi':>10} {'n_b':>10}   strong-drive value {target:.5f}")
for om in (0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0):
    c = cfg.with_amplitude(om)
    print(f"{om:8.1f} {cooling_efficiency_xi(c):10.6f} {steady_population(c)[0]:10.6f}")

# 3. one point through the master equation
dims = truncation_check(cfg, tol=1e-4)
sol = steady_density(cfg, dims)
print(f"\nmaster equation at {dims.dim_a}x{dims.dim_b} Fock levels: n_b = {sol.n_b:.6f}, "
      f"rate equations: {steady_moments(cfg).n_b:.6f}")
