"""Linearizing the generalized (F-coupled) model around its mean field.

Run:  python demos/linearization.py

For F = x·y (the "number" preset) the displacement α solves a cubic.  At
weak coupling one root connects smoothly to the undriven answer -f/Δ₀; at
stronger coupling two more real roots appear.  The linearized parameters
(Δ_eff, g_eff) define a full-coupling model the other engines can solve.
"""
from pathlib import Path

from sideband_sim import (FSpec, expansion_residual, linearize, load_config, real_equilibria,
                          steady_density, truncation_check)

CONFIGS = Path(__file__).parent / "configs"
spec = FSpec.number()

lin = linearize(spec, g_prime=0.01, f_drive=0.5, delta0=1.0, omega_b=0.1)
res = expansion_residual(spec, 0.01, 0.5, 1.0, 0.1, lin.alpha, lin.beta)
print(f"g'=0.01: alpha={lin.alpha.real:.6f} beta={lin.beta.real:.6f} "
      f"delta_eff={lin.delta_eff:.6f} g_eff={lin.g_eff:.7f}")
print(f"  finite-difference check: gradient {res.linear:.1e}, Hessian mismatch {res.quadratic:.1e}\n")

print(" g'     real equilibria (default marked *)")
for g in (0.001, 0.01, 0.05, 0.1, 0.3):
    roots = real_equilibria(spec, g, 0.5, 1.0, 0.1)
    text = "  ".join(f"{r.alpha.real:9.4f}{'*' if r.default else ' '}" for r in roots)
    print(f"{g:5.3f}  {text}")

cfg = load_config(CONFIGS / "number_preset.toml")
sol = steady_density(cfg, truncation_check(cfg))
print(f"\nlinearized model from {CONFIGS.name}/number_preset.toml: steady n_b = {sol.n_b:.5f} "
      f"(bath {cfg.n_b})")
