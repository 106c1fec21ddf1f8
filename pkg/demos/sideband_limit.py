"""The usual sideband limit and a coupling that beats it.

Run:  python demos/sideband_limit.py   (about 10 s)

With position-position coupling (the "full" model) the counter-rotating
terms keep n_b above roughly γ_a²/4ω_b, however the detuning is set.  The
beam-splitter coupling has no such terms and can cool well below it.
Finally the Δ = -ω_b point shows the heating resonance of the full model.
"""
from pathlib import Path

import numpy as np

from sideband_sim import (BeamSplitter, Full, SweepSpec, load_config, run_sweep,
                          sideband_cooling_limit, steady_density, steady_moments, truncation_check)

CONFIGS = Path(__file__).parent / "configs"
full_path = CONFIGS / "resolved_sideband_full.toml"
full = load_config(full_path)
limit = sideband_cooling_limit(full)
print(f"full model, gamma_a={full.gamma_a}, omega_b={full.omega_b}, g={full.amplitude}")
print(f"sideband limit {limit.limit:.4f} expected near delta = {limit.optimal_detuning:.4f}\n")

res = run_sweep(full_path, SweepSpec("delta", 0.5, 1.5, 21, engines=("lindblad",)))
for d, nb, dims in zip(res.column("delta"), res.column("n_b_lindblad"), res.column("lindblad_dims")):
    bar = "#" * int(min(60, 60 * nb / full.n_b))
    print(f"delta {d:5.2f}  n_b {nb:8.5f}  [{dims:>5}] {bar}")
i = int(np.argmin(res.column("n_b_lindblad")))
print(f"-> minimum {res.column('n_b_lindblad')[i]:.5f} at delta {res.column('delta')[i]:.3f}\n")

bs = load_config(CONFIGS / "beyond_sideband_limit.toml")
rate = steady_moments(bs).n_b
oracle = steady_density(bs, truncation_check(bs, tol=1e-4)).n_b
print(f"beam splitter, Omega={bs.amplitude}, delta={bs.delta}: n_b = {rate:.3e} (rate), "
      f"{oracle:.3e} (master equation)")
print(f"   that is {limit.limit / rate:.0f}x below the sideband limit\n")

# heating/cooling asymmetry; γ_b raised and g lowered so Δ = -ω_b stays stable
base = full.with_modes(gamma_b=0.01).with_amplitude(0.01)
print("detuning   full n_b   beam-splitter n_b")
for d in (1.0, 0.0, -1.0):
    f = base.with_detuning(d)
    b = f.with_coupling(BeamSplitter())
    nf = steady_density(f, truncation_check(f)).n_b
    nb = steady_density(b, truncation_check(b)).n_b
    print(f"{d:8.1f} {nf:10.4f} {nb:12.4f}")
print(f"(bath occupation {base.n_b}; only the full model heats at delta = -omega_b)")
assert isinstance(full.coupling, Full)
