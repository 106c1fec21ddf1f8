"""Sideband cooling of a bosonic mode through a driven auxiliary mode."""
__version__ = "0.1.0"

from .errors import (CapacityError, ConfigError, DegenerateConfigError, IntegrationError,
                     MultiplicityError, MultistabilityError, SidebandError, StiffnessError,
                     UnsupportedModelError)
from .model import (BeamSplitter, DriveParams, Full, Generalized, ModeParams, SystemConfig,
                    ValidationReport, detunings, thermal_occupation, validate_rwa)
from .closed_form import (cooling_efficiency_xi, effective_temperature, jc_cooling_limit,
                          resonant_strong_drive_population, sideband_cooling_limit,
                          steady_population, steady_report)
from .rate_dynamics import (LangevinEstimate, MomentState, Trajectory, evolve_moments,
                            langevin_sample, propagate_exact, steady_moments)
from .lindblad import (DensityMatrix, FockDims, SteadySolution, density_trajectory,
                       evolve_density, steady_density, truncation_check)
from .ensemble import AtomicConfig, bosonization_error, compare_dynamics, dynamics_traces
from .linearization import (FSpec, equilibrium_displacements, expansion_residual, linearize,
                            linearized_params, real_equilibria)
from .config_io import config_hash, dump_config, load_config, parse_config
from .sweep import SweepSpec, SweepResult, run_point, run_sweep
