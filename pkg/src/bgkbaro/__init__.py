"""Kinetic BGK relaxation toward barotropic Euler: equilibria, phase-space
solver, regularization, Euler reference and certificates."""
from .config import ExperimentConfig, config_from_dict, load_config, parse_config
from .diagnostics import RunReport, check_energy_decay, check_entropy_inequality, tolerance
from .equilibrium import (INDICATOR, POSITIVE_PART, GammaRegime, MacroState, MomentTriple,
                          closed_form_moments, eval_equilibrium, kinetic_entropy_density,
                          macro_entropy, make_regime, support_radius)
from .euler import EulerState, euler_flux, fv_step, macro_distance, run_euler
from .geometry import (classify_case, l12_distance, l12_equilibrium_distance,
                       lipschitz_ratio_survey, mean_value_bound, rotation_to_axis)
from .grid import (DistributionField, MacroFieldSet, PhaseGrid, discrete_equilibrium,
                   discrete_moments, norms, read_snapshot, write_snapshot)
from .initial import Profile
from .regularization import make_mollifier, regularize_fields, regularize_initial
from .solver import SolverConfig, picard_solve, relax_step, run_splitting, transport_step

__version__ = "0.1.0"
