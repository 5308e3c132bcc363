"""Global scattering matrices of adiabatic systems with avoided crossings.

Local Landau-Zener matrices are composed with Bohr-Sommerfeld phases
(regularised actions, Berry phases, Maslov indices) along the graph of the
eigenvalue branches, and checked against a brute-force unitary propagator.
"""

from .errors import (
    BSPhaseError,
    ConfigError,
    ConvergenceError,
    DegeneracyError,
    DomainError,
    NumericalError,
    StructuralError,
    TransversalityError,
    UnsupportedConfigurationError,
    WindowError,
)
from .graph import ScatteringGraph, assemble, build_graph, solve_graph_system
from .harness import ExperimentConfig, fit_convergence, run_validation, sweep_csv
from .landau_zener import LocalScattering, lz_matrix
from .model import HamiltonianFamily, builtin_family, derivative, evaluate, family_from_config
from .numeric import eig_herm, log_gamma, unitarity_defect
from .oracle import OracleResult, oracle_channel, propagate, to_channel_basis
from .phases import (
    berry_phase,
    cycle_holonomy,
    dynamical_action,
    maslov_index,
    regularized_s0,
)
from .spectral import AvoidedParams, Crossing, avoided_params, find_crossings

__version__ = "0.1.0"
