"""Deep-water gravity waves on the circle in holomorphic coordinates."""

from .spectral import ConfigurationError, HoloField, HolomorphyError, MeanModeError, PeriodicGrid, SpectralField, make_grid
from .paracalc import ControlParams, DegenerateSurfaceError, control_params, pair_norm, paraproduct_parts
from .waterwave import DiffState, FullState, derived_fields, energy_full, energy_lin0, rhs_diff, rhs_full
from .linearized import LinState, energy_paralin0, rhs_linearized, rhs_paralin
from .evolve import SolverConfig, Status, Trajectory, run, solve_linearized_along
from .lab import ExperimentSpec, SweepResult, run_experiment

__all__ = [
    "ConfigurationError",
    "ControlParams",
    "DegenerateSurfaceError",
    "DiffState",
    "ExperimentSpec",
    "FullState",
    "HoloField",
    "HolomorphyError",
    "LinState",
    "MeanModeError",
    "PeriodicGrid",
    "SolverConfig",
    "SpectralField",
    "Status",
    "SweepResult",
    "Trajectory",
    "control_params",
    "derived_fields",
    "energy_full",
    "energy_lin0",
    "energy_paralin0",
    "make_grid",
    "pair_norm",
    "paraproduct_parts",
    "rhs_diff",
    "rhs_full",
    "rhs_linearized",
    "rhs_paralin",
    "run",
    "run_experiment",
    "solve_linearized_along",
]
