"""Pseudospectral solver for the dissipative Ostrovsky-Hunter equation.

The antiderivative constraint P_x = u is relaxed to -delta P_xx + P_x = u;
delta = 0 recovers the original model on a periodic domain.
"""

from .diagnostics import DiagnosticsReport, all_checks
from .errors import BlowUp, ConfigError, DivergesAtZero, GridMismatch, NonZeroMean
from .evolution import ETDRK4, SimState, Simulation, SolverConfig, prepare_initial_data, run, step
from .experiments import (ExperimentConfig, delta_sweep, load_config, mms_run, parse_config,
                          refinement_study, stability_experiment)
from .flux import FluxModel, burgers_flux, cubic_flux, make_flux, polynomial_flux
from .grid import Field, GridSpec, derivative, make_grid
from .nonlocal_p import solve_p
from .verdict import Verdict

__all__ = [
    "BlowUp", "ConfigError", "DiagnosticsReport", "DivergesAtZero", "ETDRK4",
    "ExperimentConfig", "Field", "FluxModel", "GridMismatch", "GridSpec", "NonZeroMean",
    "SimState", "Simulation", "SolverConfig", "Verdict", "all_checks", "burgers_flux",
    "cubic_flux", "delta_sweep", "derivative", "load_config", "make_flux", "make_grid",
    "mms_run", "parse_config", "polynomial_flux", "prepare_initial_data",
    "refinement_study", "run", "solve_p", "stability_experiment", "step",
]
