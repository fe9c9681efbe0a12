"""Finite-difference simulator for non-isothermal diffuse-interface two-phase flow
with thermally induced Marangoni forcing."""
from ._kernels import BACKEND
from .coefficients import (CoefficientFn, MollifiedCoefficient, PhysicalParams, double_well,
                           inverse_kirchhoff, kirchhoff, mollify, surface_tension)
from .diagnostics import (DiagnosticsRecord, SobolevConstants, Thresholds, compute_thresholds,
                          decay_monitor, energy_law_residual, estimate_constants,
                          higher_order_functionals, make_record, max_principle_report,
                          mixing_energy, total_energy)
from .dynamics import (SimState, StepConfig, advance, capillary_force, capillary_force_potential,
                       project, step_momentum, step_phase, step_temperature)
from .errors import CFLViolation, ConfigError, InvariantViolation, SolverError
from .fields import (BoundaryData, Grid, ScalarField, VectorField, advect_upwind, divergence,
                     gradient, laplacian, read_snapshot, symmetric_gradient_norm_sq, write_snapshot)
from .steady import SteadySolveConfig, distance_to_steady, solve_steady_phase

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CFLViolation", "CoefficientFn", "ConfigError", "DiagnosticsRecord", "BoundaryData",
    "Grid", "InvariantViolation", "MollifiedCoefficient", "PhysicalParams", "ScalarField", "SimState",
    "SobolevConstants", "SolverError", "SteadySolveConfig", "StepConfig", "Thresholds", "VectorField",
    "advance", "advect_upwind", "capillary_force", "capillary_force_potential", "compute_thresholds",
    "decay_monitor", "distance_to_steady", "divergence", "double_well", "energy_law_residual",
    "estimate_constants", "gradient", "higher_order_functionals", "inverse_kirchhoff", "kirchhoff",
    "laplacian", "make_record", "max_principle_report", "mixing_energy", "mollify", "project",
    "read_snapshot", "solve_steady_phase", "step_momentum", "step_phase", "step_temperature",
    "surface_tension", "symmetric_gradient_norm_sq", "total_energy", "write_snapshot",
]
