"""Numerical core: grids, equations of state, fluxes, pressure systems and time steps."""

from .diagnostics import ConservationLedger, ErrorReport, detect_recirculation, l1_error, max_divergence
from .eos import EquationOfState, FunctionalEos, PerfectGas, build_eos
from .mesh import BoundaryCondition, BoundaryKind, GridConfig, StructuredGrid, build_grid, fill_ghosts
from .pressure_solver import PressureOperators, SparseSystem, newton_solve, solve_linear
from .riemann import ExactRiemannSolver, RiemannState, exact_solution
from .state import ConservativeState, PrimitiveState, ScalingParameters, primitive_from_conservative
from .stepper import StepConfig, StepResult, ap_step, compute_dt, explicit_baseline_step

__all__ = [
    "BoundaryCondition",
    "BoundaryKind",
    "ConservationLedger",
    "ConservativeState",
    "EquationOfState",
    "ErrorReport",
    "ExactRiemannSolver",
    "FunctionalEos",
    "GridConfig",
    "PerfectGas",
    "PressureOperators",
    "PrimitiveState",
    "RiemannState",
    "ScalingParameters",
    "SparseSystem",
    "StepConfig",
    "StepResult",
    "StructuredGrid",
    "ap_step",
    "build_eos",
    "build_grid",
    "compute_dt",
    "detect_recirculation",
    "exact_solution",
    "explicit_baseline_step",
    "fill_ghosts",
    "l1_error",
    "max_divergence",
    "newton_solve",
    "primitive_from_conservative",
    "solve_linear",
]
