"""Error hierarchy for the solver and its command-line surface."""
from __future__ import annotations

import json
import logging
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3


class AllSpeedError(Exception):
    """Base class carrying a free-form ``details`` mapping."""

    exit_code = EXIT_SOLVER_FAILURE

    def __init__(self, message: str, *, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = dict(details or {})


class ConfigError(AllSpeedError):
    """Invalid grid, boundary, case or manifest configuration."""

    exit_code = EXIT_CONFIG_ERROR


class SolverError(AllSpeedError):
    """Failure raised while advancing or solving."""


class EosDomainError(SolverError):
    """State outside the admissible region of an equation of state."""


class RootFindError(SolverError):
    """Scalar or per-cell inversion did not converge."""


class PositivityError(SolverError):
    """Density or internal energy became non-positive."""


class LinearSolverError(SolverError):
    """Linear solve broke down or missed its residual target."""


class NewtonConvergenceError(SolverError):
    """Newton iteration exceeded its budget or diverged."""


class VacuumError(SolverError):
    """The exact Riemann problem generates vacuum."""


class DiagnosticsError(AllSpeedError):
    """Degenerate input to an error norm or order estimate."""


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the CLI exit status."""

    if isinstance(exc, AllSpeedError):
        return exc.exit_code
    return EXIT_SOLVER_FAILURE


def format_error(exc: BaseException) -> str:
    """Render an exception as the structured JSON object printed on stderr."""

    payload: Dict[str, Any] = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, AllSpeedError):
        payload["details"] = exc.details
        payload["exit_code"] = exc.exit_code
    else:
        logger.error(f"Unexpected error: {exc}", exc_info=True)
        payload["exit_code"] = EXIT_SOLVER_FAILURE
    return json.dumps(payload, default=str, sort_keys=True)


__all__ = [
    "AllSpeedError",
    "ConfigError",
    "DiagnosticsError",
    "EXIT_CONFIG_ERROR",
    "EXIT_OK",
    "EXIT_SOLVER_FAILURE",
    "EosDomainError",
    "LinearSolverError",
    "NewtonConvergenceError",
    "PositivityError",
    "RootFindError",
    "SolverError",
    "VacuumError",
    "exit_code_for",
    "format_error",
]
