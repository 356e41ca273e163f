"""Service layer: time loop, callbacks and run orchestration."""

from .callbacks import CallbackManager
from .run_manager import compare_explicit, convergence_study, export_case, prepare_case, run
from .workflow import Simulation

__all__ = [
    "CallbackManager",
    "Simulation",
    "compare_explicit",
    "convergence_study",
    "export_case",
    "prepare_case",
    "run",
]
