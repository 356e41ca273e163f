"""Run record written as the machine-readable run summary."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional


class RunStatus(str, Enum):
    """Lifecycle states of a run."""

    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


TERMINAL_STATES = {RunStatus.COMPLETED, RunStatus.FAILED}


@dataclass
class RunRecord:
    """Everything a run reports about itself besides the field snapshots."""

    case: str
    scheme: str
    epsilon: float
    alpha: float
    order: int
    status: RunStatus = RunStatus.PENDING
    started_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    finished_at: Optional[datetime] = None
    time: float = 0.0
    steps: int = 0
    dt_history: List[float] = field(default_factory=list)
    newton_iterations: List[int] = field(default_factory=list)
    mass_drift: float = 0.0
    energy_drift: float = 0.0
    max_divergence: Optional[float] = None
    extrema: Dict[str, List[float]] = field(default_factory=dict)
    max_local_mach: Optional[float] = None
    recirculation: Optional[Dict[str, Any]] = None
    wall_clock: float = 0.0
    snapshots: List[str] = field(default_factory=list)
    error: Optional[Dict[str, Any]] = None

    def update_status(self, status: RunStatus, error: Optional[Dict[str, Any]] = None) -> None:
        self.status = status
        if status in TERMINAL_STATES:
            self.finished_at = datetime.now(timezone.utc)
        if error:
            self.error = error

    def snapshot(self) -> Dict[str, Any]:
        """Return a JSON-serializable summary."""
        return {
            "case": self.case,
            "scheme": self.scheme,
            "status": self.status.value,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "order": self.order,
            "started_at": self.started_at.isoformat(),
            "finished_at": self.finished_at.isoformat() if self.finished_at else None,
            "time": self.time,
            "steps": self.steps,
            "dt_history": list(self.dt_history),
            "newton_iterations": list(self.newton_iterations),
            "mass_drift": self.mass_drift,
            "energy_drift": self.energy_drift,
            "max_divergence": self.max_divergence,
            "extrema": {key: list(val) for key, val in self.extrema.items()},
            "max_local_mach": self.max_local_mach,
            "recirculation": self.recirculation,
            "wall_clock": self.wall_clock,
            "snapshots": list(self.snapshots),
            "error": self.error,
        }
