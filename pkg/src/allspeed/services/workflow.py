"""Time loop of one case: stepping, schedules and run bookkeeping."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

from ..config.cases import CaseDefinition, case_eos, case_grid, initial_state, step_config
from ..exceptions import ConfigError
from ..solver.diagnostics import ConservationLedger
from ..solver.pressure_solver import PressureOperators
from ..solver.state import ConservativeState, PrimitiveState, primitive_from_conservative
from ..solver.stepper import StepResult, acoustic_dt, ap_step, compute_dt, explicit_baseline_step, ghosted_primitives
from .callbacks import CallbackManager

logger = logging.getLogger(__name__)

SCHEMES = ("ap", "explicit")


@dataclass
class StepEvent:
    step: int
    time: float
    dt: float
    result: StepResult


class Simulation:
    """Advances one scaled case with the AP or the explicit scheme."""

    def __init__(
        self,
        case: CaseDefinition,
        *,
        scheme: str = "ap",
        callbacks: Optional[CallbackManager] = None,
    ) -> None:
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme '{scheme}'", details={"choices": list(SCHEMES)})
        self.case = case
        self.scheme = scheme
        self.callbacks = callbacks or CallbackManager()
        self.grid = case_grid(case)
        self.eos = case_eos(case)
        self.config = step_config(case)
        self.ops = PressureOperators(self.grid) if scheme == "ap" else None
        self.state: ConservativeState = initial_state(case, self.grid, self.eos)
        self.prim: PrimitiveState = primitive_from_conservative(self.state, self.eos, self.config.epsilon)
        self.ledger = ConservationLedger(self.state, self.grid)
        self.time = 0.0
        self.steps = 0
        self.dt_history: List[float] = []
        self.newton_iterations: List[int] = []

    def next_dt(self) -> float:
        """Fixed step of the case, or the CFL step (material for AP, acoustic for explicit)."""

        if self.scheme == "ap" and self.config.dt is not None:
            return self.config.dt
        ghosts = ghosted_primitives(self.grid, self.prim, self.eos, self.time)
        if self.scheme == "ap":
            return compute_dt(self.grid, ghosts, self.config.alpha, self.eos, self.config.cfl, self.config.dt_max)
        dt = acoustic_dt(self.grid, ghosts, self.eos, self.config)
        return dt if self.config.dt is None else min(dt, self.config.dt)

    def step(self, dt: float, dump_path: Optional[Path] = None) -> StepResult:
        if self.scheme == "ap":
            result = ap_step(
                self.state,
                self.grid,
                self.config,
                self.eos,
                dt,
                time=self.time,
                ops=self.ops,
                prim=self.prim,
                dump_path=dump_path,
            )
        else:
            result = explicit_baseline_step(self.state, self.grid, self.config, self.eos, dt, time=self.time, prim=self.prim)
        self.state = result.state
        self.prim = primitive_from_conservative(self.state, self.eos, self.config.epsilon, p_guess=result.pressure)
        self.time += dt
        self.steps += 1
        self.dt_history.append(dt)
        self.newton_iterations.append(result.newton_iterations)
        self.ledger.record(self.state)
        self.callbacks.emit("step", StepEvent(step=self.steps, time=self.time, dt=dt, result=result))
        return result

    def advance(
        self,
        end_time: float,
        *,
        snapshot_times: Sequence[float] = (),
        every: Optional[int] = None,
        dump_path: Optional[Path] = None,
    ) -> None:
        """Step to ``end_time``, landing exactly on every snapshot time on the way."""

        pending = sorted(t for t in snapshot_times if self.time < t < end_time)
        self.callbacks.emit("start", self)
        tiny = 1e-12 * max(1.0, abs(end_time))
        while end_time - self.time > tiny:
            target = pending[0] if pending else end_time
            remaining = target - self.time
            dt = self.next_dt()
            if dt >= remaining or remaining - dt < 1e-10 * dt:
                dt = remaining
            self.step(dt, dump_path=dump_path if self.steps == 0 else None)
            if pending and abs(self.time - pending[0]) <= tiny:
                self.time = pending.pop(0)
                self.callbacks.emit("snapshot", self)
            elif every and self.steps % every == 0:
                self.callbacks.emit("snapshot", self)
        self.time = end_time
        logger.info(f"Case '{self.case.name}' reached t={self.time:.6g} after {self.steps} steps")
        self.callbacks.emit("completed", self)
