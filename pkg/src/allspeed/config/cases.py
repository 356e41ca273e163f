"""Declarative case definitions and the built-in benchmark registry."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from ..exceptions import ConfigError
from ..solver.eos import EquationOfState, build_eos
from ..solver.mesh import BoundaryCondition, BoundaryKind, StructuredGrid, build_grid, grid_config_from_mapping, side_name
from ..solver.riemann import RiemannState, exact_solution
from ..solver.state import (
    ConservativeState,
    PrimitiveState,
    ScalingParameters,
    check_admissible,
    conservative_from_primitive,
    nondimensionalize,
)
from ..solver.stepper import StepConfig

logger = logging.getLogger(__name__)

_DEFAULT_CASES_PATH = Path(__file__).resolve().parent / "cases.yaml"
UNITS = ("si", "scaled")


@dataclass
class EosSpec:
    kind: str = "perfect_gas"
    gamma: float = 1.4


@dataclass
class GridSpec:
    cells: List[int]
    lower: List[float]
    upper: List[float]
    mask: List[Dict[str, List[float]]] = field(default_factory=list)


@dataclass
class BoundarySpec:
    kind: str
    velocity: Optional[List[float]] = None
    enthalpy: Optional[float] = None
    temperature: Optional[float] = None
    pressure: Optional[float] = None
    wall_speed: float = 0.0
    ramp_time: float = 0.0


@dataclass
class InitialSpec:
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class SourceSpec:
    viscous: bool = False
    conduction: bool = False
    gravity: bool = False
    reynolds: Optional[float] = None
    prandtl: Optional[float] = None
    body_force: Optional[List[float]] = None


@dataclass
class ScalingSpec:
    rho0: float
    p0: float
    x0: float
    u0: Optional[float] = None
    epsilon: Optional[float] = None
    viscosity: Optional[float] = None
    conductivity: Optional[float] = None
    cp: Optional[float] = None

    def parameters(self) -> ScalingParameters:
        extra = {"viscosity": self.viscosity, "conductivity": self.conductivity, "cp": self.cp}
        if self.epsilon is not None:
            return ScalingParameters.from_mach(self.rho0, self.p0, self.x0, self.epsilon, **extra)
        if self.u0 is None:
            raise ConfigError("scaling needs either 'u0' or 'epsilon'")
        return ScalingParameters(rho0=self.rho0, p0=self.p0, u0=self.u0, x0=self.x0, **extra)


@dataclass
class TimeSpec:
    end_time: float
    dt: Optional[float] = None
    cfl: float = 0.5
    dt_max: float = 1.0


@dataclass
class SolverSpec:
    order: int = 2
    alpha: float = 0.0
    pressure_path: str = "auto"
    linear_solver: str = "direct"
    linear_tol: float = 1e-10
    newton_tol: float = 1e-10
    newton_max_iter: int = 50


@dataclass
class OutputSpec:
    snapshots: List[float] = field(default_factory=list)
    every: Optional[int] = None
    formats: List[str] = field(default_factory=lambda: ["csv"])


@dataclass
class MonitorSpec:
    exact_reference: bool = False
    recirculation_region: Optional[Dict[str, List[float]]] = None
    recirculation_threshold: float = 1e-3


@dataclass
class CaseDefinition:
    name: str
    grid: GridSpec
    boundaries: Dict[str, BoundarySpec]
    initial: InitialSpec
    time: TimeSpec
    description: str = ""
    units: str = "scaled"
    epsilon: Optional[float] = None
    eos: EosSpec = field(default_factory=EosSpec)
    sources: SourceSpec = field(default_factory=SourceSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    monitor: MonitorSpec = field(default_factory=MonitorSpec)
    scaling: Optional[ScalingSpec] = None

    @property
    def dimension(self) -> int:
        return len(self.grid.cells)


# --------------------------------------------------------------------------------------
# Parsing and serialization
# --------------------------------------------------------------------------------------


def _section(cls: type, raw: Any, where: str) -> Any:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{where}' must be a mapping", details={"got": type(raw).__name__})
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown keys in '{where}'", details={"keys": unknown})
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(f"malformed section '{where}': {exc}") from exc


def case_from_mapping(name: str, raw: Dict[str, Any]) -> CaseDefinition:
    """Build and validate a case from its parsed YAML mapping."""

    if not isinstance(raw, dict):
        raise ConfigError(f"case '{name}' must be a mapping")
    nested = {
        "grid": GridSpec,
        "initial": InitialSpec,
        "time": TimeSpec,
        "eos": EosSpec,
        "sources": SourceSpec,
        "solver": SolverSpec,
        "output": OutputSpec,
        "monitor": MonitorSpec,
    }
    missing = [key for key in ("grid", "boundaries", "initial", "time") if key not in raw]
    if missing:
        raise ConfigError(f"case '{name}' is missing sections", details={"missing": missing})
    values: Dict[str, Any] = {}
    for key, cls in nested.items():
        if key in raw:
            values[key] = _section(cls, raw[key], f"{name}.{key}")
    if raw.get("scaling") is not None:
        values["scaling"] = _section(ScalingSpec, raw["scaling"], f"{name}.scaling")
    boundaries = raw["boundaries"]
    if not isinstance(boundaries, dict):
        raise ConfigError(f"section '{name}.boundaries' must be a mapping")
    values["boundaries"] = {side: _section(BoundarySpec, spec, f"{name}.boundaries.{side}") for side, spec in boundaries.items()}
    top = {"description", "units", "epsilon"}
    unknown = sorted(set(raw) - top - set(nested) - {"scaling", "boundaries", "name"})
    if unknown:
        raise ConfigError(f"unknown keys in case '{name}'", details={"keys": unknown})
    values.update({key: raw[key] for key in top if key in raw})
    case = CaseDefinition(name=name, **values)
    validate_case(case)
    return case


def case_to_mapping(case: CaseDefinition) -> Dict[str, Any]:
    data = dataclasses.asdict(case)
    data.pop("name")
    return data


def validate_case(case: CaseDefinition) -> None:
    if case.units not in UNITS:
        raise ConfigError(f"case '{case.name}': units must be one of {UNITS}", details={"units": case.units})
    if case.units == "si" and case.scaling is None:
        raise ConfigError(f"case '{case.name}' is in SI units but has no scaling section")
    if case.units == "scaled" and not (case.epsilon and case.epsilon > 0.0):
        raise ConfigError(f"case '{case.name}' needs a positive epsilon", details={"epsilon": case.epsilon})
    dim = case.dimension
    expected = {side_name(axis, upper) for axis in range(dim) for upper in (False, True)}
    if set(case.boundaries) != expected:
        raise ConfigError(
            f"case '{case.name}' boundaries must name exactly {sorted(expected)}",
            details={"got": sorted(case.boundaries)},
        )
    for side, spec in case.boundaries.items():
        try:
            BoundaryKind(spec.kind)
        except ValueError as exc:
            raise ConfigError(f"unknown boundary kind '{spec.kind}' on '{side}'") from exc
    if case.initial.kind not in INITIALIZERS:
        raise ConfigError(
            f"unknown initial condition '{case.initial.kind}'",
            details={"choices": sorted(INITIALIZERS)},
        )
    if not case.time.end_time >= 0.0:
        raise ConfigError("end_time must be non-negative", details={"end_time": case.time.end_time})
    for fmt in case.output.formats:
        if fmt not in ("csv", "vtk"):
            raise ConfigError(f"unknown output format '{fmt}'")


def _read_yaml(path: Path) -> Any:
    try:
        return yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed case file {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read case file {path}") from exc


def list_cases(path: Optional[Path] = None) -> List[str]:
    raw = _read_yaml(path or _DEFAULT_CASES_PATH)
    return sorted(raw["cases"])


def load_case(reference: Union[str, Path], *, scaled: bool = True, path: Optional[Path] = None) -> CaseDefinition:
    """Load a built-in case by name or a case file by path.

    With ``scaled`` the result is expressed in scaled variables; SI cases are
    converted through their scaling section.
    """

    candidate = Path(reference)
    if candidate.suffix in (".yaml", ".yml") or candidate.exists():
        raw = _read_yaml(candidate)
        if not isinstance(raw, dict):
            raise ConfigError(f"case file {candidate} must hold a mapping")
        if "cases" in raw:
            entries = raw["cases"]
            if len(entries) != 1:
                raise ConfigError(f"case file {candidate} holds several cases; load it by name")
            name, entry = next(iter(entries.items()))
        else:
            name, entry = raw.get("name", candidate.stem), raw
        case = case_from_mapping(name, entry)
    else:
        registry = _read_yaml(path or _DEFAULT_CASES_PATH)["cases"]
        if str(reference) not in registry:
            raise ConfigError(f"unknown case '{reference}'", details={"choices": sorted(registry)})
        case = case_from_mapping(str(reference), registry[str(reference)])
    logger.debug(f"Loaded case '{case.name}' ({case.units})")
    return to_scaled(case) if scaled else case


def dump_case(case: CaseDefinition, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {"name": case.name, **case_to_mapping(case)}
    path.write_text(yaml.safe_dump(payload, sort_keys=False))
    logger.info(f"Wrote case '{case.name}' to {path}")
    return path


def to_scaled(case: CaseDefinition) -> CaseDefinition:
    if case.units == "scaled":
        return case
    scaling = case.scaling.parameters()
    return nondimensionalize(case, scaling)


# --------------------------------------------------------------------------------------
# Overrides
# --------------------------------------------------------------------------------------


def with_cells(case: CaseDefinition, cells: int) -> CaseDefinition:
    """Resize the first axis to ``cells``; other axes keep square cells."""

    lengths = [hi - lo for lo, hi in zip(case.grid.lower, case.grid.upper)]
    counts = [int(cells)]
    for length in lengths[1:]:
        other = length / lengths[0] * cells
        if abs(other - round(other)) > 1e-9 * max(1.0, other) or round(other) < 2:
            raise ConfigError(
                f"{cells} cells do not give square cells on this domain",
                details={"lengths": lengths},
            )
        counts.append(int(round(other)))
    return dataclasses.replace(case, grid=dataclasses.replace(case.grid, cells=counts))


def apply_overrides(case: CaseDefinition, overrides: Dict[str, Any]) -> CaseDefinition:
    """Apply flag overrides to a scaled case; ``None`` entries are ignored."""

    values = {key: val for key, val in overrides.items() if val is not None}
    if not values:
        return case
    if case.units != "scaled":
        raise ConfigError("overrides apply to scaled cases")
    if "cells" in values:
        case = with_cells(case, values.pop("cells"))
    time_keys = {"dt": "dt", "cfl": "cfl", "end_time": "end_time", "dt_max": "dt_max"}
    solver_keys = {"alpha", "order", "newton_tol", "newton_max_iter", "linear_solver", "linear_tol", "pressure_path"}
    time_updates = {time_keys[k]: values.pop(k) for k in list(values) if k in time_keys}
    solver_updates = {k: values.pop(k) for k in list(values) if k in solver_keys}
    if time_updates:
        case = dataclasses.replace(case, time=dataclasses.replace(case.time, **time_updates))
    if solver_updates:
        case = dataclasses.replace(case, solver=dataclasses.replace(case.solver, **solver_updates))
    if "epsilon" in values:
        case = dataclasses.replace(case, epsilon=values.pop("epsilon"))
    if values:
        raise ConfigError("unknown overrides", details={"keys": sorted(values)})
    return case


# --------------------------------------------------------------------------------------
# Runtime objects
# --------------------------------------------------------------------------------------


def _require_scaled(case: CaseDefinition) -> None:
    if case.units != "scaled":
        raise ConfigError(f"case '{case.name}' must be scaled before it is run")


def case_grid(case: CaseDefinition) -> StructuredGrid:
    _require_scaled(case)
    boundaries = {}
    for side, spec in case.boundaries.items():
        boundaries[side] = BoundaryCondition(
            kind=BoundaryKind(spec.kind),
            velocity=None if spec.velocity is None else tuple(float(v) for v in spec.velocity),
            enthalpy=spec.enthalpy,
            pressure=spec.pressure,
            wall_speed=float(spec.wall_speed or 0.0),
            ramp_time=float(spec.ramp_time or 0.0),
        )
    config = grid_config_from_mapping(
        case.grid.cells,
        case.grid.lower,
        case.grid.upper,
        boundaries,
        [(box["lower"], box["upper"]) for box in case.grid.mask],
    )
    return build_grid(config)


def case_eos(case: CaseDefinition) -> EquationOfState:
    return build_eos(case.eos.kind, gamma=case.eos.gamma)


def step_config(case: CaseDefinition) -> StepConfig:
    _require_scaled(case)
    force = case.sources.body_force or [0.0] * case.dimension
    return StepConfig(
        cfl=case.time.cfl,
        alpha=case.solver.alpha,
        epsilon=case.epsilon,
        order=case.solver.order,
        dt=case.time.dt,
        dt_max=case.time.dt_max,
        viscous=case.sources.viscous,
        conduction=case.sources.conduction,
        gravity=case.sources.gravity,
        reynolds=case.sources.reynolds,
        prandtl=case.sources.prandtl,
        body_force=tuple(float(f) for f in force),
        pressure_path=case.solver.pressure_path,
        linear_solver=case.solver.linear_solver,
        linear_tol=case.solver.linear_tol,
        newton_tol=case.solver.newton_tol,
        newton_max_iter=case.solver.newton_max_iter,
    )


# --------------------------------------------------------------------------------------
# Initial conditions
# --------------------------------------------------------------------------------------

Initializer = Callable[[StructuredGrid, EquationOfState, Dict[str, Any], float], PrimitiveState]
INITIALIZERS: Dict[str, Initializer] = {}


def initializer(name: str) -> Callable[[Initializer], Initializer]:
    def register(func: Initializer) -> Initializer:
        INITIALIZERS[name] = func
        return func

    return register


def _param(params: Dict[str, Any], key: str, kind: str) -> Any:
    try:
        return params[key]
    except KeyError as exc:
        raise ConfigError(f"initial condition '{kind}' needs parameter '{key}'") from exc


@initializer("uniform")
def _uniform(grid: StructuredGrid, eos: EquationOfState, params: Dict[str, Any], epsilon: float) -> PrimitiveState:
    p = np.full(grid.shape, float(_param(params, "p", "uniform")))
    if "h" in params:
        h = np.full(grid.shape, float(params["h"]))
    else:
        h = eos.enthalpy_from_density(p, np.full(grid.shape, float(_param(params, "rho", "uniform"))))
    velocity = params.get("u", [0.0] * grid.dimension)
    if len(velocity) != grid.dimension:
        raise ConfigError("uniform velocity has the wrong number of components", details={"u": velocity})
    u = np.stack([np.full(grid.shape, float(v)) for v in velocity])
    return PrimitiveState(p=p, h=h, u=u, rho=eos.density(p, h))


@initializer("riemann")
def _riemann(grid: StructuredGrid, eos: EquationOfState, params: Dict[str, Any], epsilon: float) -> PrimitiveState:
    if grid.dimension != 1:
        raise ConfigError("riemann initial data are one-dimensional")
    x = grid.centers(0)
    left = x <= float(_param(params, "interface", "riemann"))

    def pick(key: str) -> np.ndarray:
        return np.where(left, float(_param(params, f"{key}_left", "riemann")), float(_param(params, f"{key}_right", "riemann")))

    p, h = pick("p"), pick("h")
    return PrimitiveState(p=p, h=h, u=pick("u")[None], rho=eos.density(p, h))


@initializer("colliding_pulses")
def _colliding_pulses(grid: StructuredGrid, eos: EquationOfState, params: Dict[str, Any], epsilon: float) -> PrimitiveState:
    x = grid.centers(0)
    length = float(_param(params, "length", "colliding_pulses"))
    shape = 0.5 * (1.0 - np.cos(2.0 * math.pi * x / length))
    rho = float(params["rho0"]) + epsilon * float(params["rho1"]) * shape
    p = float(params["p0"]) + epsilon * float(params["p1"]) * shape
    u = (np.sign(x) * float(params["u0"]) * shape)[None]
    h = eos.enthalpy_from_density(p, rho)
    return PrimitiveState(p=p, h=h, u=u, rho=rho)


def initial_primitive(case: CaseDefinition, grid: StructuredGrid, eos: EquationOfState) -> PrimitiveState:
    _require_scaled(case)
    return INITIALIZERS[case.initial.kind](grid, eos, case.initial.params, case.epsilon)


def initial_state(case: CaseDefinition, grid: StructuredGrid, eos: EquationOfState) -> ConservativeState:
    """Conservative initial data; raises when any cell is not admissible."""

    prim = initial_primitive(case, grid, eos)
    if np.any(~(prim.p > 0.0)) or np.any(~(prim.h > 0.0)):
        raise ConfigError(f"initial condition of '{case.name}' has non-positive pressure or enthalpy")
    state = conservative_from_primitive(prim, eos, case.epsilon)
    check_admissible(state, case.epsilon)
    return state


def exact_reference(case: CaseDefinition, x: np.ndarray, time: float) -> Optional[Dict[str, np.ndarray]]:
    """Exact shock-tube profiles when the case is a Riemann problem for a perfect gas."""

    if not case.monitor.exact_reference or case.initial.kind != "riemann":
        return None
    params = case.initial.params
    gamma = case.eos.gamma
    kappa = gamma / (gamma - 1.0)

    def side(tag: str) -> RiemannState:
        p, h = float(params[f"p_{tag}"]), float(params[f"h_{tag}"])
        return RiemannState(rho=kappa * p / h, u=float(params[f"u_{tag}"]), p=p)

    return exact_solution(side("left"), side("right"), x, time, float(params["interface"]), gamma, case.epsilon)


def recirculation_region(case: CaseDefinition) -> Optional[Tuple[Sequence[float], Sequence[float]]]:
    region = case.monitor.recirculation_region
    if region is None:
        return None
    return region["lower"], region["upper"]
