"""Conservative and primitive field containers, conversions and SI scaling."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..exceptions import ConfigError, PositivityError
from .eos import EquationOfState, heat_capacity

logger = logging.getLogger(__name__)


@dataclass
class ConservativeState:
    """Evolved unknowns (rho, q = rho u, W = rho E) on the cells of a grid.

    ``q`` carries the vector component first: shape ``(dim, *cells)``.
    """

    rho: np.ndarray
    q: np.ndarray
    W: np.ndarray

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.rho.shape

    def copy(self) -> ConservativeState:
        return ConservativeState(self.rho.copy(), self.q.copy(), self.W.copy())

    def internal_energy(self, epsilon: float) -> np.ndarray:
        return self.W - 0.5 * epsilon**2 * np.sum(self.q * self.q, axis=0) / self.rho

    def stacked(self) -> np.ndarray:
        """Return the fields as one ``(2 + dim, *cells)`` array."""
        return np.concatenate([self.rho[None], self.q, self.W[None]], axis=0)

    @classmethod
    def from_stacked(cls, V: np.ndarray) -> ConservativeState:
        return cls(rho=V[0].copy(), q=V[1:-1].copy(), W=V[-1].copy())


@dataclass
class PrimitiveState:
    """Derived fields (p, h, u) with the density they were evaluated at."""

    p: np.ndarray
    h: np.ndarray
    u: np.ndarray
    rho: np.ndarray

    def total_enthalpy(self, epsilon: float) -> np.ndarray:
        # H = E + p / rho = h + eps^2 |u|^2 / 2
        return self.h + 0.5 * epsilon**2 * np.sum(self.u * self.u, axis=0)

    def copy(self) -> PrimitiveState:
        return PrimitiveState(self.p.copy(), self.h.copy(), self.u.copy(), self.rho.copy())


def _raise_positivity(bad: np.ndarray, what: str, values: np.ndarray) -> None:
    flat = int(np.flatnonzero(bad)[0])
    cell = tuple(int(i) for i in np.unravel_index(flat, bad.shape))
    raise PositivityError(
        f"non-positive {what} in cell {cell}",
        details={"cell": cell, "value": float(values.ravel()[flat]), "count": int(bad.sum())},
    )


def check_admissible(cons: ConservativeState, epsilon: float, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Return rho e after checking rho > 0 and rho e > 0 on fluid cells."""

    fluid = np.ones(cons.shape, dtype=bool) if mask is None else ~mask
    bad = fluid & ~(cons.rho > 0.0)
    if np.any(bad):
        _raise_positivity(bad, "density", cons.rho)
    rhoe = cons.internal_energy(epsilon)
    bad = fluid & ~(rhoe > 0.0)
    if np.any(bad):
        _raise_positivity(bad, "internal energy", rhoe)
    return rhoe


def primitive_from_conservative(
    cons: ConservativeState,
    eos: EquationOfState,
    epsilon: float,
    *,
    p_guess: Optional[np.ndarray] = None,
) -> PrimitiveState:
    """Recover (p, h, u) from (rho, q, W).

    Solves ``rho h - p = W - eps^2 |q|^2 / (2 rho)`` together with
    ``rho(p, h) = rho``; the perfect gas uses its closed form.
    """

    rhoe = check_admissible(cons, epsilon)
    p, h = eos.pressure_enthalpy_from_internal_energy(cons.rho, rhoe, p_guess)
    return PrimitiveState(p=p, h=h, u=cons.q / cons.rho, rho=cons.rho.copy())


def conservative_from_primitive(prim: PrimitiveState, eos: EquationOfState, epsilon: float) -> ConservativeState:
    """Evaluate ``W = eps^2 rho |u|^2 / 2 + rho h - p`` with ``rho = rho(p, h)``."""

    rho = eos.density(prim.p, prim.h)
    kinetic = 0.5 * epsilon**2 * rho * np.sum(prim.u * prim.u, axis=0)
    return ConservativeState(rho=rho, q=rho * prim.u, W=kinetic + rho * prim.h - prim.p)


def conserved_totals(cons: ConservativeState, volume: float, mask: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """Total mass and energy summed in fixed C order over fluid cells."""

    rho = cons.rho if mask is None else cons.rho[~mask]
    W = cons.W if mask is None else cons.W[~mask]
    return volume * math.fsum(rho.ravel().tolist()), volume * math.fsum(W.ravel().tolist())


# --------------------------------------------------------------------------------------
# Scaling
# --------------------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingParameters:
    """Reference SI values and the dimensionless groups they define."""

    rho0: float
    p0: float
    u0: float
    x0: float
    viscosity: Optional[float] = None
    conductivity: Optional[float] = None
    cp: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("rho0", "p0", "u0", "x0"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"scaling reference '{name}' must be positive", details={name: getattr(self, name)})

    @classmethod
    def from_mach(cls, rho0: float, p0: float, x0: float, epsilon: float, **kwargs: Any) -> ScalingParameters:
        """Choose u0 so that eps^2 = rho0 u0^2 / p0."""
        return cls(rho0=rho0, p0=p0, u0=epsilon * math.sqrt(p0 / rho0), x0=x0, **kwargs)

    @property
    def epsilon(self) -> float:
        return math.sqrt(self.rho0 * self.u0**2 / self.p0)

    @property
    def reynolds(self) -> Optional[float]:
        if self.viscosity is None:
            return None
        return self.u0 * self.x0 / self.viscosity

    @property
    def prandtl(self) -> Optional[float]:
        if self.viscosity is None or self.conductivity is None or self.cp is None:
            return None
        return self.rho0 * self.viscosity * self.cp / self.conductivity

    @property
    def time(self) -> float:
        return self.x0 / self.u0

    def factor(self, kind: str) -> float:
        """Divide an SI quantity of the given kind by this factor to scale it."""

        factors = {
            "density": self.rho0,
            "velocity": self.u0,
            "pressure": self.p0,
            "enthalpy": self.p0 / self.rho0,
            "length": self.x0,
            "time": self.time,
            "acceleration": self.u0**2 / self.x0,
            "dimensionless": 1.0,
        }
        try:
            return factors[kind]
        except KeyError as exc:
            raise ConfigError(f"unknown quantity kind '{kind}'") from exc

    def scale(self, kind: str, value: Any) -> Any:
        if value is None:
            return None
        if isinstance(value, (list, tuple)):
            return [self.scale(kind, v) for v in value]
        return float(value) / self.factor(kind)


# Physical kind of every dimensional entry a case may carry.
QUANTITY_KINDS: Dict[str, str] = {
    "p": "pressure",
    "p_left": "pressure",
    "p_right": "pressure",
    "pressure": "pressure",
    "p0": "pressure",
    "p1": "pressure",
    "h": "enthalpy",
    "h_left": "enthalpy",
    "h_right": "enthalpy",
    "enthalpy": "enthalpy",
    "u": "velocity",
    "u_left": "velocity",
    "u_right": "velocity",
    "velocity": "velocity",
    "wall_speed": "velocity",
    "u0": "velocity",
    "rho": "density",
    "rho0": "density",
    "rho1": "density",
    "interface": "length",
    "ramp_time": "time",
    "body_force": "acceleration",
}


def _scale_mapping(values: Dict[str, Any], scaling: ScalingParameters) -> Dict[str, Any]:
    return {key: scaling.scale(QUANTITY_KINDS[key], val) if key in QUANTITY_KINDS else val for key, val in values.items()}


def nondimensionalize(si_case: Any, scaling: ScalingParameters) -> Any:
    """Return a copy of an SI case definition expressed in scaled variables.

    Wall temperatures are converted to enthalpies with C_p before scaling.
    """

    if getattr(si_case, "units", "scaled") == "scaled":
        return si_case
    cp = scaling.cp if scaling.cp is not None else heat_capacity(si_case.eos.gamma)
    scaling = dataclasses.replace(scaling, cp=cp)

    grid = dataclasses.replace(
        si_case.grid,
        lower=scaling.scale("length", si_case.grid.lower),
        upper=scaling.scale("length", si_case.grid.upper),
        mask=[
            {"lower": scaling.scale("length", box["lower"]), "upper": scaling.scale("length", box["upper"])}
            for box in si_case.grid.mask
        ],
    )

    boundaries = {}
    for side, spec in si_case.boundaries.items():
        enthalpy = spec.enthalpy
        if spec.temperature is not None:
            enthalpy = cp * spec.temperature
        boundaries[side] = dataclasses.replace(
            spec,
            velocity=scaling.scale("velocity", spec.velocity),
            enthalpy=scaling.scale("enthalpy", enthalpy),
            temperature=None,
            pressure=scaling.scale("pressure", spec.pressure),
            wall_speed=scaling.scale("velocity", spec.wall_speed),
            ramp_time=scaling.scale("time", spec.ramp_time),
        )

    initial = dataclasses.replace(si_case.initial, params=_scale_mapping(si_case.initial.params, scaling))

    sources = dataclasses.replace(
        si_case.sources,
        reynolds=scaling.reynolds if si_case.sources.reynolds is None else si_case.sources.reynolds,
        prandtl=scaling.prandtl if si_case.sources.prandtl is None else si_case.sources.prandtl,
        body_force=scaling.scale("acceleration", si_case.sources.body_force),
    )

    time = dataclasses.replace(
        si_case.time,
        dt=scaling.scale("time", si_case.time.dt),
        dt_max=scaling.scale("time", si_case.time.dt_max),
        end_time=scaling.scale("time", si_case.time.end_time),
    )

    monitor = si_case.monitor
    if monitor.recirculation_region is not None:
        region = monitor.recirculation_region
        monitor = dataclasses.replace(
            monitor,
            recirculation_region={
                "lower": scaling.scale("length", region["lower"]),
                "upper": scaling.scale("length", region["upper"]),
            },
        )

    logger.debug(
        f"Scaled case '{si_case.name}': eps={scaling.epsilon:.6g} Re={scaling.reynolds} Pr={scaling.prandtl}"
    )
    return dataclasses.replace(
        si_case,
        units="scaled",
        epsilon=scaling.epsilon,
        grid=grid,
        boundaries=boundaries,
        initial=initial,
        sources=sources,
        time=time,
        monitor=monitor,
    )
