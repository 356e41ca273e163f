"""Uniform Cartesian grids in one and two dimensions.

Fields live on the cells in C order. Ghost layers are two cells wide on every
side; padded arrays therefore have ``n + 4`` entries along each axis and cell
``i`` sits at padded index ``i + NG``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigError

logger = logging.getLogger(__name__)

NG = 2
SIDES = ("xmin", "xmax", "ymin", "ymax")


class BoundaryKind(str, Enum):
    """Boundary tags understood by the ghost filler and the pressure closures."""

    PERIODIC = "periodic"
    NEUMANN = "neumann"
    SLIP_WALL = "slip_wall"
    INLET = "inlet"
    OUTLET = "outlet"
    ISOTHERMAL_WALL = "isothermal_wall"
    ADIABATIC_WALL = "adiabatic_wall"


WALL_KINDS = {BoundaryKind.SLIP_WALL, BoundaryKind.ISOTHERMAL_WALL, BoundaryKind.ADIABATIC_WALL}

# (pressure ghost coefficient on the own cell, sign applied to H q on the own cell)
_CLOSURES: Dict[BoundaryKind, Tuple[float, float]] = {
    BoundaryKind.NEUMANN: (1.0, 1.0),
    BoundaryKind.SLIP_WALL: (1.0, -1.0),
    BoundaryKind.ISOTHERMAL_WALL: (1.0, -1.0),
    BoundaryKind.ADIABATIC_WALL: (1.0, -1.0),
    BoundaryKind.INLET: (1.0, 0.0),
    BoundaryKind.OUTLET: (0.0, 1.0),
}
_SOLID_CLOSURE = (1.0, -1.0)


def side_name(axis: int, upper: bool) -> str:
    return SIDES[2 * axis + int(upper)]


def side_axis(side: str) -> Tuple[int, bool]:
    index = SIDES.index(side)
    return index // 2, bool(index % 2)


@dataclass(frozen=True)
class BoundaryCondition:
    """Tag and data for one side of the domain.

    ``wall_speed`` is the tangential speed of a moving wall, ramped linearly
    from zero over ``ramp_time``.
    """

    kind: BoundaryKind
    velocity: Optional[Tuple[float, ...]] = None
    enthalpy: Optional[float] = None
    pressure: Optional[float] = None
    wall_speed: float = 0.0
    ramp_time: float = 0.0

    @property
    def is_wall(self) -> bool:
        return self.kind in WALL_KINDS

    @property
    def is_moving(self) -> bool:
        return self.is_wall and self.wall_speed != 0.0

    def wall_velocity(self, time: float) -> float:
        if self.ramp_time > 0.0:
            return min(time / self.ramp_time, 1.0) * self.wall_speed
        return self.wall_speed

    def validate(self, side: str, dimension: int) -> None:
        missing: List[str] = []
        if self.kind == BoundaryKind.INLET:
            if self.velocity is None:
                missing.append("velocity")
            elif len(self.velocity) != dimension:
                raise ConfigError(f"inlet velocity on '{side}' must have {dimension} components")
            if self.enthalpy is None:
                missing.append("enthalpy")
        if self.kind == BoundaryKind.OUTLET and self.pressure is None:
            missing.append("pressure")
        if self.kind == BoundaryKind.ISOTHERMAL_WALL and self.enthalpy is None:
            missing.append("enthalpy")
        if missing:
            raise ConfigError(
                f"boundary '{side}' of kind '{self.kind.value}' is missing data",
                details={"side": side, "missing": missing},
            )


@dataclass(frozen=True)
class GridConfig:
    cells: Tuple[int, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    boundaries: Dict[str, BoundaryCondition]
    mask_boxes: Tuple[Tuple[Tuple[float, ...], Tuple[float, ...]], ...] = ()


@dataclass(frozen=True)
class Face:
    owner: Tuple[int, ...]
    neighbor: Optional[Tuple[int, ...]]
    axis: int
    normal: Tuple[float, ...]
    surface: float
    side: Optional[str] = None


@dataclass(frozen=True)
class AxisClosure:
    """Neighbour lookup of every fluid unknown along one axis.

    Where a neighbour is missing (domain side or solid cell) the ghost value is
    ``p_coef * p_own + (1 - p_coef) * p_ghost`` for pressure and
    ``flux_sign * Hq_own + (1 - |flux_sign|) * Hq_ghost`` for energy fluxes;
    ``ghost`` indexes the flattened padded array.
    """

    axis: int
    plus: np.ndarray
    minus: np.ndarray
    plus_p_coef: np.ndarray
    minus_p_coef: np.ndarray
    plus_flux_sign: np.ndarray
    minus_flux_sign: np.ndarray
    plus_ghost: np.ndarray
    minus_ghost: np.ndarray


@dataclass
class PaddedFields:
    """Primitive fields with ghost layers: ``p``, ``h`` and vector ``u``."""

    p: np.ndarray
    h: np.ndarray
    u: np.ndarray


@dataclass(frozen=True, eq=False)
class StructuredGrid:
    dimension: int
    cells: Tuple[int, ...]
    dx: float
    origin: Tuple[float, ...]
    boundaries: Dict[str, BoundaryCondition]
    mask: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.cells

    @property
    def padded_shape(self) -> Tuple[int, ...]:
        return tuple(n + 2 * NG for n in self.cells)

    @property
    def volume(self) -> float:
        return self.dx**self.dimension

    @property
    def surface(self) -> float:
        return self.dx ** (self.dimension - 1)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells))

    @property
    def solid(self) -> np.ndarray:
        return self.mask if self.mask is not None else np.zeros(self.cells, dtype=bool)

    @property
    def interior(self) -> Tuple[slice, ...]:
        return tuple(slice(NG, NG + n) for n in self.cells)

    def side(self, axis: int, upper: bool) -> BoundaryCondition:
        return self.boundaries[side_name(axis, upper)]

    def is_periodic(self, axis: int) -> bool:
        return self.side(axis, False).kind == BoundaryKind.PERIODIC

    def centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.cells[axis]) + 0.5) * self.dx

    def coordinates(self) -> List[np.ndarray]:
        """Cell-center coordinate arrays shaped like the grid."""
        return list(np.meshgrid(*[self.centers(a) for a in range(self.dimension)], indexing="ij"))

    @cached_property
    def fluid_index(self) -> np.ndarray:
        """Unknown number of each fluid cell, -1 for solid cells."""
        index = np.full(self.cells, -1, dtype=np.int64)
        fluid = ~self.solid
        index[fluid] = np.arange(int(fluid.sum()))
        return index

    @property
    def n_unknowns(self) -> int:
        return int((~self.solid).sum())

    def iter_faces(self) -> Iterator[Face]:
        """Faces along each axis in C order; boundary faces carry their side."""

        for axis in range(self.dimension):
            n = self.cells[axis]
            normal = tuple(1.0 if b == axis else 0.0 for b in range(self.dimension))
            reverse = tuple(-c for c in normal)
            face_shape = tuple(n + 1 if b == axis else self.cells[b] for b in range(self.dimension))
            for index in np.ndindex(*face_shape):
                f = index[axis]
                lower = index[:axis] + (f - 1,) + index[axis + 1:]
                upper = index[:axis] + (f,) + index[axis + 1:]
                if f == 0:
                    partner = index[:axis] + (n - 1,) + index[axis + 1:] if self.is_periodic(axis) else None
                    yield Face(upper, partner, axis, reverse, self.surface, side_name(axis, False))
                elif f == n:
                    partner = index[:axis] + (0,) + index[axis + 1:] if self.is_periodic(axis) else None
                    yield Face(lower, partner, axis, normal, self.surface, side_name(axis, True))
                else:
                    yield Face(lower, upper, axis, normal, self.surface)

    def wall_faces(self, axis: int) -> np.ndarray:
        """Flags for the ``n + 1`` faces along ``axis`` that carry no mass flux."""

        return self._wall_faces[axis]

    @cached_property
    def _wall_faces(self) -> List[np.ndarray]:
        faces = []
        for axis in range(self.dimension):
            shape = tuple(n + 1 if b == axis else n for b, n in enumerate(self.cells))
            walls = np.zeros(shape, dtype=bool)
            lead = [slice(None)] * self.dimension
            if self.side(axis, False).is_wall:
                lead[axis] = 0
                walls[tuple(lead)] = True
            if self.side(axis, True).is_wall:
                lead[axis] = self.cells[axis]
                walls[tuple(lead)] = True
            if self.mask is not None:
                lo = [slice(None)] * self.dimension
                hi = [slice(None)] * self.dimension
                lo[axis] = slice(0, -1)
                hi[axis] = slice(1, None)
                inner = [slice(None)] * self.dimension
                inner[axis] = slice(1, -1)
                walls[tuple(inner)] |= self.mask[tuple(lo)] ^ self.mask[tuple(hi)]
            faces.append(walls)
        return faces

    def closure(self, axis: int) -> AxisClosure:
        return self._closures[axis]

    @cached_property
    def _closures(self) -> List[AxisClosure]:
        return [self._build_closure(axis) for axis in range(self.dimension)]

    def _build_closure(self, axis: int) -> AxisClosure:
        fluid_cells = np.argwhere(~self.solid).T  # (dim, N) in C order
        n = self.cells[axis]
        padded = self.padded_shape
        parts = {}
        for label, step, upper in (("plus", 1, True), ("minus", -1, False)):
            target = fluid_cells.copy()
            target[axis] += step
            inside = (target[axis] >= 0) & (target[axis] < n)
            if self.is_periodic(axis):
                target[axis] %= n
                inside[:] = True
            clipped = target.copy()
            clipped[axis] = np.clip(clipped[axis], 0, n - 1)
            neighbour = np.where(inside, self.fluid_index[tuple(clipped)], -1)
            solid_hit = inside & (neighbour < 0)
            p_coef = np.zeros(neighbour.shape)
            flux_sign = np.zeros(neighbour.shape)
            p_coef[solid_hit], flux_sign[solid_hit] = _SOLID_CLOSURE
            if not self.is_periodic(axis):
                outside = ~inside
                kind = self.side(axis, upper).kind
                p_coef[outside], flux_sign[outside] = _CLOSURES[kind]
            ghost = np.full(neighbour.shape, -1, dtype=np.int64)
            missing = neighbour < 0
            if np.any(missing):
                unwrapped = fluid_cells.copy()
                unwrapped[axis] += step
                ghost[missing] = np.ravel_multi_index(tuple(unwrapped[:, missing] + NG), padded)
            parts[label] = (neighbour, p_coef, flux_sign, ghost)
        return AxisClosure(
            axis=axis,
            plus=parts["plus"][0],
            minus=parts["minus"][0],
            plus_p_coef=parts["plus"][1],
            minus_p_coef=parts["minus"][1],
            plus_flux_sign=parts["plus"][2],
            minus_flux_sign=parts["minus"][2],
            plus_ghost=parts["plus"][3],
            minus_ghost=parts["minus"][3],
        )


# --------------------------------------------------------------------------------------
# Construction
# --------------------------------------------------------------------------------------


def _runs(line: np.ndarray) -> List[Tuple[bool, int, int]]:
    """(value, start, length) runs of a boolean line."""
    runs = []
    start = 0
    for i in range(1, len(line) + 1):
        if i == len(line) or line[i] != line[start]:
            runs.append((bool(line[start]), start, i - start))
            start = i
    return runs


def _validate_mask(mask: np.ndarray) -> None:
    if mask.all():
        raise ConfigError("the solid mask covers every cell")
    for axis in range(mask.ndim):
        moved = np.moveaxis(mask, axis, -1).reshape(-1, mask.shape[axis])
        for line in moved:
            runs = _runs(line)
            for value, start, length in runs:
                touches_edge = start == 0 or start + length == len(line)
                if length < NG and not touches_edge and len(runs) > 1:
                    kind = "solid" if value else "fluid"
                    raise ConfigError(
                        f"{kind} runs must be at least {NG} cells thick",
                        details={"axis": axis, "start": start, "length": length},
                    )


def build_grid(config: GridConfig) -> StructuredGrid:
    """Validate a grid configuration and build the grid."""

    dimension = len(config.cells)
    if dimension not in (1, 2):
        raise ConfigError(f"grids must be 1D or 2D, got {dimension} axes")
    if len(config.lower) != dimension or len(config.upper) != dimension:
        raise ConfigError("domain bounds do not match the number of axes")
    if any(int(n) < 2 for n in config.cells):
        raise ConfigError("every axis needs at least 2 cells", details={"cells": list(config.cells)})

    spacings = [(hi - lo) / n for lo, hi, n in zip(config.lower, config.upper, config.cells)]
    if any(not s > 0.0 for s in spacings):
        raise ConfigError("domain upper bounds must exceed lower bounds", details={"spacing": spacings})
    dx = spacings[0]
    if any(abs(s - dx) > 1e-12 * dx for s in spacings[1:]):
        raise ConfigError("cells must be square", details={"spacing": spacings})

    boundaries: Dict[str, BoundaryCondition] = {}
    for axis in range(dimension):
        lower_bc = config.boundaries.get(side_name(axis, False))
        upper_bc = config.boundaries.get(side_name(axis, True))
        if lower_bc is None or upper_bc is None:
            raise ConfigError(f"boundary tags missing on axis {axis}")
        periodic = [bc.kind == BoundaryKind.PERIODIC for bc in (lower_bc, upper_bc)]
        if periodic[0] != periodic[1]:
            raise ConfigError(
                "periodic tags must come in opposite-side pairs",
                details={"axis": axis},
            )
        if periodic[0] and config.cells[axis] < 3:
            raise ConfigError("periodic axes need at least 3 cells")
        for upper, bc in ((False, lower_bc), (True, upper_bc)):
            bc.validate(side_name(axis, upper), dimension)
            boundaries[side_name(axis, upper)] = bc

    mask = None
    if config.mask_boxes:
        mask = np.zeros(tuple(int(n) for n in config.cells), dtype=bool)
        centers = np.meshgrid(
            *[config.lower[a] + (np.arange(config.cells[a]) + 0.5) * dx for a in range(dimension)],
            indexing="ij",
        )
        for box_lower, box_upper in config.mask_boxes:
            inside = np.ones_like(mask)
            for a in range(dimension):
                inside &= (centers[a] > box_lower[a]) & (centers[a] < box_upper[a])
            mask |= inside
        _validate_mask(mask)
        if not mask.any():
            mask = None

    grid = StructuredGrid(
        dimension=dimension,
        cells=tuple(int(n) for n in config.cells),
        dx=float(dx),
        origin=tuple(float(v) for v in config.lower),
        boundaries=boundaries,
        mask=mask,
    )
    logger.debug(f"Built grid cells={grid.cells} dx={grid.dx:.6g} solid={0 if mask is None else int(mask.sum())}")
    return grid


# --------------------------------------------------------------------------------------
# Ghost layers
# --------------------------------------------------------------------------------------


def _at(ndim: int, axis: int, index: int, lead: int = 0) -> Tuple:
    key: List = [slice(None)] * (ndim + lead)
    key[axis + lead] = index
    return tuple(key)


def pad(grid: StructuredGrid, values: np.ndarray, vector: bool = False) -> np.ndarray:
    lead = 1 if vector else 0
    widths = [(0, 0)] * lead + [(NG, NG)] * grid.dimension
    return np.pad(values, widths, mode="edge")


def _fill_side(grid: StructuredGrid, fields: PaddedFields, axis: int, upper: bool, time: float) -> None:
    bc = grid.side(axis, upper)
    ndim = grid.dimension
    n = grid.cells[axis]
    for k in range(NG):
        if upper:
            g, m, o = NG + n + k, NG + n - 1 - k, NG + k
        else:
            g, m, o = NG - 1 - k, NG + k, NG + n - 1 - k
        src = o if bc.kind == BoundaryKind.PERIODIC else m
        gs, ss = _at(ndim, axis, g), _at(ndim, axis, src)
        gv, sv = _at(ndim, axis, g, 1), _at(ndim, axis, src, 1)
        fields.p[gs] = fields.p[ss]
        fields.h[gs] = fields.h[ss]
        fields.u[gv] = fields.u[sv]
        if bc.kind == BoundaryKind.PERIODIC:
            continue
        if bc.is_wall:
            fields.u[axis][gs] = -fields.u[axis][ss]
            if bc.is_moving:
                speed = bc.wall_velocity(time)
                for b in range(ndim):
                    if b != axis:
                        fields.u[b][gs] = 2.0 * speed - fields.u[b][ss]
        if bc.kind == BoundaryKind.ISOTHERMAL_WALL:
            fields.h[gs] = 2.0 * bc.enthalpy - fields.h[ss]
        elif bc.kind == BoundaryKind.INLET:
            for b in range(ndim):
                fields.u[b][gs] = bc.velocity[b]
            fields.h[gs] = bc.enthalpy
        elif bc.kind == BoundaryKind.OUTLET:
            fields.p[gs] = bc.pressure


def _fill_mask(grid: StructuredGrid, fields: PaddedFields, axis: int) -> None:
    solid = np.zeros(grid.padded_shape, dtype=bool)
    solid[grid.interior] = grid.mask
    fluid = np.zeros(grid.padded_shape, dtype=bool)
    fluid[grid.interior] = ~grid.mask
    for step in (1, -1):
        for k in range(NG):
            target = solid.copy()
            for j in range(1, k + 1):
                target &= np.roll(solid, -step * j, axis=axis)
            target &= np.roll(fluid, -step * (k + 1), axis=axis)
            cells = np.argwhere(target).T
            if cells.size == 0:
                continue
            source = cells.copy()
            source[axis] += step * (2 * k + 1)
            tgt, src = tuple(cells), tuple(source)
            fields.p[tgt] = fields.p[src]
            fields.h[tgt] = fields.h[src]
            for b in range(grid.dimension):
                sign = -1.0 if b == axis else 1.0
                fields.u[b][tgt] = sign * fields.u[b][src]


def fill_ghosts(
    grid: StructuredGrid,
    p: np.ndarray,
    h: np.ndarray,
    u: np.ndarray,
    time: float = 0.0,
) -> List[PaddedFields]:
    """Pad (p, h, u) with two ghost layers per the boundary tags.

    Returns one padded set per axis. They coincide unless the grid has solid
    cells, which are mirrored along the sweep axis of each set.
    """

    if p.shape != grid.shape or h.shape != grid.shape or u.shape != (grid.dimension,) + grid.shape:
        raise ConfigError(
            "field shapes do not match the grid",
            details={"grid": list(grid.shape), "p": list(p.shape), "u": list(u.shape)},
        )
    base = PaddedFields(p=pad(grid, p), h=pad(grid, h), u=pad(grid, u, vector=True))
    for axis in range(grid.dimension):
        _fill_side(grid, base, axis, False, time)
        _fill_side(grid, base, axis, True, time)
    if grid.mask is None:
        return [base] * grid.dimension
    sweeps = []
    for axis in range(grid.dimension):
        fields = PaddedFields(p=base.p.copy(), h=base.h.copy(), u=base.u.copy())
        _fill_mask(grid, fields, axis)
        sweeps.append(fields)
    return sweeps


def interior_view(grid: StructuredGrid, padded: np.ndarray, vector: bool = False) -> np.ndarray:
    return padded[(slice(None),) * int(vector) + grid.interior]


def grid_config_from_mapping(
    cells: Sequence[int],
    lower: Sequence[float],
    upper: Sequence[float],
    boundaries: Dict[str, BoundaryCondition],
    mask_boxes: Sequence[Tuple[Sequence[float], Sequence[float]]] = (),
) -> GridConfig:
    return GridConfig(
        cells=tuple(int(c) for c in cells),
        lower=tuple(float(v) for v in lower),
        upper=tuple(float(v) for v in upper),
        boundaries=dict(boundaries),
        mask_boxes=tuple((tuple(lo), tuple(hi)) for lo, hi in mask_boxes),
    )
