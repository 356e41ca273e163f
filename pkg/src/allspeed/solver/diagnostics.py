"""Error norms, convergence orders and flow monitors computed from cell fields."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DiagnosticsError
from .eos import EquationOfState
from .mesh import StructuredGrid, fill_ghosts
from .state import ConservativeState, PrimitiveState, conserved_totals

logger = logging.getLogger(__name__)

DEFAULT_RECIRCULATION_THRESHOLD = 1e-3


# --------------------------------------------------------------------------------------
# Convergence
# --------------------------------------------------------------------------------------


def l1_error(
    coarse_x: np.ndarray,
    coarse: np.ndarray,
    reference_x: np.ndarray,
    reference: np.ndarray,
    period: Optional[float] = None,
) -> float:
    """sum |p(x_j) - p_ref(x_j)| / sum |p_ref(x_j)| over the reference points.

    The coarse field is linearly interpolated to the reference points.
    """

    coarse_x = np.asarray(coarse_x, dtype=float)
    reference_x = np.asarray(reference_x, dtype=float)
    if period is None:
        lo, hi = coarse_x[0] - 0.5 * (coarse_x[1] - coarse_x[0]), coarse_x[-1] + 0.5 * (coarse_x[-1] - coarse_x[-2])
        if reference_x.min() < lo - 1e-12 or reference_x.max() > hi + 1e-12:
            raise DiagnosticsError(
                "reference points fall outside the coarse domain",
                details={"coarse": [float(lo), float(hi)], "reference": [float(reference_x.min()), float(reference_x.max())]},
            )
    sampled = np.interp(reference_x, coarse_x, np.asarray(coarse, dtype=float), period=period)
    norm = math.fsum(np.abs(reference).tolist())
    if norm == 0.0:
        raise DiagnosticsError("reference field has zero L1 norm")
    return math.fsum(np.abs(sampled - reference).tolist()) / norm


def estimate_orders(spacings: Sequence[float], errors: Sequence[float]) -> List[Optional[float]]:
    """Observed order between consecutive resolutions; ``None`` for the first row."""

    orders: List[Optional[float]] = [None]
    for k in range(1, len(errors)):
        e0, e1 = errors[k - 1], errors[k]
        if e0 > 0.0 and e1 > 0.0:
            orders.append(math.log(e0 / e1) / math.log(spacings[k - 1] / spacings[k]))
        else:
            orders.append(None)
    return orders


@dataclass
class ErrorRow:
    cells: int
    dx: float
    dt: float
    error: float
    order: Optional[float] = None


@dataclass
class ErrorReport:
    case: str
    field: str
    reference: str
    rows: List[ErrorRow] = field(default_factory=list)

    def add(self, cells: int, dx: float, dt: float, error: float) -> None:
        if error < 0.0:
            raise DiagnosticsError("negative error norm", details={"cells": cells, "error": error})
        self.rows.append(ErrorRow(cells=cells, dx=dx, dt=dt, error=error))
        orders = estimate_orders([r.dx for r in self.rows], [r.error for r in self.rows])
        for row, order in zip(self.rows, orders):
            row.order = order

    @property
    def orders(self) -> List[float]:
        return [r.order for r in self.rows if r.order is not None]

    def as_rows(self) -> List[List[object]]:
        return [[r.cells, r.dx, r.dt, r.error, "" if r.order is None else r.order] for r in self.rows]


# --------------------------------------------------------------------------------------
# Field monitors
# --------------------------------------------------------------------------------------


def divergence_field(grid: StructuredGrid, u: np.ndarray, time: float = 0.0) -> np.ndarray:
    """Centered divergence sum_a (u_a[i+1] - u_a[i-1]) / (2 dx) with the grid's ghost rules."""

    ones = np.ones(grid.shape)
    padded = fill_ghosts(grid, ones, ones, u, time)
    div = np.zeros(grid.shape)
    for axis in range(grid.dimension):
        ua = padded[axis].u[axis]
        hi = list(grid.interior)
        lo = list(grid.interior)
        hi[axis] = slice(hi[axis].start + 1, hi[axis].stop + 1)
        lo[axis] = slice(lo[axis].start - 1, lo[axis].stop - 1)
        div += (ua[tuple(hi)] - ua[tuple(lo)]) / (2.0 * grid.dx)
    if grid.mask is not None:
        div[grid.mask] = 0.0
    return div


def max_divergence(grid: StructuredGrid, u: np.ndarray, time: float = 0.0) -> float:
    return float(np.max(np.abs(divergence_field(grid, u, time))))


def local_mach(prim: PrimitiveState, eos: EquationOfState, epsilon: float) -> np.ndarray:
    """eps |u| / a_m in scaled variables."""
    speed = np.sqrt(np.sum(prim.u * prim.u, axis=0))
    return epsilon * speed / np.sqrt(eos.sound_speed_squared(prim.p, prim.h, prim.rho))


@dataclass
class Recirculation:
    found: bool
    center: Optional[Tuple[float, float]] = None
    vorticity: float = 0.0
    candidates: int = 0


def detect_recirculation(
    grid: StructuredGrid,
    u: np.ndarray,
    region: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
    threshold: float = DEFAULT_RECIRCULATION_THRESHOLD,
) -> Recirculation:
    """Look for a vortex among the vertices joining four fluid cells.

    A vertex qualifies when both velocity components take both signs on its
    four cells and the circulation around the loop through their centers,
    divided by the enclosed area, exceeds ``threshold`` in magnitude. The
    center reported is the qualifying vertex of largest circulation.
    """

    if grid.dimension != 2:
        raise DiagnosticsError("recirculation detection needs a 2D field")
    ux, uy = u[0], u[1]
    corners = [(slice(0, -1), slice(0, -1)), (slice(1, None), slice(0, -1)), (slice(0, -1), slice(1, None)), (slice(1, None), slice(1, None))]
    ux4 = np.stack([ux[c] for c in corners])
    uy4 = np.stack([uy[c] for c in corners])

    def straddles(values: np.ndarray) -> np.ndarray:
        lo, hi = values.min(axis=0), values.max(axis=0)
        return (lo <= 0.0) & (hi >= 0.0) & (hi > lo)

    # counterclockwise: bottom (+x), right (+y), top (-x), left (-y)
    circulation = 0.5 * grid.dx * (
        (ux4[0] + ux4[1]) + (uy4[1] + uy4[3]) - (ux4[2] + ux4[3]) - (uy4[0] + uy4[2])
    )
    vorticity = circulation / grid.dx**2
    candidate = straddles(ux4) & straddles(uy4) & (np.abs(vorticity) > threshold)

    xv = grid.origin[0] + (np.arange(grid.cells[0] - 1) + 1.0) * grid.dx
    yv = grid.origin[1] + (np.arange(grid.cells[1] - 1) + 1.0) * grid.dx
    X, Y = np.meshgrid(xv, yv, indexing="ij")
    if region is not None:
        lower, upper = region
        candidate &= (X >= lower[0]) & (X <= upper[0]) & (Y >= lower[1]) & (Y <= upper[1])
    if grid.mask is not None:
        touching = np.stack([grid.mask[c] for c in corners]).any(axis=0)
        candidate &= ~touching

    count = int(candidate.sum())
    if count == 0:
        return Recirculation(found=False)
    strength = np.where(candidate, np.abs(vorticity), -np.inf)
    best = np.unravel_index(int(np.argmax(strength)), strength.shape)
    logger.debug(f"Recirculation: {count} candidate vertices, strongest at {best}")
    return Recirculation(
        found=True,
        center=(float(X[best]), float(Y[best])),
        vorticity=float(vorticity[best]),
        candidates=count,
    )


# --------------------------------------------------------------------------------------
# Ledgers and residuals
# --------------------------------------------------------------------------------------


class ConservationLedger:
    """Tracks total mass and energy against their initial values."""

    def __init__(self, state: ConservativeState, grid: StructuredGrid) -> None:
        self.grid = grid
        self.initial = conserved_totals(state, grid.volume, grid.mask)
        self.current = self.initial
        self.history: List[Tuple[float, float]] = []

    @staticmethod
    def _relative(now: float, then: float) -> float:
        return abs(now - then) / abs(then) if then != 0.0 else abs(now - then)

    def record(self, state: ConservativeState) -> Tuple[float, float]:
        self.current = conserved_totals(state, self.grid.volume, self.grid.mask)
        drift = (self._relative(self.current[0], self.initial[0]), self._relative(self.current[1], self.initial[1]))
        self.history.append(drift)
        return drift

    @property
    def mass_drift(self) -> float:
        return self._relative(self.current[0], self.initial[0])

    @property
    def energy_drift(self) -> float:
        return self._relative(self.current[1], self.initial[1])


def steady_residual(previous: np.ndarray, current: np.ndarray) -> float:
    """Mean absolute change of a field over one step."""
    return float(np.mean(np.abs(current - previous)))


def front_position(x: np.ndarray, values: np.ndarray, level: float) -> float:
    """Rightmost crossing of ``level``, linearly interpolated between samples."""

    above = np.asarray(values) > level
    crossings = np.flatnonzero(above[:-1] != above[1:])
    if crossings.size == 0:
        raise DiagnosticsError("field never crosses the requested level", details={"level": level})
    i = int(crossings[-1])
    v0, v1 = values[i], values[i + 1]
    return float(x[i] + (level - v0) * (x[i + 1] - x[i]) / (v1 - v0))
