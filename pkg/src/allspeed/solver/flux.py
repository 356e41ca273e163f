"""Explicit face fluxes: centered part plus local Lax-Friedrichs dissipation.

All routines sweep every face along one axis at once. A face array along
``axis`` has ``n + 1`` entries on that axis (face ``f`` separates cells
``f - 1`` and ``f``) and the interior extent on the others.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .eos import EquationOfState
from .mesh import NG, StructuredGrid
from .state import ConservativeState, PrimitiveState, primitive_from_conservative

logger = logging.getLogger(__name__)


def minmod(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 0.5 * (np.sign(x) + np.sign(y)) * np.minimum(np.abs(x), np.abs(y))


@dataclass
class ReconstructedPair:
    """Left and right conservative states at every face, stacked as (rho, q, W)."""

    left: np.ndarray
    right: np.ndarray


@dataclass
class FaceFlux:
    mass: np.ndarray
    momentum: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray


def along(grid: StructuredGrid, axis: int, start: int, stop: int, lead: int = 1) -> Tuple:
    """Index a padded array: ``start:stop`` on ``axis``, interior elsewhere."""

    key = [slice(None)] * lead
    for b, n in enumerate(grid.cells):
        key.append(slice(start, stop) if b == axis else slice(NG, NG + n))
    return tuple(key)


def face_neighbours(grid: StructuredGrid, axis: int, padded: np.ndarray, lead: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Cell values on the lower and upper side of every face along ``axis``."""

    n = grid.cells[axis]
    return (
        padded[along(grid, axis, NG - 1, NG + n, lead)],
        padded[along(grid, axis, NG, NG + n + 1, lead)],
    )


def _admissible(V: np.ndarray, epsilon: float) -> np.ndarray:
    rho = V[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        rhoe = V[-1] - 0.5 * epsilon**2 * np.sum(V[1:-1] ** 2, axis=0) / rho
    return (rho > 0.0) & (rhoe > 0.0)


def reconstruct(grid: StructuredGrid, V: np.ndarray, axis: int, order: int = 2, epsilon: float = 1.0) -> ReconstructedPair:
    """MUSCL states at the faces along ``axis`` from the padded stacked fields ``V``.

    Faces whose limited states lose positivity fall back to the cell values.
    """

    n = grid.cells[axis]
    centre_l = V[along(grid, axis, NG - 1, NG + n)]
    centre_r = V[along(grid, axis, NG, NG + n + 1)]
    if order == 1:
        return ReconstructedPair(left=centre_l.copy(), right=centre_r.copy())

    behind = V[along(grid, axis, NG - 2, NG + n - 1)]
    ahead = V[along(grid, axis, NG + 1, NG + n + 2)]
    jump = centre_r - centre_l
    left = centre_l + 0.5 * minmod(centre_l - behind, jump)
    right = centre_r - 0.5 * minmod(ahead - centre_r, jump)

    ok = _admissible(left, epsilon) & _admissible(right, epsilon)
    if not np.all(ok):
        logger.warning(f"Reconstruction reverted to first order on {int((~ok).sum())} faces along axis {axis}")
        left = np.where(ok, left, centre_l)
        right = np.where(ok, right, centre_r)
    return ReconstructedPair(left=left, right=right)


def max_wave_speed(
    left: PrimitiveState,
    right: PrimitiveState,
    axis: int,
    alpha: float,
    eos: EquationOfState,
) -> np.ndarray:
    """max(|u_n| + sqrt(alpha a_m^2)) over the two sides of each face."""

    def side_speed(prim: PrimitiveState) -> np.ndarray:
        speed = np.abs(prim.u[axis])
        if alpha != 0.0:
            speed = speed + np.sqrt(alpha * eos.sound_speed_squared(prim.p, prim.h, prim.rho))
        return speed

    return np.maximum(side_speed(left), side_speed(right))


def explicit_face_flux(
    pair: ReconstructedPair,
    axis: int,
    alpha: float,
    lam: np.ndarray,
    epsilon: float,
    eos: EquationOfState,
    *,
    left_prim: Optional[PrimitiveState] = None,
    right_prim: Optional[PrimitiveState] = None,
) -> FaceFlux:
    """Rusanov flux through faces of normal ``e_axis``.

    The implicit pressure part (1 - alpha eps^2) / eps^2 (p_i + p_v) / 2 is not
    included; only alpha (p^L + p^R) / 2 enters the momentum flux.
    """

    if left_prim is None:
        left_prim = primitive_from_conservative(ConservativeState.from_stacked(pair.left), eos, epsilon)
    if right_prim is None:
        right_prim = primitive_from_conservative(ConservativeState.from_stacked(pair.right), eos, epsilon)

    VL, VR = pair.left, pair.right
    dissipation = -0.5 * lam * (VR - VL)
    qn_l, qn_r = VL[1 + axis], VR[1 + axis]

    mass = 0.5 * (qn_l + qn_r) + dissipation[0]
    momentum = 0.5 * (qn_l * VL[1:-1] / VL[0] + qn_r * VR[1:-1] / VR[0]) + dissipation[1:-1]
    momentum[axis] += alpha * 0.5 * (left_prim.p + right_prim.p)
    H_l = left_prim.total_enthalpy(epsilon)
    H_r = right_prim.total_enthalpy(epsilon)
    energy = 0.5 * (H_l * qn_l + H_r * qn_r) + dissipation[-1]
    return FaceFlux(mass=mass, momentum=momentum, energy=energy, dissipation=dissipation)


def face_divergence(grid: StructuredGrid, face_values: np.ndarray, axis: int) -> np.ndarray:
    """(F_{i+1/2} - F_{i-1/2}) / dx for face arrays with optional leading components."""

    lead = face_values.ndim - grid.dimension
    hi = [slice(None)] * face_values.ndim
    lo = [slice(None)] * face_values.ndim
    hi[lead + axis] = slice(1, None)
    lo[lead + axis] = slice(0, -1)
    return (face_values[tuple(hi)] - face_values[tuple(lo)]) / grid.dx
