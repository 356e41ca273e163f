"""Time stepping: the semi-implicit AP step and a fully explicit baseline."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigError, PositivityError
from .eos import EquationOfState, PerfectGas
from .flux import explicit_face_flux, face_divergence, face_neighbours, max_wave_speed, reconstruct
from .mesh import NG, PaddedFields, StructuredGrid, fill_ghosts
from .pressure_solver import (
    LINEAR_METHODS,
    NewtonWorkspace,
    PressureOperators,
    assemble_elliptic,
    assemble_rhs_phi,
    dump_triplets,
    newton_solve,
    solve_linear,
)
from .state import ConservativeState, PrimitiveState, check_admissible, conservative_from_primitive, primitive_from_conservative

logger = logging.getLogger(__name__)

PRESSURE_PATHS = ("auto", "linear", "newton")


@dataclass
class StepConfig:
    cfl: float = 0.5
    alpha: float = 0.0
    epsilon: float = 1.0
    order: int = 1
    dt: Optional[float] = None
    dt_max: float = 1.0
    viscous: bool = False
    conduction: bool = False
    gravity: bool = False
    reynolds: Optional[float] = None
    prandtl: Optional[float] = None
    body_force: Tuple[float, ...] = (0.0, 0.0)
    pressure_path: str = "auto"
    linear_solver: str = "direct"
    linear_tol: float = 1e-10
    newton_tol: float = 1e-10
    newton_max_iter: int = 50

    def __post_init__(self) -> None:
        problems: Dict[str, object] = {}
        if not 0.0 < self.cfl <= 1.0:
            problems["cfl"] = self.cfl
        if self.order not in (1, 2):
            problems["order"] = self.order
        if not self.alpha >= 0.0:
            problems["alpha"] = self.alpha
        if not self.epsilon > 0.0:
            problems["epsilon"] = self.epsilon
        if self.dt is not None and not self.dt > 0.0:
            problems["dt"] = self.dt
        if not self.dt_max > 0.0:
            problems["dt_max"] = self.dt_max
        if (self.viscous or self.conduction) and not (self.reynolds and self.reynolds > 0.0):
            problems["reynolds"] = self.reynolds
        if self.conduction and not (self.prandtl and self.prandtl > 0.0):
            problems["prandtl"] = self.prandtl
        if self.pressure_path not in PRESSURE_PATHS:
            problems["pressure_path"] = self.pressure_path
        if self.linear_solver not in LINEAR_METHODS:
            problems["linear_solver"] = self.linear_solver
        if problems:
            raise ConfigError("invalid step configuration", details=problems)


@dataclass
class SourceTerms:
    rho: np.ndarray
    q: np.ndarray
    W: np.ndarray


@dataclass
class StepResult:
    state: ConservativeState
    pressure: np.ndarray
    enthalpy: np.ndarray
    dt: float
    newton_iterations: int = 0
    energy_defect: float = 0.0


def padded_primitive(fields: PaddedFields, eos: EquationOfState) -> PrimitiveState:
    return PrimitiveState(p=fields.p, h=fields.h, u=fields.u, rho=eos.density(fields.p, fields.h))


def ghosted_primitives(
    grid: StructuredGrid,
    prim: PrimitiveState,
    eos: EquationOfState,
    time: float = 0.0,
) -> List[PrimitiveState]:
    """Padded primitive fields per sweep axis, with densities at the ghosts."""

    converted: Dict[int, PrimitiveState] = {}
    out = []
    for fields in fill_ghosts(grid, prim.p, prim.h, prim.u, time):
        key = id(fields)
        if key not in converted:
            converted[key] = padded_primitive(fields, eos)
        out.append(converted[key])
    return out


# --------------------------------------------------------------------------------------
# Time step
# --------------------------------------------------------------------------------------


def compute_dt(
    grid: StructuredGrid,
    ghosts: Sequence[PrimitiveState],
    alpha: float,
    eos: EquationOfState,
    cfl: float,
    dt_max: float = 1.0,
) -> float:
    """CFL dx / max over faces of |u_n| + sqrt(alpha a_m^2)."""

    fastest = 0.0
    for axis in range(grid.dimension):
        prim = ghosts[axis]
        lam = max_wave_speed(*_face_primitives(grid, prim, axis), axis, alpha, eos)
        fastest = max(fastest, float(np.max(lam)))
    if fastest <= 0.0:
        return dt_max
    return min(cfl * grid.dx / fastest, dt_max)


def _face_primitives(grid: StructuredGrid, prim: PrimitiveState, axis: int) -> Tuple[PrimitiveState, PrimitiveState]:
    p_l, p_r = face_neighbours(grid, axis, prim.p, lead=0)
    h_l, h_r = face_neighbours(grid, axis, prim.h, lead=0)
    u_l, u_r = face_neighbours(grid, axis, prim.u, lead=1)
    r_l, r_r = face_neighbours(grid, axis, prim.rho, lead=0)
    return PrimitiveState(p_l, h_l, u_l, r_l), PrimitiveState(p_r, h_r, u_r, r_r)


# --------------------------------------------------------------------------------------
# Sources
# --------------------------------------------------------------------------------------


def _window(grid: StructuredGrid, padded: np.ndarray, offsets: Sequence[int], extend: Optional[int] = None) -> np.ndarray:
    lead = padded.ndim - grid.dimension
    key: List[slice] = [slice(None)] * lead
    for b, n in enumerate(grid.cells):
        start = NG + offsets[b]
        key.append(slice(start, start + n + (1 if b == extend else 0)))
    return padded[tuple(key)]


def _offsets(dim: int, shifts: Dict[int, int]) -> List[int]:
    out = [0] * dim
    for axis, shift in shifts.items():
        out[axis] += shift
    return out


def viscous_stress_divergence(grid: StructuredGrid, ghosts: Sequence[PrimitiveState]) -> np.ndarray:
    """div of rho((grad u + grad u^T) - 2/3 (div u) I), face based and centered."""

    dim, dx = grid.dimension, grid.dx
    out = np.zeros((dim,) + grid.shape)
    for a in range(dim):
        prim = ghosts[a]

        def face(arr: np.ndarray, side: int, shifts: Optional[Dict[int, int]] = None) -> np.ndarray:
            moves = {a: side}
            for axis, s in (shifts or {}).items():
                moves[axis] = moves.get(axis, 0) + s
            return _window(grid, arr, _offsets(dim, moves), extend=a)

        # grad[b][c] = d u_b / d x_c on the faces along a
        grad = [[None] * dim for _ in range(dim)]
        for b in range(dim):
            ub = prim.u[b]
            for c in range(dim):
                if c == a:
                    grad[b][c] = (face(ub, 0) - face(ub, -1)) / dx
                else:
                    lower = face(ub, -1, {c: 1}) - face(ub, -1, {c: -1})
                    upper = face(ub, 0, {c: 1}) - face(ub, 0, {c: -1})
                    grad[b][c] = 0.25 * (lower + upper) / dx
        divergence = sum(grad[c][c] for c in range(dim))
        rho_face = 0.5 * (face(prim.rho, -1) + face(prim.rho, 0))
        for b in range(dim):
            tau = grad[b][a] + grad[a][b]
            if b == a:
                tau = tau - (2.0 / 3.0) * divergence
            out[b] += face_divergence(grid, rho_face * tau, a)
    return out


def enthalpy_laplacian(grid: StructuredGrid, ghosts: Sequence[PrimitiveState]) -> np.ndarray:
    dim = grid.dimension
    lap = np.zeros(grid.shape)
    for a in range(dim):
        h = ghosts[a].h
        lap += (
            _window(grid, h, _offsets(dim, {a: 1}))
            - 2.0 * _window(grid, h, _offsets(dim, {}))
            + _window(grid, h, _offsets(dim, {a: -1}))
        )
    return lap / grid.dx**2


def evaluate_sources(
    grid: StructuredGrid,
    ghosts: Sequence[PrimitiveState],
    config: StepConfig,
) -> SourceTerms:
    """Explicit viscous, conduction and body-force sources at t^n."""

    interior = grid.interior
    rho = ghosts[0].rho[interior]
    u = ghosts[0].u[(slice(None),) + interior]
    sources = SourceTerms(
        rho=np.zeros(grid.shape),
        q=np.zeros((grid.dimension,) + grid.shape),
        W=np.zeros(grid.shape),
    )
    if config.viscous:
        sources.q += viscous_stress_divergence(grid, ghosts) / config.reynolds
    if config.conduction:
        sources.W += enthalpy_laplacian(grid, ghosts) / (config.reynolds * config.prandtl)
    if config.gravity:
        force = np.asarray(config.body_force[: grid.dimension], dtype=float)
        for b in range(grid.dimension):
            sources.q[b] += rho * force[b]
            sources.W += config.epsilon**2 * rho * force[b] * u[b]
    return sources


# --------------------------------------------------------------------------------------
# Steps
# --------------------------------------------------------------------------------------


@dataclass
class _Divergences:
    mass: np.ndarray
    momentum: np.ndarray
    energy: np.ndarray
    energy_dissipation: np.ndarray


def _explicit_divergences(
    grid: StructuredGrid,
    ghosts: Sequence[PrimitiveState],
    eos: EquationOfState,
    alpha: float,
    epsilon: float,
    order: int,
) -> _Divergences:
    dim = grid.dimension
    mass = np.zeros(grid.shape)
    momentum = np.zeros((dim,) + grid.shape)
    energy = np.zeros(grid.shape)
    dissipation = np.zeros(grid.shape)
    for axis in range(dim):
        prim = ghosts[axis]
        V = conservative_from_primitive(prim, eos, epsilon).stacked()
        pair = reconstruct(grid, V, axis, order, epsilon)
        cells = _face_primitives(grid, prim, axis)
        lam = max_wave_speed(*cells, axis, alpha, eos)
        if order == 1:
            flux = explicit_face_flux(pair, axis, alpha, lam, epsilon, eos, left_prim=cells[0], right_prim=cells[1])
        else:
            flux = explicit_face_flux(pair, axis, alpha, lam, epsilon, eos)
        walls = grid.wall_faces(axis)
        flux.mass[walls] = 0.0
        flux.energy[walls] = 0.0
        d_w = flux.dissipation[-1].copy()
        d_w[walls] = 0.0
        mass += face_divergence(grid, flux.mass, axis)
        momentum += face_divergence(grid, flux.momentum, axis)
        energy += face_divergence(grid, flux.energy, axis)
        dissipation += face_divergence(grid, d_w, axis)
    return _Divergences(mass=mass, momentum=momentum, energy=energy, energy_dissipation=dissipation)


def _finish(grid: StructuredGrid, previous: ConservativeState, new: ConservativeState, epsilon: float) -> ConservativeState:
    if grid.mask is not None:
        solid = grid.mask
        new.rho[solid] = previous.rho[solid]
        new.q[:, solid] = previous.q[:, solid]
        new.W[solid] = previous.W[solid]
    check_admissible(new, epsilon, grid.mask)
    return new


def uses_newton(config: StepConfig, eos: EquationOfState) -> bool:
    if config.pressure_path == "newton":
        return True
    if config.pressure_path == "linear":
        if not isinstance(eos, PerfectGas):
            raise ConfigError("the linear pressure path needs a perfect gas")
        return False
    return not isinstance(eos, PerfectGas)


def ap_step(
    state: ConservativeState,
    grid: StructuredGrid,
    config: StepConfig,
    eos: EquationOfState,
    dt: float,
    *,
    time: float = 0.0,
    ops: Optional[PressureOperators] = None,
    prim: Optional[PrimitiveState] = None,
    dump_path: Optional[Path] = None,
) -> StepResult:
    """One asymptotic-preserving step.

    Explicit mass update, implicit pressure (linear for a perfect gas, Newton
    otherwise), momentum closure with the centered implicit pressure, energy
    closure with the explicit kinetic energy rho^n |u^n|^2.
    """

    eps, alpha = config.epsilon, config.alpha
    eps2 = eps * eps
    ops = ops or PressureOperators(grid)
    prim = prim or primitive_from_conservative(state, eos, eps)
    ghosts = ghosted_primitives(grid, prim, eos, time)

    div = _explicit_divergences(grid, ghosts, eos, alpha, eps, config.order)
    sources = evaluate_sources(grid, ghosts, config)

    rho_new_full = state.rho - dt * div.mass + dt * sources.rho
    q_star_full = state.q - dt * div.momentum + dt * sources.q

    rho_new = ops.unknowns(rho_new_full)
    if np.any(~(rho_new > 0.0)):
        bad = np.zeros(grid.shape, dtype=bool)
        bad[~grid.solid] = ~(rho_new > 0.0)
        cell = tuple(int(i) for i in np.argwhere(bad)[0])
        raise PositivityError(f"non-positive density in cell {cell}", details={"cell": cell})

    H = ops.unknowns(prim.total_enthalpy(eps))
    boundary = ops.boundary_values(ghosts, eps)
    q_star = ops.unknowns(q_star_full)
    dissipation = ops.unknowns(div.energy_dissipation)
    source_W = ops.unknowns(sources.W)
    phi = assemble_rhs_phi(ops, state, H, q_star, dissipation, source_W, dt, eps, boundary)

    newton_iterations = 0
    if uses_newton(config, eos):
        system = assemble_elliptic(ops, H, dt, alpha, eps, phi, boundary)
        if dump_path is not None:
            dump_triplets(system, dump_path)
        workspace = NewtonWorkspace(
            p=ops.unknowns(prim.p),
            h=ops.unknowns(prim.h),
            tol=config.newton_tol,
            max_iter=config.newton_max_iter,
        )
        p, h = newton_solve(workspace, system, rho_new, eos, linear_method=config.linear_solver, linear_tol=config.linear_tol)
        newton_iterations = workspace.iterations
    else:
        system = assemble_elliptic(ops, H, dt, alpha, eps, phi, boundary, gamma=eos.gamma)
        if dump_path is not None:
            dump_triplets(system, dump_path)
        p = solve_linear(system, config.linear_solver, config.linear_tol)
        if np.any(~(p > 0.0)):
            raise PositivityError("non-positive pressure after the implicit solve", details={"min": float(np.min(p))})
        h = eos.enthalpy_from_density(p, rho_new)

    coupling = (1.0 - alpha * eps2) / eps2
    q_new = np.empty_like(q_star)
    for axis in range(grid.dimension):
        q_new[axis] = q_star[axis] - dt * coupling * ops.apply_gradient(axis, p, boundary[axis])

    rho_n = ops.unknowns(state.rho)
    q_n = ops.unknowns(state.q)
    kinetic = 0.5 * eps2 * np.sum(q_n * q_n, axis=0) / rho_n
    W_new = rho_new * h - p + kinetic

    # energy equation rebuilt from the returned momentum
    W_flux = ops.unknowns(state.W) - dt * dissipation + dt * source_W
    for axis in range(grid.dimension):
        W_flux = W_flux - dt * ops.apply_divergence(axis, H * q_new[axis], boundary[axis])
    energy_defect = float(np.max(np.abs(W_flux - W_new)))

    new = ConservativeState(
        rho=ops.scatter(rho_new, state.rho),
        q=np.stack([ops.scatter(q_new[b], state.q[b]) for b in range(grid.dimension)]),
        W=ops.scatter(W_new, state.W),
    )
    new = _finish(grid, state, new, eps)
    logger.debug(f"AP step dt={dt:.4e} newton={newton_iterations} energy_defect={energy_defect:.2e}")
    return StepResult(
        state=new,
        pressure=ops.scatter(p, prim.p),
        enthalpy=ops.scatter(h, prim.h),
        dt=dt,
        newton_iterations=newton_iterations,
        energy_defect=energy_defect,
    )


def explicit_baseline_step(
    state: ConservativeState,
    grid: StructuredGrid,
    config: StepConfig,
    eos: EquationOfState,
    dt: float,
    *,
    time: float = 0.0,
    prim: Optional[PrimitiveState] = None,
) -> StepResult:
    """Fully explicit Rusanov update with the full pressure and acoustic dissipation."""

    eps = config.epsilon
    acoustic = 1.0 / (eps * eps)
    prim = prim or primitive_from_conservative(state, eos, eps)
    ghosts = ghosted_primitives(grid, prim, eos, time)
    div = _explicit_divergences(grid, ghosts, eos, acoustic, eps, config.order)
    sources = evaluate_sources(grid, ghosts, config)
    new = ConservativeState(
        rho=state.rho - dt * div.mass + dt * sources.rho,
        q=state.q - dt * div.momentum + dt * sources.q,
        W=state.W - dt * div.energy + dt * sources.W,
    )
    new = _finish(grid, state, new, eps)
    after = primitive_from_conservative(new, eos, eps, p_guess=prim.p)
    return StepResult(state=new, pressure=after.p, enthalpy=after.h, dt=dt)


def acoustic_dt(grid: StructuredGrid, ghosts: Sequence[PrimitiveState], eos: EquationOfState, config: StepConfig) -> float:
    """Time step allowed by the explicit scheme: eigenvalues |u| + a / eps."""

    return compute_dt(grid, ghosts, 1.0 / config.epsilon**2, eos, config.cfl, config.dt_max)
