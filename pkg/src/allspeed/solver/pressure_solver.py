"""Implicit pressure system: assembly, linear solves and the Newton coupling.

Unknowns are the fluid cells in C order. The energy face flux is
(H_i q_i^{n+1} + H_v q_v^{n+1}) / 2 with q^{n+1} carrying the centered cell
gradient (p_{i+1} - p_{i-1}) / (2 dx); substituting one into the other gives
``K = sum_a C_a diag(H) G_a`` where ``C_a`` and ``G_a`` are the same centered
difference, closed at boundaries by the ghost rules of the grid.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..exceptions import EosDomainError, LinearSolverError, NewtonConvergenceError, SolverError
from .eos import EquationOfState
from .mesh import AxisClosure, StructuredGrid
from .state import ConservativeState, PrimitiveState

logger = logging.getLogger(__name__)

DENSE_LIMIT = 64 * 64
REFINEMENT_PASSES = 3
LINEAR_METHODS = ("direct", "bicgstab", "gmres", "dense")


@dataclass
class SparseSystem:
    """ε²-scaled operator and right-hand side; ``normalized()`` divides by ``scale``."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    scale: float = 1.0
    mode: str = "perfect_gas"

    def normalized(self) -> Tuple[sp.csr_matrix, np.ndarray]:
        return (self.matrix / self.scale).tocsr(), self.rhs / self.scale

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass
class BoundaryValues:
    """Ghost pressures and ghost H q_a picked at the missing neighbours of one axis."""

    p_plus: np.ndarray
    p_minus: np.ndarray
    hq_plus: np.ndarray
    hq_minus: np.ndarray


@dataclass
class NewtonWorkspace:
    p: np.ndarray
    h: np.ndarray
    tol: float = 1e-10
    max_iter: int = 50
    iterations: int = 0
    residuals: List[float] = field(default_factory=list)


class PressureOperators:
    """Sparse centered-difference operators of a grid, built once and reused."""

    def __init__(self, grid: StructuredGrid) -> None:
        self.grid = grid
        self.size = grid.n_unknowns
        self.closures: List[AxisClosure] = [grid.closure(a) for a in range(grid.dimension)]
        self.gradient = [self._centered(c, c.plus_p_coef, c.minus_p_coef) for c in self.closures]
        self.divergence = [self._centered(c, c.plus_flux_sign, c.minus_flux_sign) for c in self.closures]
        self.identity = sp.identity(self.size, format="csr")

    def _centered(self, closure: AxisClosure, plus_own: np.ndarray, minus_own: np.ndarray) -> sp.csr_matrix:
        half = 0.5 / self.grid.dx
        rows = np.arange(self.size)
        has_plus = closure.plus >= 0
        has_minus = closure.minus >= 0
        row = np.concatenate([rows[has_plus], rows[~has_plus], rows[has_minus], rows[~has_minus]])
        col = np.concatenate([closure.plus[has_plus], rows[~has_plus], closure.minus[has_minus], rows[~has_minus]])
        val = np.concatenate([
            np.full(int(has_plus.sum()), half),
            half * plus_own[~has_plus],
            np.full(int(has_minus.sum()), -half),
            -half * minus_own[~has_minus],
        ])
        return sp.coo_matrix((val, (row, col)), shape=(self.size, self.size)).tocsr()

    def unknowns(self, values: np.ndarray) -> np.ndarray:
        """Restrict a cell field (optionally with leading components) to fluid cells."""
        fluid = ~self.grid.solid
        if values.ndim == self.grid.dimension:
            return values[fluid]
        return values[:, fluid]

    def scatter(self, vector: np.ndarray, fill: np.ndarray) -> np.ndarray:
        out = fill.copy()
        out[~self.grid.solid] = vector
        return out

    def boundary_values(self, ghosts: Sequence[PrimitiveState], epsilon: float) -> List[BoundaryValues]:
        values = []
        for axis, closure in enumerate(self.closures):
            prim = ghosts[axis]
            p_flat = prim.p.ravel()
            hq_flat = (prim.total_enthalpy(epsilon) * prim.rho * prim.u[axis]).ravel()

            def pick(flat: np.ndarray, ghost: np.ndarray) -> np.ndarray:
                out = np.zeros(ghost.shape)
                missing = ghost >= 0
                out[missing] = flat[ghost[missing]]
                return out

            values.append(
                BoundaryValues(
                    p_plus=pick(p_flat, closure.plus_ghost),
                    p_minus=pick(p_flat, closure.minus_ghost),
                    hq_plus=pick(hq_flat, closure.plus_ghost),
                    hq_minus=pick(hq_flat, closure.minus_ghost),
                )
            )
        return values

    def gradient_offset(self, axis: int, bv: BoundaryValues) -> np.ndarray:
        c = self.closures[axis]
        half = 0.5 / self.grid.dx
        plus = np.where(c.plus < 0, (1.0 - c.plus_p_coef) * bv.p_plus, 0.0)
        minus = np.where(c.minus < 0, (1.0 - c.minus_p_coef) * bv.p_minus, 0.0)
        return half * (plus - minus)

    def divergence_offset(self, axis: int, bv: BoundaryValues) -> np.ndarray:
        c = self.closures[axis]
        half = 0.5 / self.grid.dx
        plus = np.where(c.plus < 0, (1.0 - np.abs(c.plus_flux_sign)) * bv.hq_plus, 0.0)
        minus = np.where(c.minus < 0, (1.0 - np.abs(c.minus_flux_sign)) * bv.hq_minus, 0.0)
        return half * (plus - minus)

    def apply_gradient(self, axis: int, p: np.ndarray, bv: BoundaryValues) -> np.ndarray:
        return self.gradient[axis] @ p + self.gradient_offset(axis, bv)

    def apply_divergence(self, axis: int, hq: np.ndarray, bv: BoundaryValues) -> np.ndarray:
        return self.divergence[axis] @ hq + self.divergence_offset(axis, bv)

    def elliptic(self, H: np.ndarray) -> sp.csr_matrix:
        """K = sum_a C_a diag(H) G_a."""
        weight = sp.diags(H)
        K = None
        for C, G in zip(self.divergence, self.gradient):
            term = C @ weight @ G
            K = term if K is None else K + term
        return K.tocsr()

    def elliptic_offset(self, H: np.ndarray, boundary: Sequence[BoundaryValues]) -> np.ndarray:
        k0 = np.zeros(self.size)
        for axis, C in enumerate(self.divergence):
            k0 += C @ (H * self.gradient_offset(axis, boundary[axis]))
        return k0


# --------------------------------------------------------------------------------------
# Assembly
# --------------------------------------------------------------------------------------


def assemble_rhs_phi(
    ops: PressureOperators,
    state: ConservativeState,
    H: np.ndarray,
    predicted_momentum: np.ndarray,
    energy_dissipation: np.ndarray,
    source_W: np.ndarray,
    dt: float,
    epsilon: float,
    boundary: Sequence[BoundaryValues],
) -> np.ndarray:
    """Per-unknown explicit part of the energy equation.

    ``predicted_momentum`` is q^n - dt div(beta) + dt S_q on the unknowns,
    ``energy_dissipation`` the divergence of D_W and ``H`` the cell total
    enthalpy at t^n.
    """

    rho = ops.unknowns(state.rho)
    q = ops.unknowns(state.q)
    W = ops.unknowns(state.W)
    phi = W - 0.5 * epsilon**2 * np.sum(q * q, axis=0) / rho
    for axis in range(ops.grid.dimension):
        phi = phi - dt * ops.apply_divergence(axis, H * predicted_momentum[axis], boundary[axis])
    return phi - dt * energy_dissipation + dt * source_W


def assemble_elliptic(
    ops: PressureOperators,
    H: np.ndarray,
    dt: float,
    alpha: float,
    epsilon: float,
    phi: np.ndarray,
    boundary: Sequence[BoundaryValues],
    gamma: Optional[float] = None,
) -> SparseSystem:
    """Assemble the ε²-scaled pressure system.

    With ``gamma`` given (perfect gas) the result is
    ``eps^2 p - (gamma-1) dt^2 (1 - alpha eps^2) K p = (gamma-1)(eps^2 phi + ...)``;
    otherwise the elliptic part ``-dt^2 (1 - alpha eps^2) K`` entering the Newton
    residual together with its right-hand side.
    """

    if np.any(~(H > 0.0)):
        index = int(np.flatnonzero(~(H > 0.0))[0])
        raise SolverError("non-positive total enthalpy in the pressure operator", details={"unknown": index})
    eps2 = epsilon**2
    coupling = dt * dt * (1.0 - alpha * eps2)
    elliptic = (-coupling) * ops.elliptic(H)
    rhs = eps2 * phi + coupling * ops.elliptic_offset(H, boundary)
    if gamma is None:
        return SparseSystem(matrix=elliptic.tocsr(), rhs=rhs, scale=eps2, mode="general")
    matrix = eps2 * ops.identity + (gamma - 1.0) * elliptic
    return SparseSystem(matrix=matrix.tocsr(), rhs=(gamma - 1.0) * rhs, scale=eps2, mode="perfect_gas")


# --------------------------------------------------------------------------------------
# Linear solves
# --------------------------------------------------------------------------------------


def _relative_residual(A: sp.spmatrix, x: np.ndarray, b: np.ndarray) -> float:
    norm_b = np.linalg.norm(b)
    return float(np.linalg.norm(A @ x - b) / (norm_b if norm_b > 0.0 else 1.0))


def _backward_error(A: sp.spmatrix, x: np.ndarray, b: np.ndarray) -> float:
    """Normwise backward error ||Ax - b|| / (||A|| ||x|| + ||b||) in the max norm."""
    scale = spla.norm(A, np.inf) * np.linalg.norm(x, np.inf) + np.linalg.norm(b, np.inf)
    return float(np.linalg.norm(A @ x - b, np.inf) / scale)


def solve_linear(
    system: SparseSystem,
    method: str = "direct",
    tol: float = 1e-10,
    x0: Optional[np.ndarray] = None,
    maxiter: Optional[int] = None,
) -> np.ndarray:
    """Solve ``matrix x = rhs`` to a relative residual of ``tol``."""

    A, b = system.matrix, system.rhs
    if not np.any(b):
        return np.zeros_like(b)

    if method == "dense":
        if system.size > DENSE_LIMIT:
            raise LinearSolverError(
                "dense fallback is limited to small systems",
                details={"size": system.size, "limit": DENSE_LIMIT},
            )
        try:
            x = np.linalg.solve(A.toarray(), b)
        except np.linalg.LinAlgError as exc:
            raise LinearSolverError("dense solve failed: singular matrix") from exc
    elif method == "direct":
        try:
            lu = spla.splu(A.tocsc())
        except RuntimeError as exc:
            raise LinearSolverError("sparse LU factorization failed") from exc
        x = lu.solve(b)
        for _ in range(REFINEMENT_PASSES):
            if _relative_residual(A, x, b) <= tol:
                break
            x = x + lu.solve(b - A @ x)
    elif method in ("bicgstab", "gmres"):
        try:
            ilu = spla.spilu(A.tocsc(), drop_tol=1e-6, fill_factor=20)
        except RuntimeError as exc:
            raise LinearSolverError("incomplete LU preconditioner failed") from exc
        M = spla.LinearOperator(A.shape, ilu.solve)
        krylov = spla.bicgstab if method == "bicgstab" else spla.gmres
        x, info = krylov(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter or 10 * system.size, M=M)
        if info > 0:
            raise LinearSolverError(f"{method} hit its iteration limit", details={"iterations": info})
        if info < 0:
            raise LinearSolverError(f"{method} broke down", details={"info": info})
    else:
        raise LinearSolverError(f"unknown linear solver '{method}'", details={"choices": list(LINEAR_METHODS)})

    residual = _relative_residual(A, x, b)
    logger.debug(f"Linear solve ({method}, n={system.size}) relative residual {residual:.3e}")
    if residual <= tol:
        return x
    # a direct solve may stop at the rounding floor of evaluating A x
    backward = _backward_error(A, x, b) if method in ("direct", "dense") else float("nan")
    if not backward <= system.size * np.finfo(float).eps:
        raise LinearSolverError(
            f"{method} residual above tolerance",
            details={"method": method, "residual": residual, "tol": tol, "backward_error": backward},
        )
    logger.debug(f"Linear solve ({method}) at rounding floor, backward error {backward:.3e}")
    return x


# --------------------------------------------------------------------------------------
# Newton coupling for a general equation of state
# --------------------------------------------------------------------------------------


def newton_residual(
    system: SparseSystem,
    p: np.ndarray,
    h: np.ndarray,
    rho_new: np.ndarray,
    eos: EquationOfState,
) -> Tuple[np.ndarray, np.ndarray]:
    """Return (eps^2 f1, f2) with f2 = rho^{n+1} - rho(p, h)."""

    eps2 = system.scale
    f1 = eps2 * (rho_new * h - p) + system.matrix @ p - system.rhs
    f2 = rho_new - eos.density(p, h)
    return f1, f2


def newton_solve(
    workspace: NewtonWorkspace,
    system: SparseSystem,
    rho_new: np.ndarray,
    eos: EquationOfState,
    *,
    linear_method: str = "direct",
    linear_tol: float = 1e-10,
) -> Tuple[np.ndarray, np.ndarray]:
    """Newton iteration on (p, h) starting from the workspace iterate.

    Each iteration eliminates dh cell by cell and solves one sparse system in
    dp. The elliptic coefficients stay frozen at t^n.
    """

    eps2 = system.scale
    p = workspace.p.astype(float, copy=True)
    h = workspace.h.astype(float, copy=True)
    workspace.residuals.clear()
    previous = np.inf
    for iteration in range(workspace.max_iter + 1):
        f1, f2 = newton_residual(system, p, h, rho_new, eos)
        norm = float(max(np.max(np.abs(f1)), np.max(np.abs(f2))))
        workspace.residuals.append(norm)
        logger.debug(f"Newton iteration {iteration}: |f|_inf = {norm:.3e}")
        if norm <= workspace.tol:
            workspace.p, workspace.h, workspace.iterations = p, h, iteration
            return p, h
        if iteration == workspace.max_iter:
            break
        if norm > previous:
            raise NewtonConvergenceError(
                "Newton residual increased",
                details={"iteration": iteration, "residuals": list(workspace.residuals)},
            )
        previous = norm

        d_p = eos.d_density_dp(p, h)
        d_h = eos.d_density_dh(p, h)
        if np.any(d_h == 0.0):
            raise EosDomainError("singular Jacobian block: drho/dh vanishes", details={"unknown": int(np.argmin(np.abs(d_h)))})
        diagonal = eps2 * (-1.0 - rho_new * d_p / d_h)
        reduced = SparseSystem(
            matrix=(sp.diags(diagonal) + system.matrix).tocsr(),
            rhs=-f1 - eps2 * rho_new * f2 / d_h,
            scale=eps2,
            mode="newton",
        )
        delta_p = solve_linear(reduced, linear_method, linear_tol)
        delta_h = (f2 - d_p * delta_p) / d_h
        p = p + delta_p
        h = h + delta_h

    raise NewtonConvergenceError(
        f"Newton did not converge in {workspace.max_iter} iterations",
        details={"residuals": list(workspace.residuals), "tol": workspace.tol},
    )


def dump_triplets(system: SparseSystem, path: Path) -> Path:
    """Write the normalized matrix as 0-based ``row col value`` lines, rhs alongside."""

    matrix, rhs = system.normalized()
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            handle.write(f"{int(r)} {int(c)} {v:.17g}\n")
    rhs_path = path.with_name(path.stem + "_rhs" + path.suffix)
    np.savetxt(rhs_path, rhs, fmt="%.17g")
    logger.info(f"Dumped pressure system ({system.size} unknowns) to {path}")
    return path
