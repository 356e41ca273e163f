import numpy as np
import pytest
import scipy.sparse as sp

from allspeed.exceptions import LinearSolverError
from allspeed.solver.eos import PerfectGas, as_general
from allspeed.solver.mesh import BoundaryCondition, BoundaryKind, build_grid, grid_config_from_mapping
from allspeed.solver.pressure_solver import (
    BoundaryValues,
    NewtonWorkspace,
    PressureOperators,
    SparseSystem,
    assemble_elliptic,
    assemble_rhs_phi,
    dump_triplets,
    newton_solve,
    solve_linear,
)
from allspeed.solver.state import ConservativeState


def periodic_ops(cells):
    sides = ("xmin", "xmax", "ymin", "ymax")[: 2 * len(cells)]
    boundaries = {side: BoundaryCondition(BoundaryKind.PERIODIC) for side in sides}
    grid = build_grid(grid_config_from_mapping(cells, [0.0] * len(cells), [1.0] * len(cells), boundaries))
    return PressureOperators(grid)


def zero_boundary(ops):
    zeros = np.zeros(ops.size)
    return [BoundaryValues(zeros, zeros, zeros, zeros) for _ in range(ops.grid.dimension)]


def test_three_cell_periodic_row() -> None:
    ops = periodic_ops([3])
    dx = ops.grid.dx
    dt, eps, gamma = 0.1, 0.5, 1.4
    system = assemble_elliptic(ops, np.ones(3), dt, 0.0, eps, np.zeros(3), zero_boundary(ops), gamma=gamma)
    matrix, _ = system.normalized()
    c = (gamma - 1.0) * dt**2 / eps**2
    np.testing.assert_allclose(
        matrix.toarray()[0],
        [1.0 + c / (2.0 * dx**2), -c / (4.0 * dx**2), -c / (4.0 * dx**2)],
        rtol=1e-13,
    )


@pytest.mark.parametrize("cells", [[8], [4, 4], [6, 6]])
def test_periodic_operator_is_a_symmetric_m_matrix(cells) -> None:
    ops = periodic_ops(cells)
    rng = np.random.default_rng(7)
    H = 1.0 + rng.random(ops.size)
    K = ops.elliptic(H)
    np.testing.assert_allclose(K @ np.ones(ops.size), 0.0, atol=1e-9)
    system = assemble_elliptic(ops, H, 0.01, 0.0, 0.1, np.zeros(ops.size), zero_boundary(ops), gamma=1.4)
    matrix = system.normalized()[0].toarray()
    np.testing.assert_allclose(matrix, matrix.T, atol=1e-12)
    np.testing.assert_allclose(matrix.sum(axis=1), 1.0, rtol=1e-12)
    off = matrix - np.diag(np.diag(matrix))
    assert np.all(off <= 1e-15)
    assert np.all(np.diag(matrix) >= 1.0)


def test_rhs_phi_is_internal_energy_for_fluid_at_rest() -> None:
    ops = periodic_ops([4])
    state = ConservativeState(rho=np.ones(4), q=np.zeros((1, 4)), W=np.array([2.5, 2.0, 1.5, 1.0]))
    phi = assemble_rhs_phi(
        ops, state, np.full(4, 3.5), np.zeros((1, 4)), np.zeros(4), np.zeros(4), 0.1, 1.0, zero_boundary(ops)
    )
    np.testing.assert_allclose(phi, state.W)


def random_system(n: int = 50) -> SparseSystem:
    rng = np.random.default_rng(3)
    lap = sp.diags([-np.ones(n - 1), 4.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])
    return SparseSystem(matrix=(lap + sp.diags(rng.random(n))).tocsr(), rhs=rng.random(n))


@pytest.mark.parametrize("method", ["bicgstab", "gmres", "dense"])
def test_linear_methods_agree_with_direct(method: str) -> None:
    system = random_system()
    reference = solve_linear(system, "direct", 1e-12)
    np.testing.assert_allclose(solve_linear(system, method, 1e-12), reference, rtol=1e-9)


def test_zero_rhs_short_circuits() -> None:
    system = random_system()
    system.rhs[:] = 0.0
    np.testing.assert_array_equal(solve_linear(system), 0.0)


def test_dense_solver_refuses_large_systems() -> None:
    n = 65 * 65
    system = SparseSystem(matrix=sp.identity(n, format="csr"), rhs=np.ones(n))
    with pytest.raises(LinearSolverError):
        solve_linear(system, "dense")


@pytest.mark.parametrize("method", ["direct", "dense"])
def test_direct_solvers_raise_on_nearly_singular_systems(method: str) -> None:
    # a pivot of 1e-300 makes the solution overflow
    system = SparseSystem(matrix=sp.diags([1.0, 2.0, 1e-300]).tocsr(), rhs=np.array([1.0, 1.0, 1e10]))
    with np.errstate(all="ignore"), pytest.raises(LinearSolverError) as info:
        solve_linear(system, method, tol=1e-10)
    assert not info.value.details["residual"] <= 1e-10
    assert info.value.details["method"] == method


def test_unknown_linear_method() -> None:
    with pytest.raises(LinearSolverError):
        solve_linear(random_system(), "jacobi")


def test_newton_matches_the_linear_perfect_gas_path() -> None:
    ops = periodic_ops([16])
    x = ops.grid.centers(0)
    gamma = 1.4
    eps = 0.5
    H = 3.5 + 0.2 * np.sin(2 * np.pi * x)
    phi = 2.5 * (1.0 + 0.1 * np.cos(2 * np.pi * x))
    rho_new = 1.0 + 0.05 * np.sin(2 * np.pi * x)
    boundary = zero_boundary(ops)

    linear = assemble_elliptic(ops, H, 0.01, 0.0, eps, phi, boundary, gamma=gamma)
    p_linear = solve_linear(linear, "direct", 1e-13)

    eos = as_general(PerfectGas(gamma))
    general = assemble_elliptic(ops, H, 0.01, 0.0, eps, phi, boundary)
    p0 = (gamma - 1.0) * phi
    workspace = NewtonWorkspace(p=p0, h=3.5 * p0 / rho_new, tol=1e-12)
    p_newton, h_newton = newton_solve(workspace, general, rho_new, eos, linear_tol=1e-13)

    np.testing.assert_allclose(p_newton, p_linear, rtol=1e-8)
    np.testing.assert_allclose(h_newton, 3.5 * p_newton / rho_new, rtol=1e-8)
    assert workspace.iterations <= 5


def test_dump_triplets(tmp_path) -> None:
    system = SparseSystem(matrix=sp.csr_matrix(np.array([[2.0, -1.0], [0.0, 4.0]])), rhs=np.array([1.0, 2.0]), scale=2.0)
    path = dump_triplets(system, tmp_path / "system.txt")
    lines = path.read_text().splitlines()
    assert lines == ["0 0 1", "0 1 -0.5", "1 1 2"]
    np.testing.assert_allclose(np.loadtxt(tmp_path / "system_rhs.txt"), [0.5, 1.0])
