from typing import Dict, Sequence

import numpy as np
import pytest

from allspeed.exceptions import ConfigError
from allspeed.solver.mesh import (
    NG,
    BoundaryCondition,
    BoundaryKind,
    StructuredGrid,
    build_grid,
    fill_ghosts,
    grid_config_from_mapping,
    interior_view,
)


def make_grid(
    cells: Sequence[int],
    lower: Sequence[float],
    upper: Sequence[float],
    boundaries: Dict[str, BoundaryCondition],
    mask_boxes=(),
) -> StructuredGrid:
    return build_grid(grid_config_from_mapping(cells, lower, upper, boundaries, mask_boxes))


def tags(**kinds: BoundaryKind) -> Dict[str, BoundaryCondition]:
    return {side: BoundaryCondition(kind) for side, kind in kinds.items()}


PERIODIC_1D = tags(xmin=BoundaryKind.PERIODIC, xmax=BoundaryKind.PERIODIC)
NEUMANN_1D = tags(xmin=BoundaryKind.NEUMANN, xmax=BoundaryKind.NEUMANN)


def fields_1d(n: int):
    p = np.arange(1.0, n + 1.0)
    h = 10.0 + p
    u = (100.0 + p)[None]
    return p, h, u


def test_build_1d_grid() -> None:
    grid = make_grid([100], [0.0], [1.0], NEUMANN_1D)
    assert grid.dx == pytest.approx(0.01)
    assert grid.padded_shape == (100 + 2 * NG,)
    assert grid.centers(0)[0] == pytest.approx(0.005)
    assert grid.n_unknowns == 100


@pytest.mark.parametrize(
    "cells,lower,upper,boundaries",
    [
        ([1], [0.0], [1.0], NEUMANN_1D),
        ([10], [1.0], [0.0], NEUMANN_1D),
        ([10, 10], [0.0, 0.0], [1.0, 2.0], {**NEUMANN_1D, **tags(ymin=BoundaryKind.NEUMANN, ymax=BoundaryKind.NEUMANN)}),
        ([10], [0.0], [1.0], tags(xmin=BoundaryKind.PERIODIC, xmax=BoundaryKind.NEUMANN)),
        ([10], [0.0], [1.0], tags(xmin=BoundaryKind.INLET, xmax=BoundaryKind.NEUMANN)),
        ([10], [0.0], [1.0], tags(xmin=BoundaryKind.NEUMANN, xmax=BoundaryKind.OUTLET)),
        ([10], [0.0], [1.0], {"xmin": BoundaryCondition(BoundaryKind.NEUMANN)}),
    ],
)
def test_invalid_grids_are_rejected(cells, lower, upper, boundaries) -> None:
    with pytest.raises(ConfigError):
        make_grid(cells, lower, upper, boundaries)


def test_periodic_ghosts_wrap() -> None:
    grid = make_grid([5], [0.0], [1.0], PERIODIC_1D)
    p, h, u = fields_1d(5)
    padded = fill_ghosts(grid, p, h, u)[0]
    np.testing.assert_array_equal(padded.p, [4.0, 5.0, 1.0, 2.0, 3.0, 4.0, 5.0, 1.0, 2.0])
    np.testing.assert_array_equal(padded.u[0][:2], [104.0, 105.0])


def test_neumann_ghosts_mirror_by_index() -> None:
    grid = make_grid([5], [0.0], [1.0], NEUMANN_1D)
    p, h, u = fields_1d(5)
    padded = fill_ghosts(grid, p, h, u)[0]
    np.testing.assert_array_equal(padded.p, [2.0, 1.0, 1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 4.0])


def test_ghost_fill_is_idempotent() -> None:
    grid = make_grid([6], [0.0], [1.0], tags(xmin=BoundaryKind.SLIP_WALL, xmax=BoundaryKind.NEUMANN))
    p, h, u = fields_1d(6)
    first = fill_ghosts(grid, p, h, u)[0]
    second = fill_ghosts(
        grid,
        interior_view(grid, first.p),
        interior_view(grid, first.h),
        interior_view(grid, first.u, vector=True),
    )[0]
    np.testing.assert_array_equal(first.p, second.p)
    np.testing.assert_array_equal(first.h, second.h)
    np.testing.assert_array_equal(first.u, second.u)


def test_wall_negates_normal_velocity() -> None:
    grid = make_grid([4], [0.0], [1.0], tags(xmin=BoundaryKind.SLIP_WALL, xmax=BoundaryKind.SLIP_WALL))
    p, h, u = fields_1d(4)
    padded = fill_ghosts(grid, p, h, u)[0]
    assert padded.u[0][NG - 1] == -u[0][0]
    assert padded.u[0][NG + 4] == -u[0][3]
    assert padded.p[NG - 1] == p[0]


def test_isothermal_wall_and_outlet_ghosts() -> None:
    boundaries = {
        "xmin": BoundaryCondition(BoundaryKind.ISOTHERMAL_WALL, enthalpy=3.0),
        "xmax": BoundaryCondition(BoundaryKind.OUTLET, pressure=0.5),
    }
    grid = make_grid([4], [0.0], [1.0], boundaries)
    p, h, u = fields_1d(4)
    padded = fill_ghosts(grid, p, h, u)[0]
    assert padded.h[NG - 1] == pytest.approx(2.0 * 3.0 - h[0])
    assert padded.h[NG - 2] == pytest.approx(2.0 * 3.0 - h[1])
    np.testing.assert_array_equal(padded.p[NG + 4:], [0.5, 0.5])


def test_inlet_imposes_velocity_and_enthalpy() -> None:
    boundaries = {
        "xmin": BoundaryCondition(BoundaryKind.INLET, velocity=(2.0,), enthalpy=7.0),
        "xmax": BoundaryCondition(BoundaryKind.NEUMANN),
    }
    grid = make_grid([4], [0.0], [1.0], boundaries)
    p, h, u = fields_1d(4)
    padded = fill_ghosts(grid, p, h, u)[0]
    np.testing.assert_array_equal(padded.u[0][:NG], [2.0, 2.0])
    np.testing.assert_array_equal(padded.h[:NG], [7.0, 7.0])


def test_moving_wall_ramp() -> None:
    lid = BoundaryCondition(BoundaryKind.SLIP_WALL, wall_speed=1.0, ramp_time=2.0)
    assert lid.wall_velocity(0.0) == 0.0
    assert lid.wall_velocity(1.0) == pytest.approx(0.5)
    assert lid.wall_velocity(5.0) == pytest.approx(1.0)
    boundaries = {
        **tags(xmin=BoundaryKind.SLIP_WALL, xmax=BoundaryKind.SLIP_WALL, ymin=BoundaryKind.SLIP_WALL),
        "ymax": lid,
    }
    grid = make_grid([4, 4], [0.0, 0.0], [1.0, 1.0], boundaries)
    p = np.ones((4, 4))
    u = np.zeros((2, 4, 4))
    padded = fill_ghosts(grid, p, 3.5 * p, u, time=1.0)[0]
    np.testing.assert_allclose(padded.u[0][NG:NG + 4, NG + 4], 1.0)


def test_mask_cells_mirror_fluid_per_sweep() -> None:
    boundaries = tags(
        xmin=BoundaryKind.SLIP_WALL, xmax=BoundaryKind.NEUMANN, ymin=BoundaryKind.SLIP_WALL, ymax=BoundaryKind.SLIP_WALL
    )
    grid = make_grid([8, 4], [0.0, 0.0], [8.0, 4.0], boundaries, [((0.0, 0.0), (2.0, 2.0))])
    assert grid.mask is not None and int(grid.mask.sum()) == 4
    p = np.arange(32.0).reshape(8, 4) + 1.0
    u = np.stack([p, -p])
    sweeps = fill_ghosts(grid, p, 3.5 * np.ones_like(p), u)
    along_x, along_y = sweeps
    assert along_x.p[NG + 1, NG] == p[2, 0]
    assert along_x.p[NG + 0, NG] == p[3, 0]
    assert along_x.u[0][NG + 1, NG] == -u[0][2, 0]
    assert along_x.u[1][NG + 1, NG] == u[1][2, 0]
    assert along_y.p[NG, NG + 1] == p[0, 2]
    assert along_y.u[1][NG, NG + 1] == -u[1][0, 2]


def test_thin_solid_runs_are_rejected() -> None:
    boundaries = tags(
        xmin=BoundaryKind.SLIP_WALL, xmax=BoundaryKind.NEUMANN, ymin=BoundaryKind.SLIP_WALL, ymax=BoundaryKind.SLIP_WALL
    )
    with pytest.raises(ConfigError):
        make_grid([8, 4], [0.0, 0.0], [8.0, 4.0], boundaries, [((3.0, 0.0), (4.0, 4.0))])


def test_wall_faces_flag_domain_walls_and_mask_edges() -> None:
    grid = make_grid([4], [0.0], [1.0], tags(xmin=BoundaryKind.SLIP_WALL, xmax=BoundaryKind.NEUMANN))
    np.testing.assert_array_equal(grid.wall_faces(0), [True, False, False, False, False])


def test_periodic_closure_neighbours() -> None:
    grid = make_grid([3], [0.0], [1.0], PERIODIC_1D)
    closure = grid.closure(0)
    np.testing.assert_array_equal(closure.plus, [1, 2, 0])
    np.testing.assert_array_equal(closure.minus, [2, 0, 1])


@pytest.mark.parametrize(
    "kind,p_coef,flux_sign",
    [
        (BoundaryKind.NEUMANN, 1.0, 1.0),
        (BoundaryKind.SLIP_WALL, 1.0, -1.0),
        (BoundaryKind.OUTLET, 0.0, 1.0),
    ],
)
def test_boundary_closure_coefficients(kind: BoundaryKind, p_coef: float, flux_sign: float) -> None:
    upper = BoundaryCondition(kind, pressure=1.0 if kind == BoundaryKind.OUTLET else None)
    grid = make_grid([4], [0.0], [1.0], {"xmin": BoundaryCondition(BoundaryKind.NEUMANN), "xmax": upper})
    closure = grid.closure(0)
    assert closure.plus[-1] == -1
    assert closure.plus_p_coef[-1] == p_coef
    assert closure.plus_flux_sign[-1] == flux_sign
    assert closure.plus_ghost[-1] == NG + 4


def test_iter_faces_counts() -> None:
    grid = make_grid([3, 2], [0.0, 0.0], [3.0, 2.0], tags(
        xmin=BoundaryKind.NEUMANN, xmax=BoundaryKind.NEUMANN, ymin=BoundaryKind.NEUMANN, ymax=BoundaryKind.NEUMANN
    ))
    faces = list(grid.iter_faces())
    assert len(faces) == 4 * 2 + 3 * 3
    assert sum(1 for f in faces if f.side is not None) == 2 * 2 + 2 * 3
