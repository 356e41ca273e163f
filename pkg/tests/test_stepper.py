import dataclasses

import numpy as np
import pytest

from allspeed.config.cases import case_eos, case_grid, initial_primitive, initial_state, load_case, step_config
from allspeed.exceptions import ConfigError, PositivityError
from allspeed.solver.eos import PerfectGas, as_general
from allspeed.solver.mesh import BoundaryCondition, BoundaryKind, build_grid, grid_config_from_mapping
from allspeed.solver.pressure_solver import PressureOperators
from allspeed.solver.state import PrimitiveState, conservative_from_primitive, conserved_totals
from allspeed.solver.stepper import (
    StepConfig,
    acoustic_dt,
    ap_step,
    compute_dt,
    enthalpy_laplacian,
    evaluate_sources,
    explicit_baseline_step,
    ghosted_primitives,
    uses_newton,
    viscous_stress_divergence,
)


def periodic_grid(cells):
    sides = ("xmin", "xmax", "ymin", "ymax")[: 2 * len(cells)]
    boundaries = {side: BoundaryCondition(BoundaryKind.PERIODIC) for side in sides}
    return build_grid(grid_config_from_mapping(cells, [0.0] * len(cells), [1.0] * len(cells), boundaries))


def wall_grid(cells: int):
    boundaries = {side: BoundaryCondition(BoundaryKind.SLIP_WALL) for side in ("xmin", "xmax")}
    return build_grid(grid_config_from_mapping([cells], [0.0], [1.0], boundaries))


def smooth_primitive(grid, eos, amplitude: float = 0.1) -> PrimitiveState:
    x = grid.centers(0)
    p = 1.0 + amplitude * np.sin(2 * np.pi * x)
    h = 3.5 * np.ones_like(x)
    u = (1.0 + amplitude * np.cos(2 * np.pi * x))[None]
    return PrimitiveState(p=p, h=h, u=u, rho=eos.density(p, h))


@pytest.mark.parametrize(
    "kwargs",
    [{"cfl": 0.0}, {"order": 3}, {"alpha": -1.0}, {"epsilon": 0.0}, {"dt": -1.0}, {"viscous": True}, {"pressure_path": "both"}],
)
def test_step_config_validation(kwargs) -> None:
    with pytest.raises(ConfigError):
        StepConfig(**kwargs)


def test_pressure_path_selection() -> None:
    assert not uses_newton(StepConfig(), PerfectGas())
    assert uses_newton(StepConfig(), as_general(PerfectGas()))
    assert uses_newton(StepConfig(pressure_path="newton"), PerfectGas())
    with pytest.raises(ConfigError):
        uses_newton(StepConfig(pressure_path="linear"), as_general(PerfectGas()))


def test_material_time_step_does_not_depend_on_mach() -> None:
    grid = periodic_grid([50])
    eos = PerfectGas(1.4)
    prim = smooth_primitive(grid, eos)
    ghosts = ghosted_primitives(grid, prim, eos)
    steps = {eps: compute_dt(grid, ghosts, 0.0, eos, 0.5) for eps in (1e-2, 1e-3, 1e-4)}
    assert len(set(steps.values())) == 1
    assert steps[1e-2] == pytest.approx(0.5 * grid.dx / np.max(prim.u))

    acoustic = {eps: acoustic_dt(grid, ghosts, eos, StepConfig(epsilon=eps, cfl=0.5)) for eps in (1e-2, 1e-3, 1e-4)}
    scaled = [acoustic[eps] / eps for eps in acoustic]
    assert max(scaled) / min(scaled) < 1.05


def test_time_step_is_capped() -> None:
    grid = periodic_grid([10])
    eos = PerfectGas(1.4)
    prim = smooth_primitive(grid, eos)
    prim.u[:] = 0.0
    ghosts = ghosted_primitives(grid, prim, eos)
    assert compute_dt(grid, ghosts, 0.0, eos, 0.5, dt_max=0.25) == 0.25


@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("epsilon", [1.0, 1e-2])
def test_uniform_flow_is_preserved(order: int, epsilon: float) -> None:
    grid = periodic_grid([12])
    eos = PerfectGas(1.4)
    prim = PrimitiveState(p=np.ones(12), h=np.full(12, 3.5), u=np.full((1, 12), 0.3), rho=np.ones(12))
    state = conservative_from_primitive(prim, eos, epsilon)
    config = StepConfig(epsilon=epsilon, order=order)
    result = ap_step(state, grid, config, eos, 1e-3)
    np.testing.assert_allclose(result.state.rho, state.rho, rtol=1e-12)
    np.testing.assert_allclose(result.state.q, state.q, rtol=1e-12)
    np.testing.assert_allclose(result.state.W, state.W, rtol=1e-12)
    np.testing.assert_allclose(result.pressure, 1.0, rtol=1e-12)


@pytest.mark.parametrize("grid_factory", [lambda: periodic_grid([40]), lambda: wall_grid(40)])
def test_ap_step_conserves_mass_and_energy(grid_factory) -> None:
    grid = grid_factory()
    eos = PerfectGas(1.4)
    config = StepConfig(epsilon=0.1, order=2)
    prim = smooth_primitive(grid, eos)
    prim.u *= 0.0 if grid.side(0, False).is_wall else 1.0
    state = conservative_from_primitive(prim, eos, config.epsilon)
    ops = PressureOperators(grid)
    mass0, energy0 = conserved_totals(state, grid.volume)
    for _ in range(20):
        result = ap_step(state, grid, config, eos, 2e-3, ops=ops)
        state = result.state
        assert result.energy_defect < 1e-10
    mass, energy = conserved_totals(state, grid.volume)
    assert abs(mass - mass0) / mass0 < 1e-12
    assert abs(energy - energy0) / energy0 < 1e-10


def test_newton_and_linear_paths_agree_on_sod() -> None:
    case = load_case("sod")
    grid, eos = case_grid(case), case_eos(case)
    state = initial_state(case, grid, eos)
    linear = ap_step(state, grid, step_config(case), eos, 1e-3)
    config = dataclasses.replace(step_config(case), pressure_path="newton")
    newton = ap_step(state, grid, config, as_general(eos), 1e-3)
    np.testing.assert_allclose(newton.pressure, linear.pressure, rtol=1e-8)
    np.testing.assert_allclose(newton.state.W, linear.state.W, rtol=1e-8)
    assert 1 <= newton.newton_iterations <= 5


def test_oversized_step_raises_positivity_error() -> None:
    grid = periodic_grid([20])
    eos = PerfectGas(1.4)
    x = grid.centers(0)
    prim = PrimitiveState(p=np.ones(20), h=np.full(20, 3.5), u=(10.0 * np.sin(2 * np.pi * x))[None], rho=np.ones(20))
    state = conservative_from_primitive(prim, eos, 0.1)
    with pytest.raises(PositivityError):
        ap_step(state, grid, StepConfig(epsilon=0.1), eos, 1.0)


def test_explicit_baseline_conserves_mass() -> None:
    grid = periodic_grid([40])
    eos = PerfectGas(1.4)
    config = StepConfig(epsilon=0.5, order=1)
    state = conservative_from_primitive(smooth_primitive(grid, eos), eos, config.epsilon)
    prim = smooth_primitive(grid, eos)
    dt = acoustic_dt(grid, ghosted_primitives(grid, prim, eos), eos, config)
    mass0, energy0 = conserved_totals(state, grid.volume)
    result = explicit_baseline_step(state, grid, config, eos, dt)
    mass, energy = conserved_totals(result.state, grid.volume)
    assert mass == pytest.approx(mass0, rel=1e-13)
    assert energy == pytest.approx(energy0, rel=1e-13)


def test_sources_vanish_for_uniform_state() -> None:
    grid = periodic_grid([6, 6])
    eos = PerfectGas(1.4)
    prim = PrimitiveState(p=np.ones((6, 6)), h=np.full((6, 6), 3.5), u=np.full((2, 6, 6), 0.2), rho=np.ones((6, 6)))
    ghosts = ghosted_primitives(grid, prim, eos)
    np.testing.assert_allclose(viscous_stress_divergence(grid, ghosts), 0.0, atol=1e-12)
    np.testing.assert_allclose(enthalpy_laplacian(grid, ghosts), 0.0, atol=1e-10)


def test_shear_flow_viscous_source() -> None:
    n = 32
    grid = periodic_grid([n, n])
    eos = PerfectGas(1.4)
    x, y = grid.coordinates()
    u = np.stack([np.sin(2 * np.pi * y), np.zeros_like(y)])
    prim = PrimitiveState(p=np.ones((n, n)), h=np.full((n, n), 3.5), u=u, rho=np.ones((n, n)))
    ghosts = ghosted_primitives(grid, prim, eos)
    div = viscous_stress_divergence(grid, ghosts)
    # d/dy (du/dy) = -(2 pi)^2 sin(2 pi y)
    np.testing.assert_allclose(div[0], -(2 * np.pi) ** 2 * np.sin(2 * np.pi * y), atol=0.05 * (2 * np.pi) ** 2)
    np.testing.assert_allclose(div[1], 0.0, atol=1e-10)


def test_gravity_source() -> None:
    grid = periodic_grid([4, 4])
    eos = PerfectGas(1.4)
    prim = PrimitiveState(p=np.ones((4, 4)), h=np.full((4, 4), 3.5), u=np.zeros((2, 4, 4)), rho=np.ones((4, 4)))
    prim.u[1] = 2.0
    config = StepConfig(epsilon=0.1, gravity=True, body_force=(0.0, -3.0))
    sources = evaluate_sources(grid, ghosted_primitives(grid, prim, eos), config)
    np.testing.assert_allclose(sources.q[1], -3.0)
    np.testing.assert_allclose(sources.q[0], 0.0)
    np.testing.assert_allclose(sources.W, 0.01 * -3.0 * 2.0)


def test_initial_primitive_of_sod() -> None:
    case = load_case("sod")
    grid, eos = case_grid(case), case_eos(case)
    prim = initial_primitive(case, grid, eos)
    assert prim.rho[0] == pytest.approx(1.0)
    assert prim.rho[-1] == pytest.approx(0.125)
