import numpy as np
import pytest

from allspeed.exceptions import EosDomainError, VacuumError
from allspeed.solver.riemann import ExactRiemannSolver, RiemannState, exact_solution

SOD_LEFT = RiemannState(rho=1.0, u=0.0, p=1.0)
SOD_RIGHT = RiemannState(rho=0.125, u=0.0, p=0.1)


def test_sod_star_state() -> None:
    star = ExactRiemannSolver(1.4).star_state(SOD_LEFT, SOD_RIGHT)
    assert star.p == pytest.approx(0.30313, abs=1e-5)
    assert star.u == pytest.approx(0.92745, abs=1e-5)
    assert star.iterations < 10


def test_symmetric_collision_has_resting_contact() -> None:
    left = RiemannState(rho=1.0, u=1.0, p=1.0)
    right = RiemannState(rho=1.0, u=-1.0, p=1.0)
    star = ExactRiemannSolver(1.4).star_state(left, right)
    assert star.u == pytest.approx(0.0, abs=1e-12)
    assert star.p > 1.0


@pytest.mark.parametrize(
    "x,rho",
    [(0.1, 1.0), (0.6, 0.42632), (0.8, 0.26557), (0.95, 0.125)],
)
def test_sod_profile_at_t02(x: float, rho: float) -> None:
    profile = exact_solution(SOD_LEFT, SOD_RIGHT, np.array([x]), 0.2, 0.5)
    assert profile["rho"][0] == pytest.approx(rho, abs=1e-4)
    assert profile["h"][0] == pytest.approx(3.5 * profile["p"][0] / profile["rho"][0])


def test_rarefaction_fan_is_monotone() -> None:
    x = np.linspace(0.25, 0.48, 50)
    profile = exact_solution(SOD_LEFT, SOD_RIGHT, x, 0.2, 0.5)
    assert np.all(np.diff(profile["rho"]) <= 1e-14)
    assert np.all(np.diff(profile["u"]) >= -1e-14)


def test_initial_time_returns_the_data() -> None:
    profile = exact_solution(SOD_LEFT, SOD_RIGHT, np.array([0.2, 0.7]), 0.0, 0.5)
    np.testing.assert_array_equal(profile["rho"], [1.0, 0.125])
    np.testing.assert_array_equal(profile["p"], [1.0, 0.1])


def test_scaled_time_and_velocity() -> None:
    eps = 0.5
    left = RiemannState(rho=1.0, u=0.4, p=1.0)
    right = RiemannState(rho=0.5, u=0.0, p=0.4)
    x = np.linspace(0.0, 1.0, 41)
    scaled = exact_solution(left, right, x, 0.1, 0.5, epsilon=eps)
    standard = exact_solution(
        RiemannState(1.0, eps * 0.4, 1.0), RiemannState(0.5, 0.0, 0.4), x, 0.1 / eps, 0.5
    )
    np.testing.assert_allclose(scaled["rho"], standard["rho"], rtol=1e-12)
    np.testing.assert_allclose(eps * scaled["u"], standard["u"], rtol=1e-12, atol=1e-14)


def test_vacuum_is_rejected() -> None:
    left = RiemannState(rho=1.0, u=-20.0, p=0.4)
    right = RiemannState(rho=1.0, u=20.0, p=0.4)
    with pytest.raises(VacuumError):
        ExactRiemannSolver(1.4).star_state(left, right)


def test_inadmissible_states() -> None:
    with pytest.raises(EosDomainError):
        ExactRiemannSolver(1.0)
    with pytest.raises(EosDomainError):
        ExactRiemannSolver(1.4).star_state(RiemannState(0.0, 0.0, 1.0), SOD_RIGHT)


def conserved_and_flux(gamma: float, rho: float, u: float, p: float):
    energy = p / (gamma - 1.0) + 0.5 * rho * u * u
    return np.array([rho, rho * u, energy]), np.array([rho * u, rho * u * u + p, (energy + p) * u])


@pytest.mark.parametrize("mirrored", [False, True])
def test_shock_satisfies_the_jump_conditions(mirrored: bool) -> None:
    gamma = 1.4
    solver = ExactRiemannSolver(gamma)
    left, right = (SOD_RIGHT, SOD_LEFT) if mirrored else (SOD_LEFT, SOD_RIGHT)
    star = solver.star_state(left, right)
    ahead = left if mirrored else right
    sign = -1.0 if mirrored else 1.0
    a = solver.sound_speed(ahead)
    speed = ahead.u + sign * a * np.sqrt((gamma + 1.0) / (2.0 * gamma) * star.p / ahead.p + (gamma - 1.0) / (2.0 * gamma))

    sampled = solver.sample(left, right, np.array([speed - 1e-8, speed + 1e-8]), star)
    states = [conserved_and_flux(gamma, sampled["rho"][k], sampled["u"][k], sampled["p"][k]) for k in range(2)]
    (u_minus, f_minus), (u_plus, f_plus) = states
    assert sampled["p"][int(not mirrored)] == pytest.approx(ahead.p)

    mass_speed = (f_minus[0] - f_plus[0]) / (u_minus[0] - u_plus[0])
    assert mass_speed == pytest.approx(speed, rel=1e-10)
    np.testing.assert_allclose(f_minus - f_plus, speed * (u_minus - u_plus), rtol=1e-10)
