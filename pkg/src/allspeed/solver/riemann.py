"""Exact solution of the 1D Riemann problem for a perfect gas.

Used as the reference for shock-tube errors. Scaled variables map onto the
standard Euler equations through ``u_std = eps u`` and ``t_std = t / eps``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy import optimize

from ..exceptions import EosDomainError, RootFindError, VacuumError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RiemannState:
    rho: float
    u: float
    p: float


@dataclass(frozen=True)
class StarRegion:
    p: float
    u: float
    iterations: int


class ExactRiemannSolver:
    """Star-region pressure by guarded Newton iteration, then self-similar sampling."""

    def __init__(self, gamma: float = 1.4, tol: float = 1e-12, max_iter: int = 100) -> None:
        if not gamma > 1.0:
            raise EosDomainError("the adiabatic index must exceed 1", details={"gamma": gamma})
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self._gp1d2g = 0.5 * (gamma + 1.0) / gamma
        self._gm1d2g = 0.5 * (gamma - 1.0) / gamma
        self._gm1dgp1 = (gamma - 1.0) / (gamma + 1.0)
        self._tdgp1 = 2.0 / (gamma + 1.0)
        self._tdgm1 = 2.0 / (gamma - 1.0)

    def sound_speed(self, state: RiemannState) -> float:
        return math.sqrt(self.gamma * state.p / state.rho)

    # wave curves ---------------------------------------------------------------

    def _wave(self, state: RiemannState, a: float, p_star: float) -> float:
        if p_star > state.p:
            A = self._tdgp1 / state.rho
            B = self._gm1dgp1 * state.p
            return (p_star - state.p) * math.sqrt(A / (p_star + B))
        return self._tdgm1 * a * ((p_star / state.p) ** self._gm1d2g - 1.0)

    def _wave_slope(self, state: RiemannState, a: float, p_star: float) -> float:
        if p_star > state.p:
            A = self._tdgp1 / state.rho
            B = self._gm1dgp1 * state.p
            return (1.0 - 0.5 * (p_star - state.p) / (B + p_star)) * math.sqrt(A / (p_star + B))
        return (p_star / state.p) ** (-self._gp1d2g) / (state.rho * a)

    def _guess(self, left: RiemannState, right: RiemannState, aL: float, aR: float) -> float:
        floor = 1e-12 * (left.p + right.p)
        p_pv = 0.5 * (left.p + right.p) - 0.125 * (right.u - left.u) * (left.rho + right.rho) * (aL + aR)
        p_pv = max(floor, p_pv)
        p_min, p_max = min(left.p, right.p), max(left.p, right.p)
        if p_max / p_min <= 2.0 and p_min <= p_pv <= p_max:
            return p_pv
        if p_pv < p_min:
            # two-rarefaction estimate
            numerator = aL + aR - 0.5 * (self.gamma - 1.0) * (right.u - left.u)
            denominator = aL / left.p**self._gm1d2g + aR / right.p**self._gm1d2g
            return max(floor, (numerator / denominator) ** (1.0 / self._gm1d2g))
        # two-shock estimate
        gL = math.sqrt(self._tdgp1 / left.rho / (p_pv + self._gm1dgp1 * left.p))
        gR = math.sqrt(self._tdgp1 / right.rho / (p_pv + self._gm1dgp1 * right.p))
        return max(floor, (gL * left.p + gR * right.p - (right.u - left.u)) / (gL + gR))

    def star_state(self, left: RiemannState, right: RiemannState) -> StarRegion:
        for side, state in (("left", left), ("right", right)):
            if not (state.rho > 0.0 and state.p > 0.0):
                raise EosDomainError(f"{side} Riemann state is not admissible", details={"rho": state.rho, "p": state.p})
        aL, aR = self.sound_speed(left), self.sound_speed(right)
        if self._tdgm1 * (aL + aR) <= right.u - left.u:
            raise VacuumError(
                "initial data generate vacuum",
                details={"critical_speed": self._tdgm1 * (aL + aR), "velocity_jump": right.u - left.u},
            )

        def f(p_star: float) -> float:
            return self._wave(left, aL, p_star) + self._wave(right, aR, p_star) + (right.u - left.u)

        p = self._guess(left, right, aL, aR)
        for iteration in range(1, self.max_iter + 1):
            slope = self._wave_slope(left, aL, p) + self._wave_slope(right, aR, p)
            p_next = p - f(p) / slope
            if not p_next > 0.0:
                break
            change = 2.0 * abs(p_next - p) / (p_next + p)
            p = p_next
            if change < self.tol:
                u = 0.5 * (left.u + right.u) + 0.5 * (self._wave(right, aR, p) - self._wave(left, aL, p))
                return StarRegion(p=p, u=u, iterations=iteration)

        # bracketed fallback: f is monotone increasing in p
        logger.debug("Riemann Newton iteration left its safe region; bracketing")
        low, high = 1e-14 * (left.p + right.p), max(left.p, right.p)
        while f(high) < 0.0:
            high *= 2.0
            if high > 1e12 * (left.p + right.p):
                raise RootFindError("could not bracket the star pressure")
        try:
            p, result = optimize.brentq(f, low, high, xtol=self.tol * high, full_output=True)
        except ValueError as exc:
            raise RootFindError("star pressure bracketing failed") from exc
        u = 0.5 * (left.u + right.u) + 0.5 * (self._wave(right, aR, p) - self._wave(left, aL, p))
        return StarRegion(p=p, u=u, iterations=self.max_iter + result.iterations)

    # sampling ------------------------------------------------------------------

    def sample(self, left: RiemannState, right: RiemannState, xi: np.ndarray, star: Optional[StarRegion] = None) -> Dict[str, np.ndarray]:
        """Density, velocity and pressure at the similarity coordinates ``xi = x / t``."""

        star = star or self.star_state(left, right)
        xi = np.asarray(xi, dtype=float)
        rho = np.empty_like(xi)
        u = np.empty_like(xi)
        p = np.empty_like(xi)
        on_left = xi <= star.u
        for region, state, sign in ((on_left, left, -1.0), (~on_left, right, 1.0)):
            r, v, q = self._sample_side(state, star, xi[region], sign)
            rho[region], u[region], p[region] = r, v, q
        return {"rho": rho, "u": u, "p": p}

    def _sample_side(self, state: RiemannState, star: StarRegion, xi: np.ndarray, sign: float):
        """Sample one side of the contact; ``sign`` is -1 for the left wave, +1 for the right."""

        a = self.sound_speed(state)
        ratio = star.p / state.p
        rho = np.full(xi.shape, state.rho)
        u = np.full(xi.shape, state.u)
        p = np.full(xi.shape, state.p)
        # xi measured outward from the contact: positive means towards the unperturbed state
        outward = sign * xi

        if star.p > state.p:
            speed = sign * state.u + a * math.sqrt(self._gp1d2g * ratio + self._gm1d2g)
            inside = outward < speed
            rho[inside] = state.rho * (ratio + self._gm1dgp1) / (self._gm1dgp1 * ratio + 1.0)
            u[inside] = star.u
            p[inside] = star.p
            return rho, u, p

        a_star = a * ratio**self._gm1d2g
        head = sign * state.u + a
        tail = sign * star.u + a_star
        star_zone = outward < tail
        fan = (outward >= tail) & (outward < head)
        rho[star_zone] = state.rho * ratio ** (1.0 / self.gamma)
        u[star_zone] = star.u
        p[star_zone] = star.p
        if np.any(fan):
            base = self._tdgp1 - sign * self._gm1dgp1 * (state.u - xi[fan]) / a
            factor = base ** self._tdgm1
            rho[fan] = state.rho * factor
            u[fan] = self._tdgp1 * (-sign * a + 0.5 * (self.gamma - 1.0) * state.u + xi[fan])
            p[fan] = state.p * factor**self.gamma
        return rho, u, p


def exact_solution(
    left: RiemannState,
    right: RiemannState,
    x: np.ndarray,
    time: float,
    interface: float,
    gamma: float = 1.4,
    epsilon: float = 1.0,
) -> Dict[str, np.ndarray]:
    """Exact profiles in scaled variables at ``time``.

    ``left``/``right`` carry scaled velocities; the result holds ``rho``,
    ``u``, ``p`` and ``h`` at the points ``x``.
    """

    solver = ExactRiemannSolver(gamma)
    std_left = RiemannState(left.rho, epsilon * left.u, left.p)
    std_right = RiemannState(right.rho, epsilon * right.u, right.p)
    x = np.asarray(x, dtype=float)
    if time <= 0.0:
        on_left = x < interface
        rho = np.where(on_left, left.rho, right.rho)
        u = np.where(on_left, left.u, right.u)
        p = np.where(on_left, left.p, right.p)
    else:
        star = solver.star_state(std_left, std_right)
        logger.debug(f"Exact star state p*={star.p:.8g} u*={star.u / epsilon:.8g} after {star.iterations} iterations")
        profile = solver.sample(std_left, std_right, (x - interface) * epsilon / time, star)
        rho, u, p = profile["rho"], profile["u"] / epsilon, profile["p"]
    kappa = gamma / (gamma - 1.0)
    return {"rho": rho, "u": u, "p": p, "h": kappa * p / rho}
