"""Equations of state written as rho(p, h) with derivatives at fixed h and p."""
from __future__ import annotations

import abc
import logging
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from ..exceptions import ConfigError, EosDomainError, RootFindError

logger = logging.getLogger(__name__)

GAS_CONSTANT = 8.315
AIR_MOLAR_MASS = 0.02897

ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _check_positive(p: np.ndarray, h: np.ndarray, what: str = "pressure and enthalpy") -> None:
    p, h = np.broadcast_arrays(p, h)
    bad = ~((p > 0.0) & (h > 0.0))
    if np.any(bad):
        index = int(np.flatnonzero(bad)[0])
        raise EosDomainError(
            f"{what} must be positive",
            details={
                "cell": index,
                "count": int(bad.sum()),
                "p": float(np.ravel(p)[index]),
                "h": float(np.ravel(h)[index]),
            },
        )


def _check_residual(residual: np.ndarray, scale: np.ndarray, what: str, tol: float = 1e-10) -> None:
    # the array form of scipy.optimize.newton only warns on failure
    rel = np.abs(residual) / np.maximum(np.abs(scale), np.finfo(float).tiny)
    if not np.all(rel <= tol):
        raise RootFindError(f"{what} did not converge", details={"max_relative_residual": float(np.nanmax(rel))})


def heat_capacity(gamma: float, gas_constant: float = GAS_CONSTANT, molar_mass: float = AIR_MOLAR_MASS) -> float:
    """C_p = gamma / (gamma - 1) * R / M."""

    return gamma / (gamma - 1.0) * gas_constant / molar_mass


def temperature(h: np.ndarray, cp: float) -> np.ndarray:
    return np.asarray(h, dtype=float) / cp


class EquationOfState(metaclass=abc.ABCMeta):
    """Capability giving rho(p, h) and its partial derivatives.

    Subclasses only have to provide the three evaluations; the sound speed and
    the inversions used for initialization and primitive recovery are generic.
    """

    name = "general"

    @abc.abstractmethod
    def density(self, p: np.ndarray, h: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @abc.abstractmethod
    def d_density_dp(self, p: np.ndarray, h: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @abc.abstractmethod
    def d_density_dh(self, p: np.ndarray, h: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sound_speed_squared(self, p: np.ndarray, h: np.ndarray, rho: np.ndarray) -> np.ndarray:
        """Return a_m^2 = (drho/dp + rho^-1 drho/dh)^-1.

        Raises
        ------
        EosDomainError
            If the bracketed quantity is not positive somewhere.
        """

        p = np.asarray(p, dtype=float)
        h = np.asarray(h, dtype=float)
        rho = np.asarray(rho, dtype=float)
        bracket = self.d_density_dp(p, h) + self.d_density_dh(p, h) / rho
        bad = ~(bracket > 0.0)
        if np.any(bad):
            index = int(np.flatnonzero(bad)[0])
            raise EosDomainError(
                "sound speed bracket is not positive",
                details={"cell": index, "value": float(np.ravel(bracket)[index])},
            )
        return 1.0 / bracket

    def enthalpy_from_density(
        self,
        p: np.ndarray,
        rho: np.ndarray,
        h_guess: Optional[np.ndarray] = None,
        *,
        tol: float = 1e-14,
        maxiter: int = 50,
    ) -> np.ndarray:
        """Solve rho(p, h) = rho for h with a vectorized Newton iteration on log h.

        Iterating on s = log h keeps every iterate admissible. The default start
        is h = p / rho, below the root of any gas with rho h / p > 1.
        """

        p = np.asarray(p, dtype=float)
        rho = np.asarray(rho, dtype=float)
        p, rho = np.broadcast_arrays(p, rho)
        _check_positive(p, rho, "pressure and density")
        h0 = p / rho if h_guess is None else np.broadcast_to(np.asarray(h_guess, dtype=float), p.shape)
        h0 = np.where(h0 > 0.0, h0, p / rho)

        def residual(s: np.ndarray) -> np.ndarray:
            return self.density(p, np.exp(s)) - rho

        def slope(s: np.ndarray) -> np.ndarray:
            hh = np.exp(s)
            return self.d_density_dh(p, hh) * hh

        try:
            s = optimize.newton(residual, np.log(h0), fprime=slope, tol=tol, maxiter=maxiter)
        except (RuntimeError, FloatingPointError, EosDomainError) as exc:
            raise RootFindError("enthalpy inversion did not converge") from exc
        h = np.exp(np.asarray(s, dtype=float))
        if not np.all(np.isfinite(h)) or np.any(h <= 0.0):
            raise RootFindError("enthalpy inversion left the admissible region")
        _check_residual(self.density(p, h) - rho, rho, "enthalpy inversion")
        return h

    def pressure_enthalpy_from_internal_energy(
        self,
        rho: np.ndarray,
        rhoe: np.ndarray,
        p_guess: Optional[np.ndarray] = None,
        *,
        tol: float = 1e-14,
        maxiter: int = 50,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Solve {rho h - p = rhoe ; rho(p, h) = rho} for (p, h).

        The first equation gives h = (rhoe + p) / rho, leaving a scalar root-find
        in p whose derivative is 1 / a_m^2.
        """

        rho = np.asarray(rho, dtype=float)
        rhoe = np.asarray(rhoe, dtype=float)
        p0 = 0.4 * rhoe if p_guess is None else np.asarray(p_guess, dtype=float)

        def residual(pp: np.ndarray) -> np.ndarray:
            return self.density(pp, (rhoe + pp) / rho) - rho

        def slope(pp: np.ndarray) -> np.ndarray:
            hh = (rhoe + pp) / rho
            return self.d_density_dp(pp, hh) + self.d_density_dh(pp, hh) / rho

        try:
            p = optimize.newton(residual, np.array(p0, dtype=float, copy=True), fprime=slope, tol=tol, maxiter=maxiter)
        except (RuntimeError, FloatingPointError) as exc:
            raise RootFindError("primitive recovery did not converge") from exc
        p = np.asarray(p, dtype=float)
        h = (rhoe + p) / rho
        _check_residual(self.density(p, h) - rho, rho, "primitive recovery")
        return p, h


class PerfectGas(EquationOfState):
    r"""Perfect gas written in enthalpy form.

    .. math::

        \rho = \frac{\gamma}{\gamma - 1} \frac{p}{h}, \qquad \rho e = \frac{p}{\gamma - 1}

    Attributes
    ----------
    gamma
        Polytropic constant, strictly greater than one.
    """

    name = "perfect_gas"

    def __init__(self, gamma: float = 1.4) -> None:
        if not gamma > 1.0:
            raise EosDomainError("gamma must exceed 1", details={"gamma": gamma})
        self.gamma = float(gamma)
        self.kappa = self.gamma / (self.gamma - 1.0)

    def __repr__(self) -> str:
        return f"PerfectGas(gamma={self.gamma})"

    def density(self, p: np.ndarray, h: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        h = np.asarray(h, dtype=float)
        _check_positive(p, h)
        return self.kappa * p / h

    def d_density_dp(self, p: np.ndarray, h: np.ndarray) -> np.ndarray:
        return self.kappa / np.asarray(h, dtype=float)

    def d_density_dh(self, p: np.ndarray, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        return -self.kappa * np.asarray(p, dtype=float) / (h * h)

    def sound_speed_squared(self, p: np.ndarray, h: np.ndarray, rho: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        rho = np.asarray(rho, dtype=float)
        _check_positive(p, np.asarray(h, dtype=float))
        return self.gamma * p / rho

    def internal_energy(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(p, dtype=float) / (self.gamma - 1.0)

    def enthalpy_from_density(self, p, rho, h_guess=None, *, tol=1e-14, maxiter=50):
        p = np.asarray(p, dtype=float)
        rho = np.asarray(rho, dtype=float)
        _check_positive(p, rho, "pressure and density")
        return self.kappa * p / rho

    def pressure_enthalpy_from_internal_energy(self, rho, rhoe, p_guess=None, *, tol=1e-14, maxiter=50):
        rho = np.asarray(rho, dtype=float)
        p = (self.gamma - 1.0) * np.asarray(rhoe, dtype=float)
        return p, self.gamma * np.asarray(rhoe, dtype=float) / rho


class FunctionalEos(EquationOfState):
    """General EOS assembled from user callables.

    Missing derivatives fall back to central differences with a relative step.
    """

    name = "functional"

    def __init__(
        self,
        density: ArrayFn,
        d_density_dp: Optional[ArrayFn] = None,
        d_density_dh: Optional[ArrayFn] = None,
        *,
        step: float = 1e-6,
    ) -> None:
        self._density = density
        self._ddp = d_density_dp
        self._ddh = d_density_dh
        self.step = step

    def density(self, p, h):
        p = np.asarray(p, dtype=float)
        h = np.asarray(h, dtype=float)
        _check_positive(p, h)
        rho = np.asarray(self._density(p, h), dtype=float)
        if np.any(rho <= 0.0):
            raise EosDomainError("density callable returned non-positive values")
        return rho

    def d_density_dp(self, p, h):
        p = np.asarray(p, dtype=float)
        h = np.asarray(h, dtype=float)
        if self._ddp is not None:
            return np.asarray(self._ddp(p, h), dtype=float)
        dp = self.step * np.abs(p)
        return (self._density(p + dp, h) - self._density(p - dp, h)) / (2.0 * dp)

    def d_density_dh(self, p, h):
        p = np.asarray(p, dtype=float)
        h = np.asarray(h, dtype=float)
        if self._ddh is not None:
            return np.asarray(self._ddh(p, h), dtype=float)
        dh = self.step * np.abs(h)
        return (self._density(p, h + dh) - self._density(p, h - dh)) / (2.0 * dh)


def as_general(eos: PerfectGas) -> FunctionalEos:
    """Route a perfect gas through the generic interface."""

    return FunctionalEos(eos.density, eos.d_density_dp, eos.d_density_dh)


def build_eos(kind: str, **params: float) -> EquationOfState:
    if kind == PerfectGas.name:
        return PerfectGas(params.get("gamma", 1.4))
    if kind == "perfect_gas_general":
        return as_general(PerfectGas(params.get("gamma", 1.4)))
    raise ConfigError(f"unknown equation of state '{kind}'")
