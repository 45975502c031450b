"""Named initial-condition profiles.

Each profile yields macroscopic fields on the x-grid and, for the kinetic
solver, a distribution on the phase grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import GammaRegime
from .grid import PhaseGrid, equilibrium_array

PROFILE_PARAMS = {
    "equilibrium": {"rho0": 1.0, "u0": 0.0},
    "sine-density": {"rho0": 1.0, "amp": 0.2, "u0": 0.0},
    "two-bump": {"rho0": 1.0, "amp": 0.2, "sep": 1.0},
    "riemann": {"rhoL": 1.0, "uL": 0.0, "rhoR": 0.5, "uR": 0.0},
}


@dataclass(frozen=True)
class Profile:
    """``name`` is one of :data:`PROFILE_PARAMS`; velocities act along x_1."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in PROFILE_PARAMS:
            raise ValueError(f"unknown profile {self.name!r}; known: {sorted(PROFILE_PARAMS)}")
        merged = dict(PROFILE_PARAMS[self.name])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)} for profile {self.name!r}")
        merged.update({k: float(v) for k, v in self.params.items()})
        object.__setattr__(self, "params", merged)

    @property
    def post_shock_capable(self) -> bool:
        return self.name == "riemann"

    def density_range(self):
        p = self.params
        if self.name == "equilibrium":
            return p["rho0"], p["rho0"]
        if self.name in ("sine-density", "two-bump"):
            return p["rho0"] * (1.0 - abs(p["amp"])), p["rho0"] * (1.0 + abs(p["amp"]))
        return min(p["rhoL"], p["rhoR"]), max(p["rhoL"], p["rhoR"])

    def max_speed(self) -> float:
        p = self.params
        if self.name == "two-bump":
            return p["sep"]
        if self.name == "riemann":
            return max(abs(p["uL"]), abs(p["uR"]))
        return abs(p["u0"])

    def max_reach(self, regime: GammaRegime) -> float:
        """Largest ``r(rho) + |u|`` the profile places on the velocity grid."""
        hi = self.density_range()[1]
        if self.name == "two-bump":
            hi = 0.5 * hi
        return float(regime.radius(hi)) + self.max_speed()

    def macro(self, grid: PhaseGrid):
        """``(rho, u)`` on the x-grid; ``u`` has a trailing axis of length d."""
        p = self.params
        x1 = grid.x_mesh[..., 0]
        u = np.zeros(grid.x_shape + (grid.d,))
        if self.name == "equilibrium":
            rho = np.full(grid.x_shape, p["rho0"])
            u[..., 0] = p["u0"]
        elif self.name in ("sine-density", "two-bump"):
            rho = p["rho0"] * (1.0 + p["amp"] * np.sin(2.0 * math.pi * x1 / grid.L))
            if self.name == "sine-density":
                u[..., 0] = p["u0"]
        else:
            left = x1 < 0.5 * grid.L
            rho = np.where(left, p["rhoL"], p["rhoR"])
            u[..., 0] = np.where(left, p["uL"], p["uR"])
        return rho, u

    def kinetic(self, regime: GammaRegime, grid: PhaseGrid) -> np.ndarray:
        """Distribution values; ``two-bump`` is the sum of two equilibria of half
        the density centred at ``+-sep e_1`` (not itself an equilibrium)."""
        rho, u = self.macro(grid)
        if self.name != "two-bump":
            return equilibrium_array(regime, grid, rho, u)[0]
        shift = np.zeros(grid.d)
        shift[0] = self.params["sep"]
        a, _ = equilibrium_array(regime, grid, 0.5 * rho, u + shift)
        b, _ = equilibrium_array(regime, grid, 0.5 * rho, u - shift)
        return a + b
