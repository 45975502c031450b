"""Equilibrium functions of the barotropic BGK model.

Two branches exist depending on the adiabatic exponent:

* ``gamma == (d+2)/d``: the equilibrium is the indicator of the velocity ball
  ``|v - u|^d <= c_d rho``;
* ``gamma < (d+2)/d``: the equilibrium is ``c (r(rho)^2 - |v-u|^2)_+^{n/2}``
  with ``r(rho)^2 = 2 gamma/(gamma-1) rho^(gamma-1)``.

All functions accept numpy arrays where it is natural (densities broadcast,
velocities carry a trailing axis of length ``d``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GammaOutOfRange, NegativeDensity, NegativeValue

INDICATOR = "indicator"
POSITIVE_PART = "positive_part"

BRANCH_TOL = 1e-12


def sphere_area(k: int) -> float:
    """Surface area of the unit k-sphere embedded in R^{k+1} (|S_0| = 2)."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def ball_volume(d: int) -> float:
    return sphere_area(d - 1) / d


@dataclass(frozen=True)
class GammaRegime:
    d: int
    gamma: float
    branch: str
    C_d: float
    n: Optional[float] = None
    c: Optional[float] = None
    c_d: Optional[float] = None

    @property
    def is_indicator(self) -> bool:
        return self.branch == INDICATOR

    @property
    def entropy_exponent(self) -> float:
        """Exponent ``1 + 2/n`` of the Lebesgue norm controlled by the entropy."""
        if self.is_indicator:
            return math.inf
        return 1.0 + 2.0 / self.n

    def radius(self, rho):
        """Vectorized support radius (no validation)."""
        rho = np.asarray(rho, dtype=float)
        if self.is_indicator:
            return (self.c_d * rho) ** (1.0 / self.d)
        g = self.gamma
        return math.sqrt(2.0 * g / (g - 1.0)) * rho ** ((g - 1.0) / 2.0)

    def pressure(self, rho):
        return self.C_d * np.asarray(rho, dtype=float) ** self.gamma

    def sound_speed(self, rho):
        rho = np.asarray(rho, dtype=float)
        return np.sqrt(self.gamma * self.C_d * rho ** (self.gamma - 1.0))


@dataclass(frozen=True)
class MacroState:
    rho: float
    u: tuple

    def __post_init__(self):
        if not self.rho >= 0:
            raise NegativeDensity(f"rho = {self.rho!r} must be >= 0")
        u = tuple(float(x) for x in np.atleast_1d(self.u))
        if not all(math.isfinite(x) for x in u):
            raise ValueError(f"non-finite bulk velocity {u!r}")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def u_array(self) -> np.ndarray:
        return np.asarray(self.u, dtype=float)


@dataclass(frozen=True)
class MomentTriple:
    m0: float
    m1: np.ndarray
    m2: float


def admissible(d: int, gamma: float) -> bool:
    if d < 1 or not gamma > 1.0:
        return False
    endpoint = (d + 2.0) / d
    if abs(gamma - endpoint) < BRANCH_TOL:
        return True
    if gamma > endpoint:
        return False
    if d == 1:
        return gamma < 3.0
    return gamma <= (d + 4.0) / (d + 2.0) + BRANCH_TOL


def make_regime(d: int, gamma: float) -> GammaRegime:
    """Build the regime for dimension ``d`` and exponent ``gamma``.

    Raises :class:`GammaOutOfRange` outside the admissible set
    ``(1, 3]`` for d = 1 and ``(1, (d+4)/(d+2)] U {(d+2)/d}`` for d >= 2.
    """
    d = int(d)
    gamma = float(gamma)
    if not admissible(d, gamma):
        raise GammaOutOfRange(
            f"gamma={gamma} not admissible for d={d}: need gamma in (1, 3] for d=1, "
            f"or gamma in (1, (d+4)/(d+2)] U {{(d+2)/d}} for d>=2"
        )
    area = sphere_area(d - 1)
    if abs(gamma - (d + 2.0) / d) < BRANCH_TOL:
        c_d = d / area
        C_d = area / (d * (d + 2.0)) * c_d ** ((d + 2.0) / d)
        return GammaRegime(d=d, gamma=(d + 2.0) / d, branch=INDICATOR, C_d=C_d, c_d=c_d)
    n = 2.0 / (gamma - 1.0) - d
    # log-space keeps the constant accurate when 1/(gamma-1) is large
    log_c = (
        -math.log(2.0 * gamma / (gamma - 1.0)) / (gamma - 1.0)
        + math.lgamma(gamma / (gamma - 1.0))
        - 0.5 * d * math.log(math.pi)
        - math.lgamma(n / 2.0 + 1.0)
    )
    return GammaRegime(d=d, gamma=gamma, branch=POSITIVE_PART, C_d=1.0, n=n, c=math.exp(log_c))


def support_radius(regime: GammaRegime, rho: float) -> float:
    if rho < 0:
        raise NegativeDensity(f"rho = {rho!r} must be >= 0")
    return float(regime.radius(rho))


def equilibrium_values(regime: GammaRegime, rho, u, v) -> np.ndarray:
    """Evaluate M at velocities ``v`` (shape ``(..., d)``) for density ``rho``
    and bulk velocity ``u`` (shape ``(..., d)``), broadcasting."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    rho = np.asarray(rho, dtype=float)
    w = v - u
    w2 = np.sum(w * w, axis=-1)
    if regime.is_indicator:
        # same test as the kernels: |w|^2 <= (c_d rho)^(2/d)
        r2 = (regime.c_d * rho) ** (2.0 / regime.d)
        return np.where((w2 <= r2) & (rho > 0), 1.0, 0.0)
    r2 = regime.radius(rho) ** 2
    base = np.maximum(r2 - w2, 0.0)
    return regime.c * base ** (regime.n / 2.0)


def eval_equilibrium(regime: GammaRegime, state: MacroState, v) -> float:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return float(equilibrium_values(regime, state.rho, state.u_array, v))


def closed_form_moments(regime: GammaRegime, state: MacroState) -> MomentTriple:
    """Exact ``(int M, int v M, int |v|^2 M)``."""
    rho = state.rho
    u = state.u_array
    m2 = rho * float(u @ u) + regime.d * regime.C_d * rho ** regime.gamma
    return MomentTriple(m0=rho, m1=rho * u, m2=m2)


def entropy_density(regime: GammaRegime, f, v2):
    """Vectorized kinetic entropy ``H(f, v)`` given ``|v|^2`` (no validation)."""
    f = np.asarray(f, dtype=float)
    h = 0.5 * v2 * f
    if regime.is_indicator:
        return h
    p = 1.0 + 2.0 / regime.n
    return h + f ** p / (2.0 * regime.c ** (2.0 / regime.n) * p)


def kinetic_entropy_density(regime: GammaRegime, f_value: float, v) -> float:
    if f_value < 0:
        raise NegativeValue(f"distribution value {f_value!r} is negative")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return float(entropy_density(regime, f_value, float(v @ v)))


def macro_entropy_values(regime: GammaRegime, rho, m2_kinetic):
    """``eta`` from density and ``rho |u|^2`` arrays."""
    rho = np.asarray(rho, dtype=float)
    return 0.5 * m2_kinetic + regime.C_d / (regime.gamma - 1.0) * rho ** regime.gamma


def macro_entropy(regime: GammaRegime, state: MacroState) -> float:
    """``eta(rho, u) = rho |u|^2 / 2 + C_d rho^gamma / (gamma - 1)``."""
    u = state.u_array
    return float(macro_entropy_values(regime, state.rho, state.rho * float(u @ u)))
