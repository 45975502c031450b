"""Mollified macroscopic fields and regularized initial data.

For a mollifier ``theta_eps`` of unit mass the regularized fields are

    rho_eps = (rho * theta) / (1 + eps^(d+1) (rho * theta))
    u_eps   = (m * theta) / ((rho * theta) + eps^(2d+1) (1 + |m * theta|^2))

and both are bounded by ``eps^-(2d+1)`` whenever ``eps <= 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BadQ, BoundViolation, EpsUnresolvable, NegativeValue
from .grid import DistributionField, MacroFieldSet, PhaseGrid

BOUND_RTOL = 1e-12


def bump_weights(eps: float, h: float) -> np.ndarray:
    """Standard bump ``exp(1/(s^2 - 1))`` sampled at ``s = k h / eps``, ``|s| < 1``,
    scaled so that ``sum(w) == 1`` (i.e. unit mass for cell size ``h``)."""
    kmax = int(math.ceil(eps / h)) - 1
    while (kmax + 1) * h < eps:
        kmax += 1
    k = np.arange(-kmax, kmax + 1)
    s = k * h / eps
    inside = np.abs(s) < 1.0
    w = np.zeros(k.size)
    w[inside] = np.exp(1.0 / (s[inside] ** 2 - 1.0))
    w = w[inside]
    return w / w.sum()


@dataclass(frozen=True)
class MollifierSpec:
    """Separable periodic stencil; ``weights`` holds the 1D factor with
    ``sum(weights) == 1``, so the kernel values are ``weights / dx`` per axis."""

    eps: float
    weights: np.ndarray
    dx: float
    d: int

    @property
    def kernel_values(self) -> np.ndarray:
        """Tensor-product kernel values ``theta_eps(x_k)`` (sum times ``dx^d`` is 1)."""
        w = self.weights / self.dx
        out = w
        for _ in range(self.d - 1):
            out = np.multiply.outer(out, w)
        return out

    @property
    def support_radius(self) -> float:
        return (self.weights.size // 2) * self.dx

    def apply(self, field: np.ndarray) -> np.ndarray:
        """Periodic convolution over the first ``d`` axes of ``field``."""
        out = np.asarray(field, dtype=float)
        for axis in range(self.d):
            moved = np.moveaxis(out, axis, 0)
            shp = moved.shape
            conv = kernels.convolve_periodic(moved.reshape(shp[0], -1), self.weights)
            out = np.moveaxis(conv.reshape(shp), 0, axis)
        return np.ascontiguousarray(out)


def make_mollifier(eps: float, grid: PhaseGrid) -> MollifierSpec:
    if not eps >= 2.0 * grid.dx * (1.0 - 1e-12):
        raise EpsUnresolvable(f"eps={eps} is below two cells (dx={grid.dx})")
    return MollifierSpec(eps=float(eps), weights=bump_weights(eps, grid.dx), dx=grid.dx, d=grid.d)


@dataclass
class RegularizedFields:
    rho_eps: np.ndarray
    u_eps: np.ndarray
    eps: float

    @property
    def bound(self) -> float:
        return self.eps ** (-(2 * self.u_eps.shape[-1] + 1))


def regularized_from_arrays(rho: np.ndarray, momentum: np.ndarray, moll: MollifierSpec):
    d = moll.d
    eps = moll.eps
    rc = moll.apply(rho)
    mc = np.stack([moll.apply(momentum[..., a]) for a in range(d)], axis=-1)
    rho_eps = rc / (1.0 + eps ** (d + 1) * rc)
    denom = rc + eps ** (2 * d + 1) * (1.0 + np.sum(mc * mc, axis=-1))
    u_eps = mc / denom[..., None]
    out = RegularizedFields(rho_eps=rho_eps, u_eps=u_eps, eps=eps)
    check_bounds(out)
    return out


def check_bounds(reg: RegularizedFields):
    """Assert ``0 <= rho_eps <= B`` and ``|u_eps| <= B`` with ``B = eps^-(2d+1)``."""
    bound = reg.bound * (1.0 + BOUND_RTOL)
    speed = np.sqrt(np.sum(reg.u_eps ** 2, axis=-1))
    if np.any(reg.rho_eps < 0) or np.any(reg.rho_eps > bound) or np.any(speed > bound):
        raise BoundViolation(
            f"regularized fields exceed eps^-(2d+1) = {reg.bound:.6g}: "
            f"max rho_eps {reg.rho_eps.max():.6g}, max |u_eps| {speed.max():.6g}")


def regularize_fields(macro: MacroFieldSet, moll: MollifierSpec) -> RegularizedFields:
    return regularized_from_arrays(np.asarray(macro.rho, dtype=float),
                                   np.asarray(macro.momentum, dtype=float), moll)


def periodic_abs_x(grid: PhaseGrid) -> np.ndarray:
    """Distance of each cell center to the origin on the torus."""
    xs = grid.x_mesh
    per = np.minimum(xs, grid.L - xs)
    return np.sqrt(np.sum(per ** 2, axis=-1))


def floor_term(grid: PhaseGrid, eps: float, q: float) -> np.ndarray:
    """``eps exp(-|v|^2) / (1 + |x|^q)`` on the phase grid."""
    xpart = 1.0 / (1.0 + periodic_abs_x(grid) ** q)
    vpart = np.exp(-grid.v2)
    return eps * np.multiply.outer(xpart, vpart)


def _convolve_zero_padded(values: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    half = weights.size // 2
    moved = np.moveaxis(values, axis, 0)
    out = np.zeros_like(moved)
    n = moved.shape[0]
    for k, wk in enumerate(weights):
        shift = k - half
        if shift >= 0:
            out[shift:] += wk * moved[:n - shift]
        else:
            out[:n + shift] += wk * moved[-shift:]
    return np.moveaxis(out, 0, axis)


def regularize_initial(f0: DistributionField, eps: float, q: float = None) -> DistributionField:
    """``f0 * phi_eps + eps exp(-|v|^2) / (1 + |x|^q)``.

    The mollifier is the product of the 1D bump in every x and v direction;
    x wraps periodically and v is zero-padded at ``+-Vmax``.  When ``eps`` is
    below one velocity cell the v-factor reduces to the identity.
    """
    grid = f0.grid
    d = grid.d
    if q is None:
        q = d + 2.0
    if not q > d:
        raise BadQ(f"q={q} must exceed d={d}")
    moll = make_mollifier(eps, grid)
    vals = f0.values
    for axis in range(d):
        moved = np.moveaxis(vals, axis, 0)
        shp = moved.shape
        conv = kernels.convolve_periodic(moved.reshape(shp[0], -1), moll.weights)
        vals = np.moveaxis(conv.reshape(shp), 0, axis)
    vw = bump_weights(eps, grid.dv) if eps > grid.dv else np.ones(1)
    for axis in range(d, 2 * d):
        vals = _convolve_zero_padded(vals, vw, axis)
    out = np.ascontiguousarray(vals) + floor_term(grid, eps, q)
    if not np.all(out > 0):
        raise NegativeValue("regularized initial data is not strictly positive")
    return DistributionField(grid, out)
