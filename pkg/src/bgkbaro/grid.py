"""Phase-space grid: periodic cells in x, truncated uniform cells in v.

Arrays of distribution values have shape ``x_shape + v_shape`` with
``x_shape = (Nx,) * d`` and ``v_shape = (Nv,) * d``.  Quadrature is the
midpoint rule at cell centers throughout.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .equilibrium import GammaRegime
from .errors import (CorrectionFailure, GridTooSmall, NegativeValue, SupportOverflow)

RHO_FLOOR = 1e-14
CORRECTION_LIMIT = 0.5
# supports narrower than this many velocity cells are deposited, not sampled
RESOLVE_CELLS = 2.0


@dataclass(frozen=True)
class PhaseGrid:
    d: int
    L: float
    Nx: int
    Vmax: float
    Nv: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"d={self.d} not supported, use 1 or 2")
        for name in ("Nx", "Nv"):
            n = getattr(self, name)
            if n < 4 or n % 2:
                raise GridTooSmall(f"{name}={n} must be even and >= 4")
        if not (self.L > 0 and self.Vmax > 0):
            raise ValueError("L and Vmax must be positive")

    @property
    def dx(self) -> float:
        return self.L / self.Nx

    @property
    def dv(self) -> float:
        return 2.0 * self.Vmax / self.Nv

    @property
    def x_shape(self) -> tuple:
        return (self.Nx,) * self.d

    @property
    def v_shape(self) -> tuple:
        return (self.Nv,) * self.d

    @property
    def shape(self) -> tuple:
        return self.x_shape + self.v_shape

    @property
    def dxvol(self) -> float:
        return self.dx ** self.d

    @property
    def dvvol(self) -> float:
        return self.dv ** self.d

    @cached_property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.Nx) + 0.5) * self.dx

    @cached_property
    def v_centers(self) -> np.ndarray:
        return -self.Vmax + (np.arange(self.Nv) + 0.5) * self.dv

    @cached_property
    def v_mesh(self) -> np.ndarray:
        """Velocity centers with shape ``v_shape + (d,)``."""
        axes = np.meshgrid(*([self.v_centers] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    @cached_property
    def x_mesh(self) -> np.ndarray:
        axes = np.meshgrid(*([self.x_centers] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    @cached_property
    def v2(self) -> np.ndarray:
        return np.sum(self.v_mesh ** 2, axis=-1)

    @cached_property
    def v2_flat(self) -> np.ndarray:
        return np.ascontiguousarray(self.v2.reshape(-1))

    @cached_property
    def vel_points(self) -> np.ndarray:
        """Flattened velocity centers, shape ``(Nv**d, d)``."""
        return np.ascontiguousarray(self.v_mesh.reshape(-1, self.d))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


@dataclass
class DistributionField:
    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise NegativeValue("distribution contains non-finite values")
        if np.any(self.values < 0):
            raise NegativeValue(f"distribution has negative values (min {self.values.min():.3e})")


@dataclass
class MacroFieldSet:
    """Cell-wise density, momentum (trailing axis d) and ``int |v|^2 f dv``."""

    rho: np.ndarray
    momentum: np.ndarray
    second_moment: np.ndarray = field(default=None)

    @property
    def velocity(self) -> np.ndarray:
        out = np.zeros_like(self.momentum)
        mask = self.rho > RHO_FLOOR
        out[mask] = self.momentum[mask] / self.rho[mask][..., None]
        return out


def moments_of(values: np.ndarray, grid: PhaseGrid):
    """``(rho, momentum, second_moment)`` arrays from raw distribution values."""
    nvt = grid.Nv ** grid.d
    flat = values.reshape(-1, nvt)
    rho, mom, e = kernels.moments(flat, grid.vel_points, grid.v2_flat)
    dvv = grid.dvvol
    return (rho.reshape(grid.x_shape) * dvv, mom.reshape(grid.x_shape + (grid.d,)) * dvv,
            e.reshape(grid.x_shape) * dvv)


def discrete_moments(f: DistributionField) -> MacroFieldSet:
    rho, mom, e = moments_of(f.values, f.grid)
    return MacroFieldSet(rho=rho, momentum=mom, second_moment=e)


# ---------------------------------------------------------------------------
# discrete equilibrium
# ---------------------------------------------------------------------------

@dataclass
class EquilibriumInfo:
    """Bookkeeping of one discrete-equilibrium evaluation."""

    max_correction: float
    raw_mass_error: np.ndarray
    raw_momentum_error: np.ndarray
    deposited_cells: int


def _deposit(grid: PhaseGrid, rho_t, m_t):
    """Cloud-in-cell deposit of mass ``rho_t`` at velocity ``m_t / rho_t``.

    The (bi)linear weights reproduce mass and momentum exactly.
    """
    d = grid.d
    nc = rho_t.size
    out = np.zeros((nc, grid.Nv ** d))
    u = m_t / rho_t[:, None]
    pos = (u + grid.Vmax) / grid.dv - 0.5
    i0 = np.floor(pos).astype(np.int64)
    frac = pos - i0
    if np.any(i0 < 0) or np.any(i0 + 1 > grid.Nv - 1):
        raise SupportOverflow("bulk velocity of an under-resolved cell leaves the velocity grid")
    scale = rho_t / grid.dvvol
    rows = np.arange(nc)
    for corner in np.ndindex(*([2] * d)):
        weight = scale.copy()
        flat = np.zeros(nc, dtype=np.int64)
        for a, bit in enumerate(corner):
            weight *= frac[:, a] if bit else 1.0 - frac[:, a]
            flat = flat * grid.Nv + i0[:, a] + bit
        out[rows, flat] += weight
    return out.reshape((nc,) + grid.v_shape)


def equilibrium_array(regime: GammaRegime, grid: PhaseGrid, rho_s, u_s, rho_t=None, m_t=None):
    """Sample ``M(rho_s, u_s)`` on ``grid`` and reweight each x-cell so that its
    discrete mass and momentum equal ``rho_t`` and ``m_t`` (defaults: ``rho_s``
    and ``rho_s u_s``).

    Returns ``(values, EquilibriumInfo)``.
    """
    d = grid.d
    rho_s = np.asarray(rho_s, dtype=float)
    u_s = np.asarray(u_s, dtype=float)
    if rho_t is None:
        rho_t = rho_s
        m_t = rho_s[..., None] * u_s
    nc = rho_s.size
    rs = np.ascontiguousarray(rho_s.reshape(nc))
    us = np.ascontiguousarray(u_s.reshape(nc, d))
    rt = np.ascontiguousarray(np.asarray(rho_t, dtype=float).reshape(nc))
    mt = np.ascontiguousarray(np.asarray(m_t, dtype=float).reshape(nc, d))
    if np.any(rs < 0) or np.any(rt < 0):
        raise CorrectionFailure("negative target or sampling density")
    reach = regime.radius(rs) + np.linalg.norm(us, axis=1)
    if np.any(reach > grid.Vmax):
        worst = int(np.argmax(reach))
        raise SupportOverflow(
            f"equilibrium support reaches |v| = {reach[worst]:.6g} > Vmax = {grid.Vmax:.6g} "
            f"(rho={rs[worst]:.6g}, |u|={np.linalg.norm(us[worst]):.6g})")
    half_n = 0.0 if regime.is_indicator else regime.n / 2.0
    c = 1.0 if regime.is_indicator else regime.c
    c_d = regime.c_d if regime.is_indicator else 0.0
    thresh = (RESOLVE_CELLS * grid.dv) ** 2
    vals, corr, err_mass, err_mom, status = kernels.sample_equilibrium(
        rs, us, rt, mt, grid.vel_points, grid.dvvol, regime.is_indicator, c_d, c, half_n,
        regime.gamma, d, thresh)
    vals = vals.reshape((nc,) + grid.v_shape)
    dep = np.flatnonzero(status == 1)
    if dep.size:
        vals[dep] = _deposit(grid, rt[dep], mt[dep])
    max_corr = float(corr.max()) if nc else 0.0
    if max_corr > CORRECTION_LIMIT or np.any(vals < 0):
        worst = int(np.argmax(corr))
        raise CorrectionFailure(
            f"moment correction {corr[worst]:.3g} exceeds {CORRECTION_LIMIT} "
            f"(rho={rs[worst]:.6g}); refine the velocity grid")
    info = EquilibriumInfo(max_correction=max_corr,
                           raw_mass_error=err_mass.reshape(rho_s.shape),
                           raw_momentum_error=err_mom.reshape(rho_s.shape),
                           deposited_cells=int(dep.size))
    return vals.reshape(grid.shape), info


def discrete_equilibrium(regime: GammaRegime, macro: MacroFieldSet, grid: PhaseGrid,
                         return_info: bool = False):
    vals, info = equilibrium_array(regime, grid, macro.rho, macro.velocity,
                                   macro.rho, macro.momentum)
    f = DistributionField(grid, vals)
    return (f, info) if return_info else f


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def norms(f: DistributionField, regime: GammaRegime = None) -> dict:
    """Discrete ``L1``, ``L1_2``, ``L_inf`` and (given a positive-part regime)
    ``L^{1+2/n}`` norms over the whole phase space."""
    g = f.grid
    a = np.abs(f.values)
    w = g.dxvol * g.dvvol
    out = {
        "l1": float(a.sum() * w),
        "l1_2": float((a * (1.0 + g.v2)).sum() * w),
        "l_infty": float(a.max()) if a.size else 0.0,
        "l_1p2n": None,
    }
    if regime is not None:
        p = regime.entropy_exponent
        out["l_1p2n"] = out["l_infty"] if math.isinf(p) else float(((a ** p).sum() * w) ** (1.0 / p))
    return out


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------

_HEADER_END = "end_header"


def write_snapshot(path, f: DistributionField, time: float = 0.0, gamma: float = float("nan")):
    """Text header (``key = value`` lines) followed by little-endian float64 values."""
    g = f.grid
    header = (f"bgkbaro snapshot\nd = {g.d}\nL = {g.L!r}\nNx = {g.Nx}\nVmax = {g.Vmax!r}\n"
              f"Nv = {g.Nv}\ntime = {float(time)!r}\ngamma = {float(gamma)!r}\n{_HEADER_END}\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`; returns ``(field, time, gamma)``."""
    with open(path, "rb") as fh:
        meta = {}
        first = fh.readline().decode("utf-8").strip()
        if first != "bgkbaro snapshot":
            raise ValueError(f"{path} is not a snapshot file")
        while True:
            line = fh.readline().decode("utf-8").strip()
            if line == _HEADER_END:
                break
            if not line:
                raise ValueError("truncated snapshot header")
            key, _, val = line.partition("=")
            meta[key.strip()] = val.strip()
        raw = fh.read()
    grid = PhaseGrid(d=int(meta["d"]), L=float(meta["L"]), Nx=int(meta["Nx"]),
                     Vmax=float(meta["Vmax"]), Nv=int(meta["Nv"]))
    values = np.frombuffer(raw, dtype="<f8").reshape(grid.shape).copy()
    return DistributionField(grid, values), float(meta["time"]), float(meta["gamma"])


def write_macro_csv(path, macro: MacroFieldSet, grid: PhaseGrid):
    d = grid.d
    xs = grid.x_mesh.reshape(-1, d)
    rho = macro.rho.reshape(-1)
    mom = macro.momentum.reshape(-1, d)
    e = None if macro.second_moment is None else macro.second_moment.reshape(-1)
    xcols = ["x"] if d == 1 else [f"x{a + 1}" for a in range(d)]
    mcols = ["m"] if d == 1 else [f"m{a + 1}" for a in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(xcols + ["rho"] + mcols + (["e"] if e is not None else []))
        for i in range(rho.size):
            row = [repr(float(x)) for x in xs[i]] + [repr(float(rho[i]))]
            row += [repr(float(m)) for m in mom[i]]
            if e is not None:
                row.append(repr(float(e[i])))
            w.writerow(row)
