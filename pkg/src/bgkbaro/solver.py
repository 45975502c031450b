"""Time stepping: free transport, exponential relaxation and the Picard iteration.

The relaxation step uses the mild formula over one step with the equilibrium
frozen,

    f <- exp(-dt/relax_eps) f + (1 - exp(-dt/relax_eps)) M_eps[f],

where ``M_eps[f]`` is the equilibrium sampled at the regularized fields
``(rho_eps, u_eps)``.  In conservative mode (the default) it is reweighted to
carry the discrete mass and momentum of ``f``; otherwise it carries
``(rho_eps, rho_eps u_eps)``, as in the regularized equation itself.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .diagnostics import RunReport
from .equilibrium import GammaRegime
from .errors import (BoundViolation, CFLViolation, ConfigError, EpsUnresolvable,
                     NegativeValue, NoConvergence)
from .grid import DistributionField, PhaseGrid, equilibrium_array, moments_of, write_snapshot
from .regularization import MollifierSpec, make_mollifier, regularized_from_arrays

SPLITTING = "splitting"
PICARD = "picard"
SHIFT_SNAP = 1e-12
LINF_SLACK = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    T: float
    reg_eps: float
    relax_eps: float = 1.0
    picard_tol: float = 1e-8
    picard_max_iter: int = 30
    scheme: str = SPLITTING
    splitting: str = "lie"
    conservative: bool = True
    picard_max_bytes: float = 2e9

    @property
    def nsteps(self) -> int:
        return max(0, int(round(self.T / self.dt)))

    @property
    def step(self) -> float:
        """Step actually taken: ``T / nsteps`` so that the run ends exactly at ``T``."""
        n = self.nsteps
        return self.T / n if n else self.dt

    def validate(self, grid: PhaseGrid):
        problems = []
        if not self.dt > 0:
            problems.append("dt must be > 0")
        if not self.T >= 0:
            problems.append("T must be >= 0")
        if not self.relax_eps > 0:
            problems.append("relax_eps must be > 0")
        if not self.picard_tol > 0:
            problems.append("picard_tol must be > 0")
        if self.scheme not in (SPLITTING, PICARD):
            problems.append(f"scheme must be {SPLITTING!r} or {PICARD!r}")
        if self.splitting not in ("lie", "strang"):
            problems.append("splitting must be 'lie' or 'strang'")
        if not 0 < self.reg_eps <= 1:
            problems.append("reg_eps must lie in (0, 1]")
        if problems:
            raise ConfigError("; ".join(problems), problems)
        if self.dt > grid.dx / grid.Vmax * (1.0 + 1e-12):
            raise CFLViolation(f"dt={self.dt} exceeds dx/Vmax={grid.dx / grid.Vmax}")
        if self.reg_eps < 2.0 * grid.dx * (1.0 - 1e-12):
            raise EpsUnresolvable(f"reg_eps={self.reg_eps} is below two cells (dx={grid.dx})")


# ---------------------------------------------------------------------------
# substeps
# ---------------------------------------------------------------------------

def transport_values(values: np.ndarray, grid: PhaseGrid, dt: float) -> np.ndarray:
    """Shift ``f(., v)`` by ``v dt`` on the periodic x-grid, one axis at a time."""
    d = grid.d
    out = values
    for axis in range(d):
        shifts = grid.v_centers * dt / grid.dx
        near = np.round(shifts)
        shifts = np.where(np.abs(shifts - near) < SHIFT_SNAP, near, shifts)
        # velocity component first, x-axis last so the kernel reads contiguous rows
        moved = np.moveaxis(out, (d + axis, axis), (0, -1))
        shp = moved.shape
        g = np.ascontiguousarray(moved).reshape(shp[0], -1, shp[-1])
        res = kernels.shift_columns(g, shifts).reshape(shp)
        out = np.moveaxis(res, (0, -1), (d + axis, axis))
    return np.ascontiguousarray(out)


def transport_step(f: DistributionField, dt: float) -> DistributionField:
    return DistributionField(f.grid, transport_values(f.values, f.grid, dt))


@dataclass
class RelaxInfo:
    max_correction: float
    deposited_cells: int
    min_rho_eps: float
    max_rho_eps: float
    max_u_eps: float


def regularized_equilibrium(values: np.ndarray, grid: PhaseGrid, regime: GammaRegime,
                            moll: MollifierSpec, conservative: bool = True):
    """``M_eps[f]`` on the grid plus its bookkeeping."""
    rho, mom, _ = moments_of(values, grid)
    reg = regularized_from_arrays(rho, mom, moll)
    if conservative:
        rho_t, m_t = rho, mom
    else:
        rho_t, m_t = reg.rho_eps, reg.rho_eps[..., None] * reg.u_eps
    meq, info = equilibrium_array(regime, grid, reg.rho_eps, reg.u_eps, rho_t, m_t)
    speed = np.sqrt(np.sum(reg.u_eps ** 2, axis=-1))
    rinfo = RelaxInfo(max_correction=info.max_correction, deposited_cells=info.deposited_cells,
                      min_rho_eps=float(reg.rho_eps.min()), max_rho_eps=float(reg.rho_eps.max()),
                      max_u_eps=float(speed.max()))
    return meq, rinfo


def relax_values(values, meq, dt, relax_eps):
    decay = math.exp(-dt / relax_eps)
    return decay * values + (1.0 - decay) * meq


def relax_step(f: DistributionField, regime: GammaRegime, dt: float, reg_eps: float,
               relax_eps: float = 1.0, conservative: bool = True,
               equilibrium: Optional[np.ndarray] = None) -> DistributionField:
    """One mild-formula step.  ``equilibrium`` replaces ``M_eps[f]`` (test hook)."""
    if equilibrium is None:
        moll = make_mollifier(reg_eps, f.grid)
        equilibrium, _ = regularized_equilibrium(f.values, f.grid, regime, moll, conservative)
    return DistributionField(f.grid, relax_values(f.values, equilibrium, dt, relax_eps))


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

@dataclass
class RunState:
    f: DistributionField
    t: float
    step_index: int
    history: RunReport


@dataclass
class StepGuard:
    """Per-step assertions: nonnegativity, the indicator L-infinity bound and,
    for regularized initial data, strictly positive density."""

    linf_bound: Optional[float] = None
    strict_density: bool = False
    min_density_seen: float = math.inf

    def check(self, values: np.ndarray, grid: PhaseGrid, step: int):
        vmin = float(values.min())
        if vmin < 0 or not np.isfinite(vmin):
            raise NegativeValue(f"negative distribution value {vmin:.3e} at step {step}")
        if self.linf_bound is not None:
            vmax = float(values.max())
            if vmax > self.linf_bound + LINF_SLACK:
                raise BoundViolation(
                    f"||f||_inf = {vmax:.15g} exceeds ||f0||_inf + 1 = {self.linf_bound:.15g} "
                    f"at step {step}")
        if self.strict_density:
            rho = values.sum(axis=tuple(range(grid.d, 2 * grid.d)))
            rmin = float(rho.min())
            if not rmin > 0:
                raise BoundViolation(f"density vanished at step {step}")
            self.min_density_seen = min(self.min_density_seen, rmin * grid.dvvol)


def _make_guard(values, regime, strict_density):
    bound = float(values.max()) + 1.0 if regime.is_indicator else None
    return StepGuard(linf_bound=bound, strict_density=strict_density)


def run_splitting(f0: DistributionField, regime: GammaRegime, config: SolverConfig,
                  out_dir: Optional[str] = None, snapshot_every: int = 0,
                  strict_density: bool = False, record_meps: bool = True,
                  callback: Optional[Callable] = None) -> RunState:
    """Lie (transport then relax) or Strang (half transport, relax, half transport)
    splitting up to ``T``; every step is recorded in the returned report."""
    grid = f0.grid
    config.validate(grid)
    moll = make_mollifier(config.reg_eps, grid)
    dt = config.step
    report = RunReport(d=grid.d, dt=dt, dv=grid.dv, relax_eps=config.relax_eps,
                       reg_eps=config.reg_eps)
    values = np.ascontiguousarray(f0.values, dtype=float)
    guard = _make_guard(values, regime, strict_density)
    guard.check(values, grid, 0)

    def _record(vals, t):
        meps = None
        if record_meps:
            meps, _ = regularized_equilibrium(vals, grid, regime, moll, config.conservative)
        report.record(vals, grid, regime, t, meps_values=meps)

    _record(values, 0.0)
    strang = config.splitting == "strang"
    for n in range(config.nsteps):
        if strang:
            values = transport_values(values, grid, 0.5 * dt)
        else:
            values = transport_values(values, grid, dt)
        meq, _ = regularized_equilibrium(values, grid, regime, moll, config.conservative)
        values = relax_values(values, meq, dt, config.relax_eps)
        if strang:
            values = transport_values(values, grid, 0.5 * dt)
        guard.check(values, grid, n + 1)
        t = (n + 1) * dt
        _record(values, t)
        if out_dir and snapshot_every and (n + 1) % snapshot_every == 0:
            write_snapshot(os.path.join(out_dir, f"snapshot_{n + 1:06d}.bin"),
                           DistributionField(grid, values), t, regime.gamma)
        if callback is not None:
            callback(n + 1, t, values)
    report.meta["min_density_seen"] = guard.min_density_seen
    final = DistributionField(grid, values)
    if out_dir:
        write_snapshot(os.path.join(out_dir, "final.bin"), final, config.nsteps * dt, regime.gamma)
    return RunState(f=final, t=config.nsteps * dt, step_index=config.nsteps, history=report)


@dataclass
class PicardResult:
    f_T: DistributionField
    iterations: int
    increments: list = field(default_factory=list)

    @property
    def ratios(self) -> list:
        inc = self.increments
        return [inc[k + 1] / inc[k] for k in range(len(inc) - 1) if inc[k] > 0]


def _l12(values, grid):
    return float((np.abs(values) * (1.0 + grid.v2)).sum() * grid.dxvol * grid.dvvol)


def picard_solve(f0: DistributionField, regime: GammaRegime, config: SolverConfig,
                 strict_density: bool = False) -> PicardResult:
    """Global-in-time Picard iteration with the source frozen from the previous iterate.

    Iterate ``k+1`` is marched with the Lie step
    ``f_{n+1} = e^{-dt/eps} S f_n + (1 - e^{-dt/eps}) M^k_{n+1}`` where ``S`` is the
    transport and ``M^k_{n+1}`` the regularized equilibrium of ``S f^k_n`` stored
    from iterate ``k``; the fixed point is therefore the Lie splitting solution.
    Iterate 0 is ``f0`` at every time.  Stops when
    ``max_n ||f^{k+1}_n - f^k_n||_{L^1_2} < picard_tol``.
    """
    grid = f0.grid
    config.validate(grid)
    nsteps = config.nsteps
    values0 = np.ascontiguousarray(f0.values, dtype=float)
    if nsteps == 0:
        return PicardResult(f_T=DistributionField(grid, values0.copy()), iterations=0)
    need = 2.0 * (nsteps + 1) * values0.nbytes
    if need > config.picard_max_bytes:
        raise ConfigError(f"Picard trajectory needs {need:.3g} bytes, above picard_max_bytes",
                          ["picard_max_bytes"])
    moll = make_mollifier(config.reg_eps, grid)
    dt = config.step
    decay = math.exp(-dt / config.relax_eps)
    guard = _make_guard(values0, regime, strict_density)
    traj = np.empty((nsteps + 1,) + values0.shape)
    traj[:] = values0
    increments = []
    for k in range(config.picard_max_iter):
        sources = np.empty((nsteps,) + values0.shape)
        for n in range(nsteps):
            moved = transport_values(traj[n], grid, dt)
            sources[n], _ = regularized_equilibrium(moved, grid, regime, moll, config.conservative)
        new = np.empty_like(traj)
        new[0] = values0
        for n in range(nsteps):
            new[n + 1] = decay * transport_values(new[n], grid, dt) + (1.0 - decay) * sources[n]
            guard.check(new[n + 1], grid, n + 1)
        inc = max(_l12(new[n] - traj[n], grid) for n in range(1, nsteps + 1))
        increments.append(inc)
        traj = new
        if inc < config.picard_tol:
            return PicardResult(f_T=DistributionField(grid, traj[-1].copy()), iterations=k + 1,
                                increments=increments)
    raise NoConvergence(
        f"Picard iteration did not reach {config.picard_tol:g} in {config.picard_max_iter} "
        f"iterations (last increment {increments[-1]:.3e})", increments)
