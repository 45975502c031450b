"""Finite-volume reference solver for the barotropic Euler system

    d_t rho + div(rho u) = 0
    d_t (rho u) + div(rho u (x) u) + grad(C_d rho^gamma) = 0

on the periodic box: MC-limited linear reconstruction of the conserved
variables, Rusanov (local Lax-Friedrichs) interface fluxes, SSP-RK2 in time.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import GammaRegime, macro_entropy_values
from .errors import CFLViolation, GridMismatch, NegativeDensity, ShockDetected, VacuumBreakdown
from .grid import MacroFieldSet

CFL_NUMBER = 0.45
SHOCK_GROWTH = 10.0


@dataclass
class EulerState:
    rho: np.ndarray
    momentum: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.momentum = np.asarray(self.momentum, dtype=float)
        if np.any(self.rho < 0):
            raise NegativeDensity("Euler state has negative density")

    @property
    def d(self) -> int:
        return self.momentum.shape[-1]

    @property
    def velocity(self) -> np.ndarray:
        out = np.zeros_like(self.momentum)
        mask = self.rho > 0
        out[mask] = self.momentum[mask] / self.rho[mask][..., None]
        return out

    def conserved(self) -> np.ndarray:
        return np.concatenate([self.rho[..., None], self.momentum], axis=-1)

    @classmethod
    def from_conserved(cls, q):
        return cls(rho=q[..., 0].copy(), momentum=q[..., 1:].copy())


def euler_flux(regime: GammaRegime, q: np.ndarray, axis: int) -> np.ndarray:
    """Flux of the conserved variables ``q = (rho, m)`` in direction ``axis``:
    ``(m_a, m_a m / rho + C_d rho^gamma e_a)``; zero where ``rho == 0``."""
    rho = q[..., 0]
    m = q[..., 1:]
    out = np.zeros_like(q)
    pos = rho > 0
    ma = m[..., axis]
    out[..., 0] = ma
    safe = np.where(pos, rho, 1.0)
    out[..., 1:] = np.where(pos[..., None], ma[..., None] * m / safe[..., None], 0.0)
    out[..., 1 + axis] += regime.pressure(np.maximum(rho, 0.0))
    return out


def max_wavespeed(regime: GammaRegime, q: np.ndarray, axis: int = None) -> np.ndarray:
    rho = np.maximum(q[..., 0], 0.0)
    safe = np.where(rho > 0, rho, 1.0)
    u = np.where(rho[..., None] > 0, q[..., 1:] / safe[..., None], 0.0)
    speed = np.abs(u[..., axis]) if axis is not None else np.sqrt(np.sum(u * u, axis=-1))
    return speed + regime.sound_speed(rho)


def _mc_limited_slope(q, axis):
    dm = q - np.roll(q, 1, axis=axis)
    dp = np.roll(q, -1, axis=axis) - q
    avg = 0.5 * (dm + dp)
    lim = np.where(avg > 0, np.minimum(avg, np.minimum(2 * dm, 2 * dp)),
                   np.maximum(avg, np.maximum(2 * dm, 2 * dp)))
    return np.where(dm * dp <= 0, 0.0, lim)


def _rhs(regime: GammaRegime, q: np.ndarray, dx: float) -> np.ndarray:
    d = q.shape[-1] - 1
    out = np.zeros_like(q)
    for axis in range(d):
        slope = _mc_limited_slope(q, axis)
        left = q + 0.5 * slope                       # state at the right face of cell i
        right = np.roll(q - 0.5 * slope, -1, axis=axis)  # state at the left face of cell i+1
        fl, fr = euler_flux(regime, left, axis), euler_flux(regime, right, axis)
        a = np.maximum(max_wavespeed(regime, left, axis), max_wavespeed(regime, right, axis))
        face = 0.5 * (fl + fr) - 0.5 * a[..., None] * (right - left)
        out -= (face - np.roll(face, 1, axis=axis)) / dx
    return out


def stable_dt(regime: GammaRegime, state: EulerState, dx: float, cfl: float = CFL_NUMBER) -> float:
    speed = float(np.max(max_wavespeed(regime, state.conserved())))
    return cfl * dx / speed if speed > 0 else np.inf


def fv_step(regime: GammaRegime, state: EulerState, dt: float, dx: float,
            cfl: float = CFL_NUMBER) -> EulerState:
    """One SSP-RK2 step; raises :class:`CFLViolation` above ``cfl * dx / max speed``."""
    limit = stable_dt(regime, state, dx, cfl)
    if dt > limit * (1.0 + 1e-12):
        raise CFLViolation(f"dt={dt:.6g} exceeds the CFL limit {limit:.6g}")
    q0 = state.conserved()
    q1 = q0 + dt * _rhs(regime, q0, dx)
    if np.any(q1[..., 0] < 0):
        raise VacuumBreakdown("negative density in the Euler predictor stage")
    q2 = 0.5 * q0 + 0.5 * (q1 + dt * _rhs(regime, q1, dx))
    if np.any(q2[..., 0] < 0):
        raise VacuumBreakdown("negative density after an Euler step")
    return EulerState.from_conserved(q2)


def max_velocity_gradient(state: EulerState, dx: float) -> float:
    """``max |d u_a / d x_a|`` by centred differences."""
    u = state.velocity
    worst = 0.0
    for axis in range(state.d):
        grad = (np.roll(u[..., axis], -1, axis=axis) - np.roll(u[..., axis], 1, axis=axis)) / (2 * dx)
        worst = max(worst, float(np.max(np.abs(grad))))
    return worst


def max_invariant_gradient(regime: GammaRegime, state: EulerState, dx: float) -> float:
    """``max |d w / d x_a|`` over the Riemann invariants ``w = u_a +- 2c/(gamma-1)``.

    A smooth solution keeps these bounded; they blow up when characteristics
    cross.  Unlike ``du/dx`` they are nonzero for data at rest.
    """
    u = state.velocity
    h = 2.0 * regime.sound_speed(state.rho) / (regime.gamma - 1.0)
    worst = 0.0
    for axis in range(state.d):
        for sign in (1.0, -1.0):
            w = u[..., axis] + sign * h
            grad = (np.roll(w, -1, axis=axis) - np.roll(w, 1, axis=axis)) / (2 * dx)
            worst = max(worst, float(np.max(np.abs(grad))))
    return worst


@dataclass
class EulerRun:
    state: EulerState
    t: float
    steps: int
    series: list = field(default_factory=list)
    gradient_history: list = field(default_factory=list)

    def write_csv(self, path):
        d = self.state.d
        mcols = ["momentum"] if d == 1 else [f"momentum_{a + 1}" for a in range(d)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mass"] + mcols + ["entropy"])
            for row in self.series:
                w.writerow([repr(float(x)) for x in row])


def _totals(regime, state, dxvol, t):
    rho, m = state.rho, state.momentum
    m2 = np.zeros_like(rho)
    pos = rho > 0
    m2[pos] = np.sum(m[pos] ** 2, axis=-1) / rho[pos]
    eta = macro_entropy_values(regime, rho, m2)
    return ([t, float(rho.sum() * dxvol)] + [float(x) for x in m.reshape(-1, state.d).sum(0) * dxvol]
            + [float(eta.sum() * dxvol)])


def run_euler(regime: GammaRegime, state: EulerState, dx: float, T: float,
              cfl: float = CFL_NUMBER, check_shock: bool = False) -> EulerRun:
    """Advance to ``T`` with steps ``cfl * dx / max speed`` (the last one clipped).

    With ``check_shock`` the run raises :class:`ShockDetected` once
    ``max |du/dx|`` exceeds ten times its initial scale, taken as the larger
    of the initial ``max |du/dx|`` and the initial Riemann-invariant gradient
    (data at rest has ``du/dx = 0`` but still steepens).
    """
    dxvol = dx ** state.d
    t = 0.0
    steps = 0
    g0 = max(max_velocity_gradient(state, dx), max_invariant_gradient(regime, state, dx))
    run = EulerRun(state=state, t=0.0, steps=0, series=[_totals(regime, state, dxvol, 0.0)],
                   gradient_history=[g0])
    while t < T * (1.0 - 1e-14):
        dt = min(stable_dt(regime, state, dx, cfl), T - t)
        state = fv_step(regime, state, dt, dx, cfl)
        t = T if dt == T - t else t + dt
        steps += 1
        run.series.append(_totals(regime, state, dxvol, t))
        g = max_velocity_gradient(state, dx)
        run.gradient_history.append(g)
        if check_shock and g > SHOCK_GROWTH * max(g0, 1e-300):
            raise ShockDetected(
                f"max |du/dx| grew past 10x the initial scale {g0:.4g}: now {g:.4g} at t={t:.4g}; T is past shock formation")
    run.state, run.t, run.steps = state, t, steps
    return run


def macro_distance(kin: MacroFieldSet, eul: EulerState, dxvol: float = 1.0) -> dict:
    """Discrete L1 distances of density and momentum (weighted by the cell volume)."""
    if np.shape(kin.rho) != np.shape(eul.rho):
        raise GridMismatch(f"kinetic grid {np.shape(kin.rho)} != Euler grid {np.shape(eul.rho)}")
    return {"l1_rho": float(np.abs(kin.rho - eul.rho).sum() * dxvol),
            "l1_momentum": float(np.abs(kin.momentum - eul.momentum).sum() * dxvol)}


def coarsen(state: EulerState, factor: int = 2) -> EulerState:
    """Average blocks of ``factor`` cells per axis (restriction to a coarser grid)."""
    rho, m = state.rho, state.momentum
    for axis in range(state.d):
        n = rho.shape[axis] // factor
        rho = rho.reshape(rho.shape[:axis] + (n, factor) + rho.shape[axis + 1:]).mean(axis=axis + 1)
        m = m.reshape(m.shape[:axis] + (n, factor) + m.shape[axis + 1:]).mean(axis=axis + 1)
    return EulerState(rho, m)
