"""Run-time certificates for the identities and inequalities of the model.

Margins are signed: negative or zero means satisfied, positive is the size of
the violation.  Inequality margins are compared against
``tol = c1 * dv + c2 * dt``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import (GammaRegime, MacroState, MomentTriple, ball_volume, closed_form_moments,
                          entropy_density, equilibrium_values, macro_entropy_values)
from .errors import WrongBranch, ZeroField
from .grid import PhaseGrid, equilibrium_array, moments_of
from .regularization import periodic_abs_x

CONSERVATION_TOL = 1e-12


def tolerance(dv: float, dt: float, c1: float = 1.0, c2: float = 1.0) -> float:
    return c1 * dv + c2 * dt


# ---------------------------------------------------------------------------
# per-cell quantities
# ---------------------------------------------------------------------------

def cell_entropy(values: np.ndarray, grid: PhaseGrid, regime: GammaRegime) -> np.ndarray:
    """``int H(f) dv`` for every x-cell."""
    vaxes = tuple(range(grid.d, 2 * grid.d))
    return entropy_density(regime, values, grid.v2).sum(axis=vaxes) * grid.dvvol


def cell_equilibrium_entropy(rho, momentum, regime: GammaRegime) -> np.ndarray:
    """``int H(M[f]) dv = eta(rho, u)`` for every x-cell (exact identity)."""
    rho = np.asarray(rho, dtype=float)
    m2 = np.zeros_like(rho)
    mask = rho > 0
    m2[mask] = np.sum(momentum[mask] ** 2, axis=-1) / rho[mask]
    return macro_entropy_values(regime, rho, m2)


def cell_equilibrium_energy(rho, momentum, regime: GammaRegime) -> np.ndarray:
    """``int |v|^2 M[f] dv = rho |u|^2 + d C_d rho^gamma``."""
    return 2.0 * cell_equilibrium_entropy(rho, momentum, regime) + (
        regime.d - 2.0 / (regime.gamma - 1.0)) * regime.C_d * np.asarray(rho) ** regime.gamma


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

REPORT_COLUMNS = ("t", "mass", "momentum", "kinetic_energy", "entropy", "dissipation_M",
                  "dissipation_Meps", "energy_gap_M", "energy_gap_Meps", "min_density",
                  "l_infty", "l_1p2n", "l1", "spatial_moment")


@dataclass
class RunReport:
    """Time-aligned per-step records; ``momentum`` rows have length d."""

    d: int
    dt: float = float("nan")
    dv: float = float("nan")
    relax_eps: float = 1.0
    reg_eps: float = 0.0
    records: dict = field(default_factory=lambda: {k: [] for k in REPORT_COLUMNS})
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records["t"])

    def series(self, key) -> np.ndarray:
        return np.asarray(self.records[key], dtype=float)

    def append(self, **row):
        for key in REPORT_COLUMNS:
            self.records[key].append(row[key])

    def record(self, values, grid: PhaseGrid, regime: GammaRegime, t: float,
               meps_values=None):
        """Evaluate every monitored quantity of ``values`` at time ``t``.

        ``meps_values`` is the regularized equilibrium built from ``values``; when
        omitted the ``*_Meps`` columns are NaN.
        """
        w = grid.dxvol
        rho, mom, e2 = moments_of(values, grid)
        h_cells = cell_entropy(values, grid, regime)
        entropy = float(h_cells.sum() * w)
        eta = cell_equilibrium_entropy(rho, mom, regime)
        energy_m = cell_equilibrium_energy(rho, mom, regime)
        total_e2 = float(e2.sum() * w)
        if meps_values is not None:
            h_meps = float(cell_entropy(meps_values, grid, regime).sum() * w)
            e_meps = float(moments_of(meps_values, grid)[2].sum() * w)
            diss_meps = entropy - h_meps
            gap_meps = total_e2 - e_meps
        else:
            diss_meps = gap_meps = float("nan")
        p = regime.entropy_exponent
        if math.isinf(p):
            lp = float(values.max())
        else:
            lp = float(((values ** p).sum() * w * grid.dvvol) ** (1.0 / p))
        x2 = periodic_abs_x(grid) ** 2
        self.append(
            t=float(t),
            mass=float(rho.sum() * w),
            momentum=[float(x) for x in mom.reshape(-1, grid.d).sum(axis=0) * w],
            kinetic_energy=0.5 * total_e2,
            entropy=entropy,
            dissipation_M=entropy - float(eta.sum() * w),
            dissipation_Meps=diss_meps,
            energy_gap_M=total_e2 - float(energy_m.sum() * w),
            energy_gap_Meps=gap_meps,
            min_density=float(rho.min()),
            l_infty=float(values.max()),
            l_1p2n=lp,
            l1=float(rho.sum() * w),
            spatial_moment=float((x2 * rho).sum() * w),
        )

    def write_csv(self, path):
        d = self.d
        mcols = ["momentum"] if d == 1 else [f"momentum_{a + 1}" for a in range(d)]
        header = []
        for key in REPORT_COLUMNS:
            header += mcols if key == "momentum" else [key]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(len(self)):
                row = []
                for key in REPORT_COLUMNS:
                    val = self.records[key][i]
                    row += [repr(float(x)) for x in val] if key == "momentum" else [repr(float(val))]
                w.writerow(row)


# ---------------------------------------------------------------------------
# conservation
# ---------------------------------------------------------------------------

def conservation_drift(report: RunReport) -> dict:
    """Largest deviation of mass and momentum from their initial values."""
    mass = report.series("mass")
    mom = np.asarray(report.records["momentum"], dtype=float)
    return {"mass": float(np.max(np.abs(mass - mass[0]))),
            "momentum": float(np.max(np.abs(mom - mom[0])))}


# ---------------------------------------------------------------------------
# inequalities
# ---------------------------------------------------------------------------

def check_minimization(values: np.ndarray, grid: PhaseGrid, regime: GammaRegime) -> float:
    """``max_x [ int H(M[f]) dv - int H(f) dv ]`` with the equilibrium side exact.

    Zero cells contribute 0.  For the indicator branch the principle needs
    ``0 <= f <= 1``; callers are responsible for that admissibility.
    """
    rho, mom, _ = moments_of(values, grid)
    gap = cell_equilibrium_entropy(rho, mom, regime) - cell_entropy(values, grid, regime)
    return float(gap.max())


def _trapezoid_cumulative(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _inequality_margin(lhs_state, rate, t, initial, relax_eps):
    lhs = lhs_state + _trapezoid_cumulative(rate, t) / relax_eps
    return float(np.max(lhs[1:] - initial))


def check_entropy_inequality(report: RunReport, variant: str = "M") -> float:
    """``max_{t>0} [ H(t) + (1/relax_eps) int_0^t D ds - H(0) ]`` where ``D`` is the
    dissipation against ``M[f]`` (variant ``"M"``) or the regularized ``M^eps``."""
    if len(report) < 2:
        raise ValueError("entropy check needs at least two records")
    key = "dissipation_M" if variant == "M" else "dissipation_Meps"
    h = report.series("entropy")
    return _inequality_margin(h, report.series(key), report.series("t"), h[0], report.relax_eps)


@dataclass
class EnergyMargins:
    monotone: float
    estimate_M: float
    estimate_Meps: float

    @property
    def worst(self) -> float:
        vals = [v for v in (self.monotone, self.estimate_M, self.estimate_Meps) if not math.isnan(v)]
        return max(vals)


def check_energy_decay(report: RunReport) -> EnergyMargins:
    """Non-increase of ``int |v|^2 f`` and the energy estimate with dissipation
    ``int |v|^2 (f - M)`` for both ``M[f]`` and ``M^eps[f]``."""
    if len(report) < 2:
        raise ValueError("energy check needs at least two records")
    e = 2.0 * report.series("kinetic_energy")
    t = report.series("t")
    monotone = float(np.max(np.diff(e)))
    est_m = _inequality_margin(e, report.series("energy_gap_M"), t, e[0], report.relax_eps)
    gap_meps = report.series("energy_gap_Meps")
    est_meps = (float("nan") if np.any(np.isnan(gap_meps))
                else _inequality_margin(e, gap_meps, t, e[0], report.relax_eps))
    return EnergyMargins(monotone=monotone, estimate_M=est_m, estimate_Meps=est_meps)


def interpolation_ratios(values: np.ndarray, grid: PhaseGrid) -> dict:
    """``||rho||_{(d+2)/d} / (||f||_inf^{2/(d+2)} E^{d/(d+2)})`` and
    ``||rho u||_{(d+2)/(d+1)} / (||f||_inf^{1/(d+2)} E^{(d+1)/(d+2)})``,
    with ``E = int int |v|^2 f``."""
    d = grid.d
    if not np.any(values != 0):
        raise ZeroField("interpolation ratios need a nonzero field")
    rho, mom, e2 = moments_of(values, grid)
    w = grid.dxvol
    energy = float(e2.sum() * w)
    finf = float(np.abs(values).max())
    p_rho = (d + 2.0) / d
    p_mom = (d + 2.0) / (d + 1.0)
    norm_rho = float((np.abs(rho) ** p_rho).sum() * w) ** (1.0 / p_rho)
    speed = np.sqrt(np.sum(mom ** 2, axis=-1))
    norm_mom = float((speed ** p_mom).sum() * w) ** (1.0 / p_mom)
    return {
        "ratio_rho": norm_rho / (finf ** (2.0 / (d + 2)) * energy ** (d / (d + 2.0))),
        "ratio_mom": norm_mom / (finf ** (1.0 / (d + 2)) * energy ** ((d + 1.0) / (d + 2.0))),
    }


def interpolation_constants(d: int) -> dict:
    """Sharp constants of the two interpolation bounds (bathtub argument): the
    density bound is attained by ``||f||_inf 1_{|v| <= R}``, the momentum bound
    by ``||f||_inf 1_{|v - R e_1| <= R}``."""
    w = ball_volume(d)
    k_rho = w ** (2.0 / d) * (d + 2.0) / d
    k_mom = w ** (1.0 / (d + 1)) * (d + 2.0) / (2.0 * d + 2.0)
    return {"ratio_rho": k_rho ** (d / (d + 2.0)), "ratio_mom": k_mom ** ((d + 1.0) / (d + 2.0))}


def check_interpolation(values: np.ndarray, grid: PhaseGrid) -> dict:
    """Ratios minus their sharp constants (signed margins)."""
    ratios = interpolation_ratios(values, grid)
    const = interpolation_constants(grid.d)
    return {k: ratios[k] - const[k] for k in ratios}


def l1p2n_norm(values: np.ndarray, grid: PhaseGrid, regime: GammaRegime) -> float:
    """``||f||_{L^1} + ||f||_{L^{1+2/n}}`` over phase space."""
    w = grid.dxvol * grid.dvvol
    p = regime.entropy_exponent
    a = np.abs(values)
    return float(a.sum() * w + ((a ** p).sum() * w) ** (1.0 / p))


def check_l1p2n_bound(report: RunReport, regime: GammaRegime, initial_values: np.ndarray,
                      grid: PhaseGrid) -> float:
    """``sup_t ||f(t)||_{L^1 cap L^{1+2/n}} - (||f0||_{L^1 cap L^{1+2/n}} + || |v|^2 f0 ||_1)``."""
    if regime.is_indicator:
        raise WrongBranch("the L^{1+2/n} bound concerns the positive-part branch")
    bound = l1p2n_norm(initial_values, grid, regime) + float(
        (np.abs(initial_values) * grid.v2).sum() * grid.dxvol * grid.dvvol)
    sup = float(np.max(report.series("l1") + report.series("l_1p2n")))
    return sup - bound


def check_spatial_moment(report: RunReport, eps: float = None) -> float:
    """Step-wise envelope ``X_{n+1} - X_n <= dt_n (3 X + E + 2 eps)`` with the
    right-hand side taken at the larger endpoint; returns the worst excess."""
    if eps is None:
        eps = report.reg_eps
    x = report.series("spatial_moment")
    e = 2.0 * report.series("kinetic_energy")
    t = report.series("t")
    if len(x) < 2:
        return 0.0
    dt = np.diff(t)
    rhs = dt * (3.0 * np.maximum(x[1:], x[:-1]) + np.maximum(e[1:], e[:-1]) + 2.0 * eps)
    return float(np.max(np.diff(x) - rhs))


def entropy_identity_error(regime: GammaRegime, grid: PhaseGrid, rho, u) -> np.ndarray:
    """``sum_v H(M) dv - eta`` per cell for the discrete equilibrium of ``(rho, u)``."""
    vals, _ = equilibrium_array(regime, grid, rho, u)
    rho_d, mom_d, _ = moments_of(vals, grid)
    return cell_entropy(vals, grid, regime) - cell_equilibrium_entropy(rho_d, mom_d, regime)


# ---------------------------------------------------------------------------
# moment quadrature
# ---------------------------------------------------------------------------

def quadrature_moments(regime: GammaRegime, state: MacroState, vmax: float, nv: int) -> MomentTriple:
    """Midpoint rule for ``(int M, int v M, int |v|^2 M)`` on ``[-vmax, vmax]^d``
    with point values of ``M`` (no moment correction)."""
    d = regime.d
    dv = 2.0 * vmax / nv
    c = -vmax + dv * (np.arange(nv) + 0.5)
    mesh = np.stack(np.meshgrid(*([c] * d), indexing="ij"), axis=-1).reshape(-1, d)
    vals = np.asarray(equilibrium_values(regime, np.array([state.rho]), state.u_array[None, :],
                                         mesh), dtype=float).reshape(-1)
    w = dv ** d
    return MomentTriple(m0=float(vals.sum() * w), m1=(vals[:, None] * mesh).sum(axis=0) * w,
                        m2=float((vals * np.sum(mesh * mesh, axis=1)).sum() * w))


def moment_error(regime: GammaRegime, state: MacroState, vmax: float, nv: int) -> float:
    """``|dm0| + |dm1|_1 + |dm2|`` between quadrature and closed form."""
    q = quadrature_moments(regime, state, vmax, nv)
    cf = closed_form_moments(regime, state)
    return float(abs(q.m0 - cf.m0) + np.abs(np.asarray(q.m1) - np.asarray(cf.m1)).sum()
                 + abs(q.m2 - cf.m2))


@dataclass
class MomentRefinement:
    """Mean error over the states at each ``nv`` and the orders between levels.

    The mean estimates the phase-averaged error, whose scaling is the rule's
    order; the worst case over a finite sample fluctuates with the phases of
    the support edges relative to the grid."""

    levels: tuple
    errors: list
    orders: list
    required_order: float


def moment_refinement(regime: GammaRegime, states, vmax: float,
                      levels=(64, 128, 256)) -> MomentRefinement:
    errors = [float(np.mean([moment_error(regime, s, vmax, nv) for s in states])) for nv in levels]
    orders = [math.log(errors[i] / errors[i + 1]) / math.log(levels[i + 1] / levels[i])
              if errors[i + 1] > 0 else math.inf for i in range(len(levels) - 1)]
    # a jump gives first order; the edge (r^2 - w^2)^(n/2) gives 1 + n/2, capped by the rule
    required = 1.0 if regime.is_indicator else min(2.0, 1.0 + 0.5 * regime.n)
    return MomentRefinement(levels=tuple(levels), errors=errors, orders=orders,
                            required_order=required)
