"""Experiment drivers shared by the command line and the acceptance suite:
simulation runs, the hydrodynamic-limit sweep and the verification suites."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import diagnostics as dg
from .config import ExperimentConfig
from .equilibrium import MacroState, closed_form_moments
from .euler import EulerState, coarsen, macro_distance, run_euler
from .errors import SupportOverflow
from .geometry import CASES, lipschitz_ratio_survey
from .grid import MacroFieldSet, discrete_moments, write_macro_csv
from .solver import PICARD, picard_solve, run_splitting

LIPSCHITZ_DRIFT = 0.10
MOMENT_CONST = 10.0
MOMENT_RHO_MIN = 0.2


@dataclass
class Margin:
    """Signed ``value`` checked against ``tol``: satisfied iff ``value <= tol``."""

    name: str
    value: float
    tol: float

    @property
    def ok(self) -> bool:
        return bool(self.value <= self.tol)


@dataclass
class SuiteResult:
    suite: str
    margins: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(m.ok for m in self.margins)

    @property
    def worst(self) -> Optional[Margin]:
        """The margin furthest past (or closest to) its tolerance."""
        if not self.margins:
            return None
        return max(self.margins, key=lambda m: m.value - m.tol)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["name", "value", "tol", "ok"])
            for m in self.margins:
                w.writerow([m.name, repr(float(m.value)), repr(float(m.tol)), int(m.ok)])


def _ensure_dir(path):
    if path:
        os.makedirs(path, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@dataclass
class Simulation:
    config: ExperimentConfig
    f0: object
    f_T: object
    report: Optional[dg.RunReport] = None
    picard: object = None


def simulate(cfg: ExperimentConfig, out_dir: Optional[str] = None, record_meps: bool = True) -> Simulation:
    """Run the configured scheme; writes ``run.csv``, ``macro_final.csv`` and
    snapshots when ``out_dir`` is given."""
    grid = cfg.grid()
    regime = cfg.regime()
    f0 = cfg.initial_field(grid)
    strict = cfg.strict_density or cfg.regularize
    _ensure_dir(out_dir)
    if cfg.solver.scheme == PICARD:
        res = picard_solve(f0, regime, cfg.solver, strict_density=strict)
        if out_dir:
            with open(os.path.join(out_dir, "picard.csv"), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["iteration", "increment"])
                for k, inc in enumerate(res.increments):
                    w.writerow([k + 1, repr(float(inc))])
            write_macro_csv(os.path.join(out_dir, "macro_final.csv"), discrete_moments(res.f_T), grid)
        return Simulation(config=cfg, f0=f0, f_T=res.f_T, picard=res)
    state = run_splitting(f0, regime, cfg.solver, out_dir=out_dir, snapshot_every=cfg.snapshot_every,
                          strict_density=strict, record_meps=record_meps)
    if out_dir:
        state.history.write_csv(os.path.join(out_dir, "run.csv"))
        write_macro_csv(os.path.join(out_dir, "macro_final.csv"), discrete_moments(state.f), grid)
    return Simulation(config=cfg, f0=f0, f_T=state.f, report=state.history)


def run_margins(sim: Simulation) -> SuiteResult:
    """Every run-level certificate against ``tol = c1 dv + c2 dt`` (scaled)."""
    cfg = sim.config
    rep = sim.report
    grid = sim.f0.grid
    regime = cfg.regime()
    scale = cfg.tolerance_scale
    tol = scale * dg.tolerance(grid.dv, cfg.solver.step, cfg.c1, cfg.c2)
    out = SuiteResult("entropy")
    drift = dg.conservation_drift(rep)
    out.margins += [Margin("mass_drift", drift["mass"], scale * dg.CONSERVATION_TOL),
                    Margin("momentum_drift", drift["momentum"], scale * dg.CONSERVATION_TOL)]
    out.margins += [Margin("entropy_M", dg.check_entropy_inequality(rep, "M"), tol),
                    Margin("entropy_Meps", dg.check_entropy_inequality(rep, "Meps"), tol)]
    em = dg.check_energy_decay(rep)
    out.margins += [Margin("energy_monotone", em.monotone, tol),
                    Margin("energy_M", em.estimate_M, tol),
                    Margin("energy_Meps", em.estimate_Meps, tol)]
    out.margins.append(Margin("spatial_moment", dg.check_spatial_moment(rep), tol))
    admissible_min = not regime.is_indicator or (
        sim.f0.values.max() <= 1.0 and sim.f_T.values.max() <= 1.0)
    if admissible_min:
        worst = max(dg.check_minimization(sim.f0.values, grid, regime),
                    dg.check_minimization(sim.f_T.values, grid, regime))
        out.margins.append(Margin("minimization", worst, tol))
    if not regime.is_indicator:
        out.margins.append(Margin("l1p2n_bound", dg.check_l1p2n_bound(rep, regime, sim.f0.values, grid), tol))
    out.info["min_density_seen"] = rep.meta.get("min_density_seen")
    out.info["tol"] = tol
    return out


# ---------------------------------------------------------------------------
# hydrodynamic limit
# ---------------------------------------------------------------------------

@dataclass
class LimitRow:
    eps: float
    l1_rho: float
    l1_momentum: float
    order_rho: float = math.nan
    order_momentum: float = math.nan


@dataclass
class LimitStudy:
    rows: list
    floor: dict
    reference: EulerState

    @property
    def monotone(self) -> bool:
        r = self.rows
        return all(r[i + 1].l1_rho < r[i].l1_rho and r[i + 1].l1_momentum < r[i].l1_momentum
                   for i in range(len(r) - 1))

    @property
    def min_order(self) -> float:
        orders = [x for row in self.rows[1:] for x in (row.order_rho, row.order_momentum)]
        return min(orders) if orders else math.nan

    def write_csv(self, path):
        with_order = len(self.rows) > 1
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "l1_rho", "l1_momentum"] + (["order_rho", "order_momentum"] if with_order else []))
            for row in self.rows:
                vals = [row.eps, row.l1_rho, row.l1_momentum]
                if with_order:
                    vals += [row.order_rho, row.order_momentum]
                w.writerow([repr(float(x)) for x in vals])

    def table(self) -> str:
        with_order = len(self.rows) > 1
        head = f"{'eps':>8} {'l1_rho':>12} {'l1_momentum':>12}"
        if with_order:
            head += f" {'order_rho':>10} {'order_mom':>10}"
        lines = [head]
        for row in self.rows:
            line = f"{row.eps:8.4g} {row.l1_rho:12.5e} {row.l1_momentum:12.5e}"
            if with_order:
                line += f" {row.order_rho:10.3f} {row.order_momentum:10.3f}"
            lines.append(line)
        return "\n".join(lines)


def _order(d_a, d_b, eps_a, eps_b):
    if d_a <= 0 or d_b <= 0:
        return math.nan
    return math.log(d_a / d_b) / math.log(eps_a / eps_b)


def limit_study(cfg: ExperimentConfig, eps_list=None, out_dir: Optional[str] = None) -> LimitStudy:
    """Kinetic runs per ``relax_eps`` against a double-resolution Euler reference.

    The Euler data are the discrete moments of the kinetic initial field; the
    floor is the distance between the Euler runs at ``Nx`` and ``2 Nx``, and
    orders are computed on ``distance - floor``.  Raises ``ShockDetected``
    if the Euler run steepens before ``T``.
    """
    eps_list = tuple(cfg.eps_list if eps_list is None else eps_list)
    grid = cfg.grid()
    regime = cfg.regime()
    f0 = cfg.initial_field(grid)
    mac = discrete_moments(f0)
    T = cfg.solver.T
    coarse = run_euler(regime, EulerState(mac.rho, mac.momentum), grid.dx, T, check_shock=True)
    fine0 = EulerState(mac.rho, mac.momentum)
    for axis in range(grid.d):
        fine0 = EulerState(np.repeat(fine0.rho, 2, axis=axis), np.repeat(fine0.momentum, 2, axis=axis))
    fine = run_euler(regime, fine0, 0.5 * grid.dx, T)
    ref = coarsen(fine.state, 2)
    floor = macro_distance(MacroFieldSet(coarse.state.rho, coarse.state.momentum), ref, grid.dxvol)
    strict = cfg.strict_density or cfg.regularize
    rows = []
    for eps in eps_list:
        solver = cfg.with_overrides({"solver.relax_eps": eps}).solver
        state = run_splitting(f0, regime, solver, strict_density=strict, record_meps=False)
        dist = macro_distance(discrete_moments(state.f), ref, grid.dxvol)
        rows.append(LimitRow(eps=eps, l1_rho=dist["l1_rho"], l1_momentum=dist["l1_momentum"]))
    for a, b in zip(rows[:-1], rows[1:]):
        b.order_rho = _order(a.l1_rho - floor["l1_rho"], b.l1_rho - floor["l1_rho"], a.eps, b.eps)
        b.order_momentum = _order(a.l1_momentum - floor["l1_momentum"],
                                  b.l1_momentum - floor["l1_momentum"], a.eps, b.eps)
    study = LimitStudy(rows=rows, floor=floor, reference=ref)
    if out_dir:
        _ensure_dir(out_dir)
        study.write_csv(os.path.join(out_dir, "limit_study.csv"))
        coarse.write_csv(os.path.join(out_dir, "euler_reference.csv"))
    return study


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

def random_states(cfg: ExperimentConfig, count: int):
    """Deterministic states with ``rho`` in ``[max(C0, 0.2), C1]`` and ``|u| <= C2``."""
    d = cfg.d
    c0, c1, c2 = cfg.bounds
    rng = np.random.default_rng([cfg.seed, 17])
    states = []
    for _ in range(count):
        rho = rng.uniform(max(c0, MOMENT_RHO_MIN), c1)
        direction = rng.normal(size=d)
        direction /= np.linalg.norm(direction)
        u = direction * c2 * rng.uniform() ** (1.0 / d)
        states.append(MacroState(rho, u))
    return states


def verify_moments(cfg: ExperimentConfig) -> SuiteResult:
    """Quadrature moments of ``M`` against the closed forms under ``Nv`` doubling."""
    regime = cfg.regime()
    states = random_states(cfg, cfg.states)
    reach = max(float(regime.radius(s.rho)) + float(np.linalg.norm(s.u_array)) for s in states)
    if reach > cfg.Vmax:
        raise SupportOverflow(f"sampled supports reach |v| = {reach:.4g} > Vmax = {cfg.Vmax:g}")
    ref = dg.moment_refinement(regime, states, cfg.Vmax, cfg.levels)
    out = SuiteResult("moments", info={"levels": ref.levels, "errors": ref.errors, "orders": ref.orders})
    for i, order in enumerate(ref.orders):
        out.margins.append(Margin(f"order_{ref.levels[i]}_{ref.levels[i + 1]}",
                                  ref.required_order - order, 0.0))
    dv = 2.0 * cfg.Vmax / ref.levels[-1]
    out.margins.append(Margin("finest_error", ref.errors[-1],
                              cfg.tolerance_scale * MOMENT_CONST * dv ** ref.required_order))
    if regime.is_indicator and regime.d == 1:
        cf = closed_form_moments(regime, MacroState(1.0, [0.3]))
        exact = abs(cf.m0 - 1.0) + abs(float(cf.m1[0]) - 0.3) + abs(cf.m2 - (0.09 + 1.0 / 12.0))
        out.margins.append(Margin("closed_form_1_0.3", exact, cfg.tolerance_scale * 1e-14))
    return out


def verify_lipschitz(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> SuiteResult:
    """Ratio survey at ``samples`` and ``2 samples``; the sup must be finite and
    move by at most 10% (scaled)."""
    regime = cfg.regime()
    first = lipschitz_ratio_survey(regime, cfg.bounds, cfg.samples, seed=cfg.seed, keep_rows=bool(out_dir))
    second = lipschitz_ratio_survey(regime, cfg.bounds, 2 * cfg.samples, seed=cfg.seed)
    drift = abs(second.sup_ratio - first.sup_ratio) / first.sup_ratio
    out = SuiteResult("lipschitz", info={"sup_ratio": first.sup_ratio, "sup_ratio_doubled": second.sup_ratio,
                                         "case_counts": dict(second.case_counts)})
    out.margins.append(Margin("sup_finite", 0.0 if math.isfinite(first.sup_ratio) else math.inf, 0.0))
    out.margins.append(Margin("sup_drift", drift, cfg.tolerance_scale * LIPSCHITZ_DRIFT))
    if out_dir:
        _ensure_dir(out_dir)
        first.write_csv(os.path.join(out_dir, "lipschitz.csv"))
    return out


def verify_entropy(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> SuiteResult:
    sim = simulate(cfg, out_dir=out_dir)
    return run_margins(sim)


def verify_interpolation(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> SuiteResult:
    """Both interpolation ratios at the start and end of a run against their sharp
    constants, with relative slack ``c1 dv`` for the lattice count of a ball."""
    sim = simulate(cfg, out_dir=out_dir, record_meps=False)
    grid = sim.f0.grid
    const = dg.interpolation_constants(grid.d)
    slack = cfg.tolerance_scale * cfg.c1 * grid.dv
    out = SuiteResult("interpolation")
    for label, f in (("t0", sim.f0), ("tT", sim.f_T)):
        for key, excess in dg.check_interpolation(f.values, grid).items():
            out.margins.append(Margin(f"{key}_{label}", excess, slack * const[key]))
    return out


SUITES = {
    "moments": lambda cfg, out: verify_moments(cfg),
    "lipschitz": verify_lipschitz,
    "entropy": verify_entropy,
    "interpolation": verify_interpolation,
}


def case_counts_total(results) -> dict:
    total = {c: 0 for c in CASES}
    for res in results:
        for c, n in res.case_counts.items():
            total[c] += n
    return total
