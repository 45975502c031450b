import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bgkbaro import (DistributionField, PhaseGrid, SolverConfig, discrete_moments, make_regime,
                     picard_solve, relax_step, run_splitting, transport_step)
from bgkbaro.errors import (BoundViolation, CFLViolation, ConfigError, EpsUnresolvable,
                            NoConvergence)
from bgkbaro.grid import equilibrium_array
from bgkbaro.regularization import make_mollifier
from bgkbaro.solver import StepGuard, regularized_equilibrium, transport_values


def sine_equilibrium(regime, g, amp=0.3, u0=0.0):
    rho = 1.0 + amp * np.sin(2 * np.pi * g.x_mesh[..., 0] / g.L)
    u = np.zeros(g.x_shape + (g.d,))
    u[..., 0] = u0
    return DistributionField(g, equilibrium_array(regime, g, rho, u)[0])


# ---------------------------------------------------------------------------
# transport
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("d", [1, 2])
def test_transport_constant_in_x(d, rng):
    g = PhaseGrid(d, 1.0, 8, 1.0, 8)
    vals = np.broadcast_to(rng.uniform(size=g.v_shape), g.shape).copy()
    out = transport_step(DistributionField(g, vals), 0.7 * g.dx / g.Vmax).values
    assert np.allclose(out, vals, rtol=1e-14, atol=0)


def test_transport_integer_shift_bit_exact(rng):
    g = PhaseGrid(1, 1.0, 16, 1.0, 4)        # v = +-0.25, +-0.75
    dt = g.dx / 0.25                         # v = 0.25 moves one cell, v = 0.75 three
    vals = rng.uniform(size=g.shape)
    out = transport_values(vals, g, dt)
    for j, v in enumerate(g.v_centers):
        k = int(round(v * dt / g.dx))
        assert np.array_equal(out[:, j], np.roll(vals[:, j], k))


def test_transport_sine_second_order():
    errs = []
    for nx in (32, 64, 128):
        g = PhaseGrid(1, 1.0, nx, 1.0, 4)
        f = np.repeat((1 + 0.5 * np.sin(2 * np.pi * g.x_centers))[:, None], 4, axis=1)
        n = int(math.ceil(4.0 / (0.9 * g.dx)))   # every velocity completes whole periods at T = 4
        v = f.copy()
        for _ in range(n):
            v = transport_values(v, g, 4.0 / n)
        errs.append(np.abs(v - f).sum() * g.dx)
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.8


@given(seed=st.integers(0, 10 ** 6), frac=st.floats(0.0, 1.0))
@pytest.mark.parametrize("d", [1, 2])
def test_transport_mass_and_positivity(d, seed, frac):
    g = PhaseGrid(d, 1.0, 8, 1.0, 4)
    vals = np.random.default_rng(seed).exponential(size=g.shape)
    vals[vals < 0.5] = 0.0
    out = transport_values(vals, g, frac * g.dx / g.Vmax)
    assert out.min() >= 0.0
    vaxes = tuple(range(d))
    assert np.allclose(out.sum(axis=vaxes), vals.sum(axis=vaxes), rtol=1e-13, atol=0)


# ---------------------------------------------------------------------------
# relaxation
# ---------------------------------------------------------------------------

def test_relax_fixed_point(ind1):
    g = PhaseGrid(1, 1.0, 16, 1.5, 64)
    f = DistributionField(g, equilibrium_array(ind1, g, np.ones(16), np.full((16, 1), 0.2))[0])
    # the regularized equilibrium of a constant state is that state's equilibrium
    meq, _ = regularized_equilibrium(f.values, g, ind1, make_mollifier(0.25, g))
    f = DistributionField(g, meq)
    out = relax_step(f, ind1, 0.01, 0.25)
    assert np.max(np.abs(out.values - f.values)) <= 1e-12


def test_relax_long_step_gives_equilibrium(pp1):
    g = PhaseGrid(1, 1.0, 16, 4.0, 64)
    f0 = sine_equilibrium(pp1, g, u0=0.2)
    f = DistributionField(g, transport_values(f0.values, g, g.dx / g.Vmax))
    meq, _ = regularized_equilibrium(f.values, g, pp1, make_mollifier(0.25, g))
    out = relax_step(f, pp1, 50.0, 0.25, relax_eps=1.0)
    assert np.max(np.abs(out.values - meq)) <= 1e-12


def test_relax_hook_closed_form(ind1):
    g = PhaseGrid(1, 1.0, 8, 1.0, 16)
    m0 = np.full(g.shape, 0.4)
    out = relax_step(DistributionField(g, g.zeros()), ind1, 0.3, 0.25, equilibrium=m0)
    assert np.allclose(out.values, (1 - math.exp(-0.3)) * m0, rtol=1e-15, atol=0)


@pytest.mark.parametrize("conservative", [True, False])
def test_relax_conservation(pp1, conservative):
    g = PhaseGrid(1, 1.0, 32, 4.0, 64)
    f = sine_equilibrium(pp1, g, u0=0.2)
    vals = transport_values(f.values, g, g.dx / g.Vmax)
    f = DistributionField(g, vals)
    out = relax_step(f, pp1, 0.05, 0.1, conservative=conservative)
    a, b = discrete_moments(f), discrete_moments(out)
    if conservative:
        assert abs(b.rho.sum() - a.rho.sum()) * g.dx <= 1e-13
        assert np.max(np.abs(b.rho - a.rho)) <= 1e-13
        assert np.max(np.abs(b.momentum - a.momentum)) <= 1e-13
    else:
        # the non-conservative source carries (rho_eps, rho_eps u_eps), which differ at O(eps^2)
        assert np.max(np.abs(b.rho - a.rho)) > 1e-13
    assert out.values.min() >= 0.0


# ---------------------------------------------------------------------------
# splitting runs
# ---------------------------------------------------------------------------

def test_config_validation():
    g = PhaseGrid(1, 1.0, 16, 1.0, 16)
    with pytest.raises(CFLViolation):
        SolverConfig(dt=0.1, T=1.0, reg_eps=0.2).validate(g)
    with pytest.raises(EpsUnresolvable):
        SolverConfig(dt=0.01, T=1.0, reg_eps=0.1).validate(g)
    with pytest.raises(ConfigError) as err:
        SolverConfig(dt=-1.0, T=1.0, reg_eps=2.0, splitting="rk4").validate(g)
    assert len(err.value.violations) == 3


def test_step_lands_on_T():
    cfg = SolverConfig(dt=0.03, T=0.1, reg_eps=0.2)
    assert cfg.nsteps == 3 and cfg.step * cfg.nsteps == pytest.approx(0.1, abs=1e-16)


@pytest.mark.parametrize("d, gamma, vmax, nv", [(1, 3.0, 1.0, 32), (1, 5.0 / 3.0, 3.0, 48), (2, 2.0, 1.0, 16)])
def test_global_equilibrium_stationary(d, gamma, vmax, nv):
    reg = make_regime(d, gamma)
    g = PhaseGrid(d, 1.0, 8, vmax, nv)
    raw = equilibrium_array(reg, g, np.ones(g.x_shape), np.zeros(g.x_shape + (d,)))[0]
    # the scheme relaxes toward M sampled at rho_eps = rho / (1 + eps^(d+1) rho), rescaled to
    # the cell mass, so its global equilibrium is that profile
    f0 = DistributionField(g, regularized_equilibrium(raw, g, reg, make_mollifier(0.25, g))[0])
    cfg = SolverConfig(dt=g.dx / g.Vmax, T=100 * g.dx / g.Vmax, reg_eps=0.25)
    state = run_splitting(f0, reg, cfg, record_meps=False)
    assert state.step_index == 100
    assert np.max(np.abs(state.f.values - f0.values)) <= 1e-10


@pytest.mark.parametrize("splitting", ["lie", "strang"])
@pytest.mark.parametrize("d, gamma, vmax, nv", [(1, 3.0, 1.5, 32), (1, 1.4, 4.0, 48), (2, 1.5, 3.5, 16)])
def test_run_conserves(d, gamma, vmax, nv, splitting):
    reg = make_regime(d, gamma)
    g = PhaseGrid(d, 1.0, 16 if d == 1 else 8, vmax, nv)
    f0 = sine_equilibrium(reg, g, u0=0.2)
    cfg = SolverConfig(dt=g.dx / g.Vmax, T=20 * g.dx / g.Vmax, reg_eps=0.25, relax_eps=0.5,
                       splitting=splitting)
    state = run_splitting(f0, reg, cfg, record_meps=False)
    rep = state.history
    mass = rep.series("mass")
    mom = np.asarray(rep.records["momentum"])
    assert len(rep) == 21
    assert np.max(np.abs(mass - mass[0])) <= 1e-12
    assert np.max(np.abs(mom - mom[0])) <= 1e-12
    assert state.f.values.min() >= 0.0


def test_run_writes_snapshots(tmp_path, ind1):
    g = PhaseGrid(1, 1.0, 16, 1.5, 32)
    cfg = SolverConfig(dt=g.dx / g.Vmax, T=4 * g.dx / g.Vmax, reg_eps=0.25)
    run_splitting(sine_equilibrium(ind1, g), ind1, cfg, out_dir=str(tmp_path), snapshot_every=2,
                  record_meps=False)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["final.bin", "snapshot_000002.bin", "snapshot_000004.bin"]


def test_guard_linf_and_density():
    g = PhaseGrid(1, 1.0, 4, 1.0, 4)
    with pytest.raises(BoundViolation):
        StepGuard(linf_bound=2.0).check(np.full(g.shape, 2.5), g, 3)
    vals = np.ones(g.shape)
    vals[1] = 0.0
    with pytest.raises(BoundViolation):
        StepGuard(strict_density=True).check(vals, g, 1)
    guard = StepGuard(strict_density=True)
    guard.check(np.full(g.shape, 0.5), g, 0)
    assert guard.min_density_seen == pytest.approx(0.5 * 4 * g.dv)


# ---------------------------------------------------------------------------
# Picard
# ---------------------------------------------------------------------------

def test_picard_zero_time(ind1):
    g = PhaseGrid(1, 1.0, 16, 1.5, 32)
    f0 = sine_equilibrium(ind1, g)
    res = picard_solve(f0, ind1, SolverConfig(dt=g.dx / g.Vmax, T=0.0, reg_eps=0.25, scheme="picard"))
    assert res.iterations == 0 and np.array_equal(res.f_T.values, f0.values)


def test_picard_homogeneous(pp1):
    g = PhaseGrid(1, 1.0, 16, 4.0, 32)
    rng = np.random.default_rng(2)
    f0 = DistributionField(g, np.broadcast_to(rng.uniform(size=g.v_shape), g.shape).copy())
    cfg = SolverConfig(dt=g.dx / g.Vmax, T=0.25, reg_eps=0.25, scheme="picard")
    res = picard_solve(f0, pp1, cfg)
    assert res.iterations <= 2


def test_picard_fixed_point_is_lie_splitting(ind1):
    g = PhaseGrid(1, 1.0, 32, 1.5, 48)
    f0 = sine_equilibrium(ind1, g, u0=0.2)
    cfg = SolverConfig(dt=g.dx / g.Vmax, T=0.2, reg_eps=0.2, picard_tol=1e-12, scheme="picard")
    res = picard_solve(f0, ind1, cfg)
    lie = run_splitting(f0, ind1, cfg, record_meps=False)
    diff = np.abs(res.f_T.values - lie.f.values) * (1 + g.v2)
    assert diff.sum() * g.dx * g.dv <= 1e-11
    assert all(r < 1 for r in res.ratios)


def test_picard_no_convergence_reports_trace(ind1):
    g = PhaseGrid(1, 1.0, 16, 1.5, 32)
    cfg = SolverConfig(dt=g.dx / g.Vmax, T=0.25, reg_eps=0.25, picard_max_iter=2, picard_tol=1e-14,
                       scheme="picard")
    with pytest.raises(NoConvergence) as err:
        picard_solve(sine_equilibrium(ind1, g), ind1, cfg)
    assert len(err.value.increments) == 2


def test_picard_memory_cap(ind1):
    g = PhaseGrid(1, 1.0, 16, 1.5, 32)
    cfg = SolverConfig(dt=g.dx / g.Vmax, T=0.25, reg_eps=0.25, picard_max_bytes=1e3, scheme="picard")
    with pytest.raises(ConfigError):
        picard_solve(sine_equilibrium(ind1, g), ind1, cfg)
