import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from bgkbaro import (INDICATOR, POSITIVE_PART, MacroState, closed_form_moments, eval_equilibrium,
                     kinetic_entropy_density, macro_entropy, make_regime, support_radius)
from bgkbaro.equilibrium import admissible, equilibrium_values
from bgkbaro.errors import GammaOutOfRange, NegativeDensity, NegativeValue


def quad_moments_1d(regime, rho, u):
    r = support_radius(regime, rho)
    m = lambda v: eval_equilibrium(regime, MacroState(rho, [u]), [v])
    lo, hi = u - r, u + r
    return [integrate.quad(lambda v: v ** k * m(v), lo, hi, epsabs=1e-13, epsrel=1e-12)[0]
            for k in range(3)]


def quad_moments_2d(regime, rho, u):
    r = support_radius(regime, rho)
    out = []
    for weight in (lambda s: 1.0, lambda s: s * s):
        # polar coordinates about u = 0
        val = integrate.quad(
            lambda s: 2 * math.pi * s * weight(s) * eval_equilibrium(regime, MacroState(rho, u), [s, 0.0]),
            0.0, r, epsabs=1e-13, epsrel=1e-12)[0]
        out.append(val)
    return out


@pytest.mark.parametrize("d, gamma, c_d", [(1, 3.0, 0.5), (2, 2.0, 1.0 / math.pi)])
def test_indicator_constants(d, gamma, c_d):
    reg = make_regime(d, gamma)
    assert reg.branch == INDICATOR
    assert reg.c_d == pytest.approx(c_d, rel=1e-15)


def test_positive_part_normalization_by_quadrature():
    reg = make_regime(1, 5.0 / 3.0)
    assert reg.branch == POSITIVE_PART
    assert reg.n == pytest.approx(2.0, abs=1e-14)
    assert reg.C_d == 1.0
    m0, _, _ = quad_moments_1d(reg, 1.0, 0.0)
    assert m0 == pytest.approx(1.0, rel=1e-11)
    # n = 2: c * int (5 - v^2) dv over |v| <= sqrt 5 = c * 20 sqrt5 / 3
    assert reg.c == pytest.approx(3.0 / (20.0 * math.sqrt(5.0)), rel=1e-13)


@pytest.mark.parametrize("d, gamma", [(1, 1.0), (1, 3.5), (2, 1.8), (2, 3.0), (3, 1.5)])
def test_gamma_out_of_range(d, gamma):
    with pytest.raises(GammaOutOfRange):
        make_regime(d, gamma)


@pytest.mark.parametrize("d, gamma", [(1, 3.0), (1, 2.5), (1, 1.2), (2, 2.0), (2, 1.5), (2, 1.1)])
def test_admissible_set(d, gamma):
    assert admissible(d, gamma)


def test_branch_selected_by_exact_gamma():
    assert make_regime(1, 3.0 - 1e-13).branch == INDICATOR
    assert make_regime(1, 3.0 - 1e-9).branch == POSITIVE_PART


@pytest.mark.parametrize("d, gamma, rho, r", [
    (2, 2.0, math.pi, 1.0),
    (1, 3.0, 1.0, 0.5),
    (1, 5.0 / 3.0, 1.0, math.sqrt(5.0)),
])
def test_support_radius_examples(d, gamma, rho, r):
    assert support_radius(make_regime(d, gamma), rho) == pytest.approx(r, rel=1e-14)


def test_support_radius_negative(ind1):
    with pytest.raises(NegativeDensity):
        support_radius(ind1, -1.0)


@pytest.mark.parametrize("v, expected", [(0.4, 1.0), (0.6, 0.0)])
def test_indicator_values(ind1, v, expected):
    assert eval_equilibrium(ind1, MacroState(1.0, [0.0]), [v]) == expected


def test_positive_part_center_value(pp1):
    assert eval_equilibrium(pp1, MacroState(1.0, [0.0]), [0.0]) == pytest.approx(5.0 * pp1.c, rel=1e-14)


def test_closed_form_paper_example(ind1):
    m = closed_form_moments(ind1, MacroState(1.0, [0.3]))
    assert m.m0 == 1.0
    assert float(m.m1[0]) == pytest.approx(0.3, abs=1e-16)
    assert m.m2 == pytest.approx(0.09 + 1.0 / 12.0, abs=1e-15)


@pytest.mark.parametrize("d, gamma", [(1, 3.0), (1, 5.0 / 3.0), (2, 2.0), (2, 1.5)])
def test_closed_form_zero_density(d, gamma):
    m = closed_form_moments(make_regime(d, gamma), MacroState(0.0, [0.2] * d))
    assert m.m0 == 0.0 and m.m2 == 0.0
    assert np.all(np.asarray(m.m1) == 0.0)


def test_closed_form_2d_indicator(ind2):
    m = closed_form_moments(ind2, MacroState(1.0, [0.0, 0.0]))
    assert ind2.C_d == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-14)
    assert m.m2 == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)
    m0, m2 = quad_moments_2d(ind2, 1.0, [0.0, 0.0])
    assert m0 == pytest.approx(1.0, rel=1e-10)
    assert m2 == pytest.approx(m.m2, rel=1e-10)


@pytest.mark.parametrize("gamma", [3.0, 5.0 / 3.0, 2.0, 1.4, 1.2])
@pytest.mark.parametrize("rho, u", [(1.0, 0.0), (0.3, -0.7), (2.5, 1.1)])
def test_closed_form_matches_quadrature_1d(gamma, rho, u):
    reg = make_regime(1, gamma)
    m = closed_form_moments(reg, MacroState(rho, [u]))
    q = quad_moments_1d(reg, rho, u)
    assert q[0] == pytest.approx(m.m0, rel=1e-9)
    assert q[1] == pytest.approx(float(m.m1[0]), rel=1e-9, abs=1e-12)
    assert q[2] == pytest.approx(m.m2, rel=1e-9)


@pytest.mark.parametrize("gamma", [2.0, 1.5, 1.25])
def test_closed_form_matches_quadrature_2d(gamma):
    reg = make_regime(2, gamma)
    m = closed_form_moments(reg, MacroState(1.7, [0.0, 0.0]))
    m0, m2 = quad_moments_2d(reg, 1.7, [0.0, 0.0])
    assert m0 == pytest.approx(m.m0, rel=1e-9)
    assert m2 == pytest.approx(m.m2, rel=1e-9)


def test_kinetic_entropy_examples(ind2, pp1):
    assert kinetic_entropy_density(ind2, 0.0, [1.0, 2.0]) == 0.0
    assert kinetic_entropy_density(ind2, 1.0, [2.0, 0.0]) == 2.0
    assert kinetic_entropy_density(pp1, 1.0, [1.0]) == pytest.approx(0.5 + 1.0 / (4.0 * pp1.c), rel=1e-14)
    with pytest.raises(NegativeValue):
        kinetic_entropy_density(pp1, -0.1, [0.0])


def test_macro_entropy_examples(ind1, pp1):
    assert macro_entropy(ind1, MacroState(0.0, [0.0])) == 0.0
    assert macro_entropy(ind1, MacroState(1.0, [0.0])) == pytest.approx(1.0 / 24.0, rel=1e-14)
    assert macro_entropy(pp1, MacroState(1.0, [1.0])) == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("gamma", [3.0, 5.0 / 3.0, 1.4])
@pytest.mark.parametrize("rho, u", [(1.0, 0.0), (1.0, 1.0), (0.4, -0.5)])
def test_entropy_of_equilibrium_is_eta(gamma, rho, u):
    reg = make_regime(1, gamma)
    st_ = MacroState(rho, [u])
    r = support_radius(reg, rho)
    h = lambda v: kinetic_entropy_density(reg, eval_equilibrium(reg, st_, [v]), [v])
    val = integrate.quad(h, u - r, u + r, epsabs=1e-13, epsrel=1e-12)[0]
    assert val == pytest.approx(macro_entropy(reg, st_), rel=1e-9)


rhos = st.floats(0.0, 5.0)
vels = st.floats(-3.0, 3.0)


@given(rho=rhos, u=vels, shift=vels, v=st.floats(-6.0, 6.0))
@pytest.mark.parametrize("gamma", [3.0, 5.0 / 3.0])
def test_galilean_invariance(gamma, rho, u, shift, v):
    reg = make_regime(1, gamma)
    a = eval_equilibrium(reg, MacroState(rho, [u]), [v])
    b = eval_equilibrium(reg, MacroState(rho, [u + shift]), [v + shift])
    assert b == pytest.approx(a, rel=1e-9, abs=1e-12)


@given(a=rhos, b=rhos)
@pytest.mark.parametrize("d, gamma", [(1, 3.0), (1, 1.4), (2, 2.0), (2, 1.5)])
def test_radius_monotone(d, gamma, a, b):
    reg = make_regime(d, gamma)
    lo, hi = sorted((a, b))
    assert support_radius(reg, lo) <= support_radius(reg, hi)


@given(rho=rhos, u=vels, w=st.floats(0.0, 4.0))
def test_values_vectorized_match_scalar(rho, u, w):
    reg = make_regime(1, 1.4)
    v = np.array([[u - w], [u + w]])
    vec = equilibrium_values(reg, rho, np.array([u]), v)
    assert vec[0] == pytest.approx(vec[1], rel=1e-12, abs=1e-300)
    assert vec[0] == pytest.approx(eval_equilibrium(reg, MacroState(rho, [u]), [u - w]), rel=1e-12)
