"""Geometry of two equilibrium supports and the weighted L1 distance between them.

The support of an equilibrium is the ball of radius ``r(rho)`` around ``u``.
Two such balls are classified into the four configurations

* ``D1``: disjoint, ``U > r_f + r_g``;
* ``D2``: partial overlap with ``U^2 > |r_f^2 - r_g^2|``;
* ``D3``: partial overlap with ``U^2 <= |r_f^2 - r_g^2|``;
* ``D4``: nested, ``U <= |r_f - r_g|``;

where ``U = |u_f - u_g|``.  Two routes compute
``int (1 + |v|^2) |M_f - M_g| dv``: a midpoint-rule oracle on a uniform grid and
a fast route that rotates the centers onto the last axis and integrates
exactly along velocity lines (see :func:`bgkbaro.kernels.l12_pair`).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from . import kernels
from .equilibrium import GammaRegime, MacroState, equilibrium_values, sphere_area
from .errors import (BadAngle, BadBounds, EmptySurvey, GridTooSmall, NegativeDensity,
                     OutsideIntersection, WrongBranch, ZeroVector)

CASES = ("D1", "D2", "D3", "D4")
RATIO_CUTOFF = 1e-10
ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class BallPairGeometry:
    """Two support balls, canonicalized so that ``r_f >= r_g``."""

    r_f: float
    r_g: float
    u_f: tuple
    u_g: tuple
    U: float
    case_id: str
    theta_f: Optional[float] = None
    theta_g: Optional[float] = None
    theta_tilde: Optional[float] = None
    swapped: bool = False


def _clipped_arccos(x):
    if abs(x) > 1.0 + ANGLE_TOL:
        return None
    return math.acos(min(1.0, max(-1.0, x)))


def classify_balls(r_f, u_f, r_g, u_g) -> BallPairGeometry:
    """Classify two balls given radii and centers."""
    u_f = tuple(float(x) for x in np.atleast_1d(u_f))
    u_g = tuple(float(x) for x in np.atleast_1d(u_g))
    swapped = r_f < r_g
    if swapped:
        r_f, r_g, u_f, u_g = r_g, r_f, u_g, u_f
    U = math.dist(u_f, u_g)
    if U > r_f + r_g:
        case = "D1"
    elif U <= abs(r_f - r_g):
        case = "D4"
    elif U * U > abs(r_f * r_f - r_g * r_g):
        case = "D2"
    else:
        case = "D3"
    theta_f = theta_g = theta_tilde = None
    if case in ("D2", "D3"):
        # (r_f^2 - r_g^2) / U is bounded by r_f + r_g here, so no product underflows
        q = (r_f - r_g) * (r_f + r_g) / U
        theta_f = _clipped_arccos((U + q) / (2.0 * r_f))
        theta_g = _clipped_arccos((U - q) / (2.0 * r_g))
        theta_tilde = _clipped_arccos((q - U) / (2.0 * r_g))
    return BallPairGeometry(r_f=float(r_f), r_g=float(r_g), u_f=u_f, u_g=u_g, U=U,
                            case_id=case, theta_f=theta_f, theta_g=theta_g,
                            theta_tilde=theta_tilde, swapped=swapped)


def classify_case(regime: GammaRegime, rho_f, u_f, rho_g, u_g) -> BallPairGeometry:
    if rho_f < 0 or rho_g < 0:
        raise NegativeDensity(f"densities must be >= 0, got {rho_f!r}, {rho_g!r}")
    return classify_balls(float(regime.radius(rho_f)), u_f, float(regime.radius(rho_g)), u_g)


# ---------------------------------------------------------------------------
# spherical caps
# ---------------------------------------------------------------------------

def sine_power_integral(k: int, theta: float) -> float:
    """``int_0^theta sin^k`` via the reduction formula, closed form for every k."""
    if k == 0:
        return theta
    if k == 1:
        return 1.0 - math.cos(theta)
    s, c = math.sin(theta), math.cos(theta)
    return -s ** (k - 1) * c / k + (k - 1) / k * sine_power_integral(k - 2, theta)


def _check_cap_args(d, r, theta):
    if d < 2:
        raise ValueError("caps need d >= 2")
    if r < 0:
        raise ValueError(f"radius {r!r} must be >= 0")
    if not (-ANGLE_TOL <= theta <= 0.5 * math.pi + ANGLE_TOL):
        raise BadAngle(f"theta={theta!r} outside [0, pi/2]")
    return min(max(theta, 0.0), 0.5 * math.pi)


def cap_volume(d: int, r: float, theta: float) -> float:
    """Volume of the cap ``{z >= r cos(theta)}`` of the d-ball of radius r."""
    theta = _check_cap_args(d, r, theta)
    s, c = math.sin(theta), math.cos(theta)
    inner = -s ** (d - 1) * c / (d - 1) + sine_power_integral(d - 2, theta)
    return sphere_area(d - 2) / d * r ** d * inner


def cap_first_moment(d: int, r: float, theta: float) -> float:
    """``int_cap z dv`` with z the axial coordinate measured from the ball center."""
    theta = _check_cap_args(d, r, theta)
    s, c = math.sin(theta), math.cos(theta)
    return sphere_area(d - 2) / ((d - 1) * (d + 1)) * r ** (d + 1) * s ** (d - 1) * (1.0 - c * c)


# ---------------------------------------------------------------------------
# rotations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotationToAxis:
    R: np.ndarray

    def apply(self, w):
        return np.asarray(w, dtype=float) @ self.R.T


def rotation_to_axis(w) -> RotationToAxis:
    """Orthogonal ``R`` with ``R w = |w| e_d``, composed of Givens rotations in the
    planes ``(k, d)`` for ``k = 1..d-1``.

    For ``d = 1`` the only orthogonal maps are ``+-1``; ``-1`` is returned for
    negative ``w`` even though it is a reflection.
    """
    w = np.atleast_1d(np.asarray(w, dtype=float))
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        raise ZeroVector("cannot rotate the zero vector")
    d = w.size
    if d == 1:
        return RotationToAxis(np.array([[math.copysign(1.0, w[0])]]))
    R = np.eye(d)
    cur = w.copy()
    last = d - 1
    for k in range(d - 1):
        rad = math.hypot(cur[k], cur[last])
        if rad == 0.0:
            continue
        c, s = cur[last] / rad, cur[k] / rad
        G = np.eye(d)
        G[k, k] = c
        G[k, last] = -s
        G[last, k] = s
        G[last, last] = c
        cur = G @ cur
        R = G @ R
    return RotationToAxis(R)


# ---------------------------------------------------------------------------
# weighted distance between two equilibria
# ---------------------------------------------------------------------------

def _require_fits(regime, state_f, state_g, vmax):
    need = max(float(regime.radius(state_f.rho)) + float(np.linalg.norm(state_f.u_array)),
               float(regime.radius(state_g.rho)) + float(np.linalg.norm(state_g.u_array)))
    if need > vmax:
        raise GridTooSmall(f"supports reach |v| = {need:.6g} beyond Vmax = {vmax:.6g}")


def _midpoint_l12(regime, state_f, state_g, vmax, nv):
    dv = 2.0 * vmax / nv
    axis = -vmax + (np.arange(nv) + 0.5) * dv
    if regime.d == 1:
        v = axis[:, None]
        diff = np.abs(equilibrium_values(regime, state_f.rho, state_f.u_array, v)
                      - equilibrium_values(regime, state_g.rho, state_g.u_array, v))
        return float(np.sum((1.0 + axis ** 2) * diff) * dv)
    v1, v2 = np.meshgrid(axis, axis, indexing="ij")
    v = np.stack([v1, v2], axis=-1)
    diff = np.abs(equilibrium_values(regime, state_f.rho, state_f.u_array, v)
                  - equilibrium_values(regime, state_g.rho, state_g.u_array, v))
    return float(np.sum((1.0 + v1 ** 2 + v2 ** 2) * diff) * dv ** 2)


def l12_refinement_levels(regime: GammaRegime, state_f: MacroState, state_g: MacroState,
                          v_grid, levels: int = 3) -> list:
    """Midpoint-rule values of ``int (1+|v|^2)|M_f - M_g| dv`` on ``Nv, 2 Nv, 4 Nv, ...``
    cells per axis.  ``v_grid`` is anything exposing ``Vmax`` and ``Nv``."""
    vmax, nv = float(v_grid.Vmax), int(v_grid.Nv)
    _require_fits(regime, state_f, state_g, vmax)
    return [_midpoint_l12(regime, state_f, state_g, vmax, nv * 2 ** k) for k in range(levels)]


def l12_equilibrium_distance(regime: GammaRegime, state_f: MacroState, state_g: MacroState,
                             v_grid, levels: int = 3) -> float:
    """Oracle value of the weighted distance: the finest of ``levels`` midpoint refinements.

    The spread between levels (see :func:`l12_refinement_levels`) certifies the
    error.  No extrapolation is applied: for the indicator branch the midpoint
    error oscillates with the position of the support edges inside a cell.
    """
    return l12_refinement_levels(regime, state_f, state_g, v_grid, levels)[-1]


def l12_distance(regime: GammaRegime, state_f: MacroState, state_g: MacroState) -> float:
    """Fast route: rotate ``u_g - u_f`` onto ``e_d`` and integrate exactly along lines."""
    d = regime.d
    rf = float(regime.radius(state_f.rho))
    rg = float(regime.radius(state_g.rho))
    uf, ug = state_f.u_array, state_g.u_array
    if d == 1:
        a, bf, bg = 0.0, float(uf[0]), float(ug[0])
    elif d == 2:
        w = ug - uf
        if np.linalg.norm(w) == 0.0:
            R = np.eye(2)
        else:
            R = rotation_to_axis(w).R
        ruf, rug = R @ uf, R @ ug
        a, bf, bg = float(ruf[0]), float(ruf[1]), float(rug[1])
    else:
        raise ValueError("fast distance is implemented for d in {1, 2}")
    half_n = 0.0 if regime.is_indicator else regime.n / 2.0
    c = 1.0 if regime.is_indicator else regime.c
    return float(kernels.l12_pair(d, rf, rg, a, bf, bg, regime.is_indicator, c, half_n))


# ---------------------------------------------------------------------------
# Lipschitz survey
# ---------------------------------------------------------------------------

@dataclass
class SurveyResult:
    sup_ratio: float
    argmax_pair: tuple
    case_counts: dict
    rows: list = field(repr=False, default_factory=list)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_index", "rho_f", "rho_g", "U", "case_id", "distance", "ratio"])
            for row in self.rows:
                w.writerow([row[0]] + [repr(float(x)) if not isinstance(x, str) else x
                                       for x in row[1:]])


def sample_pair(regime: GammaRegime, bounds, seed: int, index: int):
    """Draw one pair ``(rho, u)`` x 2 from a generator keyed on ``(seed, index)``.

    Densities are uniform in ``[C0, C1]``; velocities uniform in the ball ``|u| <= C2``.
    """
    c0, c1, c2 = bounds
    rng = np.random.default_rng([int(seed), int(index)])
    rho = rng.uniform(c0, c1, size=2)
    d = regime.d
    us = []
    for _ in range(2):
        direction = rng.normal(size=d)
        direction /= np.linalg.norm(direction)
        us.append(c2 * rng.uniform() ** (1.0 / d) * direction)
    return MacroState(rho[0], us[0]), MacroState(rho[1], us[1])


def lipschitz_ratio_survey(regime: GammaRegime, bounds, samples: int, seed: int = 0,
                           keep_rows: bool = False) -> SurveyResult:
    """Sup of ``distance / (|rho_f - rho_g| + |u_f - u_g|)`` over random pairs.

    ``bounds`` is ``(C0, C1, C2)`` or a mapping with those keys.  Pairs whose
    denominator is below ``1e-10`` are skipped.  Sample ``i`` depends only on
    ``(seed, i)``, so the first ``N`` samples of a ``2N`` survey are those of the
    ``N`` survey.
    """
    if isinstance(bounds, dict):
        bounds = (bounds["C0"], bounds["C1"], bounds["C2"])
    c0, c1, c2 = (float(b) for b in bounds)
    if min(c0, c1, c2) < 0 or c0 > c1:
        raise BadBounds(f"need 0 <= C0 <= C1 and C2 >= 0, got {bounds!r}")
    if not regime.is_indicator and c0 <= 0:
        raise BadBounds("the positive-part branch needs a positive density floor C0")
    if samples <= 0:
        raise EmptySurvey("survey needs at least one sample")
    best, arg = -math.inf, None
    counts = {c: 0 for c in CASES}
    rows = []
    for i in range(samples):
        sf, sg = sample_pair(regime, (c0, c1, c2), seed, i)
        U = float(np.linalg.norm(sf.u_array - sg.u_array))
        denom = abs(sf.rho - sg.rho) + U
        geo = classify_case(regime, sf.rho, sf.u, sg.rho, sg.u)
        counts[geo.case_id] += 1
        if denom < RATIO_CUTOFF:
            continue
        dist = l12_distance(regime, sf, sg)
        ratio = dist / denom
        if keep_rows:
            rows.append((i, sf.rho, sg.rho, U, geo.case_id, dist, ratio))
        if ratio > best:
            best, arg = ratio, (sf, sg)
    if arg is None:
        raise EmptySurvey("every sampled pair fell below the denominator cutoff")
    return SurveyResult(sup_ratio=best, argmax_pair=arg, case_counts=counts, rows=rows)


# ---------------------------------------------------------------------------
# pointwise bound for the positive-part branch
# ---------------------------------------------------------------------------

def mean_value_bound(regime: GammaRegime, state_f: MacroState, state_g: MacroState, v) -> float:
    """Upper bound on ``|M_f(v) - M_g(v)|`` from the mean value theorem.

    With ``A_h = r_h^2 - |v - u_h|^2`` the bound reads
    ``C (|r_f - r_g| + |u_f - u_g| (1 + |v|)) int_0^1 (t A_f + (1-t) A_g)^(n/2-1) dt``
    with ``C = c n/2 max(r_f + r_g, 2 + |u_f| + |u_g|)``.
    """
    if regime.is_indicator:
        raise WrongBranch("mean value bound applies to the positive-part branch")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    uf, ug = state_f.u_array, state_g.u_array
    rf, rg = float(regime.radius(state_f.rho)), float(regime.radius(state_g.rho))
    af = rf * rf - float((v - uf) @ (v - uf))
    ag = rg * rg - float((v - ug) @ (v - ug))
    expo = regime.n / 2.0 - 1.0
    if af < 0 or ag < 0 or (expo < 0 and min(af, ag) <= 0):
        raise OutsideIntersection(f"v={v.tolist()} is not inside both supports")
    if expo == 0.0:
        theta_int = 1.0
    else:
        theta_int, _ = integrate.quad(lambda t: (t * af + (1.0 - t) * ag) ** expo, 0.0, 1.0,
                                      epsabs=1e-10, epsrel=1e-10, limit=200)
    const = regime.c * regime.n / 2.0 * max(rf + rg, 2.0 + np.linalg.norm(uf) + np.linalg.norm(ug))
    U = float(np.linalg.norm(uf - ug))
    return float(const * (abs(rf - rg) + U * (1.0 + np.linalg.norm(v))) * theta_int)


def arcsin_bound_holds(x, C: float = 0.5 * math.pi) -> bool:
    """``arcsin x <= C x`` on ``[0, 1]`` (equality at ``x = 1`` when ``C = pi/2``)."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise ValueError("arcsin bound is stated on [0, 1]")
    return bool(np.all(np.arcsin(x) <= C * x * (1.0 + 1e-15) + 1e-300))
