"""Hot numerical kernels.

Every kernel exists twice: a loop version compiled by numba (``*_nb``) and a
vectorized numpy version (``*_np``).  The public wrappers at the bottom pick
one according to :data:`bgkbaro._accel.USE_NUMBA`; both paths are kept in
step by the test-suite and timed against each other in
``benchmarks/bench_kernels.py``.
"""
from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit

# Gauss-Legendre nodes mapped through s = (1 - cos(phi))/2, phi in [0, pi].
# The cosine map absorbs square-root behaviour at piece endpoints.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_PHI = 0.5 * math.pi * (_GL_X + 1.0)
COS_FRAC = 0.5 * (1.0 - np.cos(_PHI))
COS_JAC = 0.25 * math.pi * np.sin(_PHI) * _GL_W

_GL_X_OUT, _GL_W_OUT = np.polynomial.legendre.leggauss(32)
_PHI_OUT = 0.5 * math.pi * (_GL_X_OUT + 1.0)
COS_FRAC_OUT = 0.5 * (1.0 - np.cos(_PHI_OUT))
COS_JAC_OUT = 0.25 * math.pi * np.sin(_PHI_OUT) * _GL_W_OUT


# ---------------------------------------------------------------------------
# transport: flux-form semi-Lagrangian shift with MC-limited linear profiles
# ---------------------------------------------------------------------------

@njit
def _mc_slope(dm, dp):
    if dm * dp <= 0.0:
        return 0.0
    s = 0.5 * (dm + dp)
    a = 2.0 * dm
    b = 2.0 * dp
    if s > 0.0:
        return min(s, min(a, b))
    return max(s, max(a, b))


@njit
def shift_columns_nb(g, shifts):
    """Shift ``g[j, m, :]`` periodically by ``shifts[j]`` cells (x is the last axis)."""
    nv, nm, nx = g.shape
    out = np.empty_like(g)
    gs = np.empty(nx + 2)
    flux = np.empty(nx + 1)
    for j in range(nv):
        s = shifts[j]
        k = int(math.floor(s))
        a = s - k
        start = (-k - 1) % nx
        for m in range(nm):
            # gs[1 + i] = g[(i - k) % nx] for i = -1 .. nx
            src = start
            for i in range(nx + 2):
                gs[i] = g[j, m, src]
                src += 1
                if src == nx:
                    src = 0
            if a == 0.0:
                for i in range(nx):
                    out[j, m, i] = gs[i + 1]
                continue
            for i in range(nx + 1):
                dm = gs[i] - gs[i - 1] if i > 0 else gs[0] - gs[nx - 1]
                dp = gs[i + 1] - gs[i]
                flux[i] = a * (gs[i] + 0.5 * (1.0 - a) * _mc_slope(dm, dp))
            for i in range(nx):
                out[j, m, i] = gs[i + 1] - flux[i + 1] + flux[i]
    return out


def shift_columns_np(g, shifts):
    k = np.floor(shifts).astype(np.int64)
    a = (shifts - k)[:, None, None]
    gs = np.empty_like(g)
    for kk in np.unique(k):
        rows = k == kk
        gs[rows] = np.roll(g[rows], int(kk), axis=-1)
    dm = gs - np.roll(gs, 1, axis=-1)
    dp = np.roll(gs, -1, axis=-1) - gs
    avg = 0.5 * (dm + dp)
    lim = np.where(avg > 0.0,
                   np.minimum(avg, np.minimum(2.0 * dm, 2.0 * dp)),
                   np.maximum(avg, np.maximum(2.0 * dm, 2.0 * dp)))
    slope = np.where(dm * dp <= 0.0, 0.0, lim)
    flux = a * (gs + 0.5 * (1.0 - a) * slope)
    out = gs - flux + np.roll(flux, 1, axis=-1)
    # exact integer shifts must stay bit-exact
    whole = (shifts - k) == 0.0
    if np.any(whole):
        out[whole] = gs[whole]
    return out


# ---------------------------------------------------------------------------
# velocity moments with a fixed summation order
# ---------------------------------------------------------------------------

@njit
def moments_nb(vals, vel, v2):
    """Per-row ``(sum f, sum v f, sum |v|^2 f)`` for ``vals`` of shape (cells, K), d <= 2."""
    nc, nk = vals.shape
    d = vel.shape[1]
    rho = np.zeros(nc)
    mom = np.zeros((nc, d))
    e = np.zeros(nc)
    for c in range(nc):
        r = 0.0
        ee = 0.0
        m0 = 0.0
        m1 = 0.0
        for k in range(nk):
            f = vals[c, k]
            r += f
            ee += v2[k] * f
            m0 += vel[k, 0] * f
            if d > 1:
                m1 += vel[k, 1] * f
        rho[c] = r
        e[c] = ee
        mom[c, 0] = m0
        if d > 1:
            mom[c, 1] = m1
    return rho, mom, e


def moments_np(vals, vel, v2):
    return vals.sum(axis=1), vals @ vel, vals @ v2


# ---------------------------------------------------------------------------
# discrete equilibrium with moment matching
# ---------------------------------------------------------------------------

@njit
def _solve_small(a, b):
    """Gaussian elimination with partial pivoting for tiny dense systems."""
    n = b.shape[0]
    a = a.copy()
    b = b.copy()
    for col in range(n):
        piv = col
        for r in range(col + 1, n):
            if abs(a[r, col]) > abs(a[piv, col]):
                piv = r
        if a[piv, col] == 0.0:
            return b, False
        if piv != col:
            for q in range(n):
                tmp = a[col, q]
                a[col, q] = a[piv, q]
                a[piv, q] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        for r in range(col + 1, n):
            fac = a[r, col] / a[col, col]
            for q in range(col, n):
                a[r, q] -= fac * a[col, q]
            b[r] -= fac * b[col]
    x = np.zeros(n)
    for r in range(n - 1, -1, -1):
        acc = b[r]
        for q in range(r + 1, n):
            acc -= a[r, q] * x[q]
        x[r] = acc / a[r, r]
    return x, True


@njit
def sample_equilibrium_nb(rho_s, u_s, rho_t, m_t, vel, dvol, indicator, c_d, c, half_n,
                          gamma, d, under_resolved):
    """Sample M(rho_s, u_s) at velocity nodes ``vel`` (K, d) and reweight each
    cell by ``a + b.(v - u_s)`` so that the discrete mass and momentum equal
    ``rho_t`` and ``m_t``.

    Returns (values, correction, raw_mass_err, raw_mom_err, status) where
    status is 0 (ok), 1 (needs point deposit) per cell.
    """
    nc = rho_s.shape[0]
    nk = vel.shape[0]
    out = np.zeros((nc, nk))
    corr = np.zeros(nc)
    err_mass = np.zeros(nc)
    err_mom = np.zeros(nc)
    status = np.zeros(nc, dtype=np.int64)
    mat = np.zeros((d + 1, d + 1))
    rhs = np.zeros(d + 1)
    w = np.zeros(d)
    for ci in range(nc):
        if rho_t[ci] == 0.0:
            continue
        rs = rho_s[ci]
        if indicator:
            r2 = (c_d * rs) ** (2.0 / d)
        else:
            r2 = 2.0 * gamma / (gamma - 1.0) * rs ** (gamma - 1.0)
        if rs <= 0.0 or r2 < under_resolved:
            status[ci] = 1
            continue
        for p in range(d + 1):
            rhs[p] = 0.0
            for q in range(d + 1):
                mat[p, q] = 0.0
        raw0 = 0.0
        for k in range(nk):
            w2 = 0.0
            for a in range(d):
                w[a] = vel[k, a] - u_s[ci, a]
                w2 += w[a] * w[a]
            if w2 > r2:
                continue
            if indicator:
                val = 1.0
            else:
                val = c * (r2 - w2) ** half_n
            out[ci, k] = val
            mat[0, 0] += val
            for a in range(d):
                mat[0, a + 1] += val * w[a]
                for b in range(d):
                    mat[a + 1, b + 1] += val * w[a] * w[b]
            raw0 += val
        if raw0 == 0.0:
            status[ci] = 1
            continue
        for a in range(d):
            mat[a + 1, 0] = mat[0, a + 1]
        rhs[0] = rho_t[ci] / dvol
        mom_err2 = 0.0
        for a in range(d):
            rhs[a + 1] = m_t[ci, a] / dvol - u_s[ci, a] * rhs[0]
            raw_m = (mat[0, a + 1] + u_s[ci, a] * mat[0, 0]) * dvol
            mom_err2 += (raw_m - m_t[ci, a]) ** 2
        err_mass[ci] = mat[0, 0] * dvol - rho_t[ci]
        err_mom[ci] = math.sqrt(mom_err2)
        coef, ok = _solve_small(mat, rhs)
        if not ok:
            status[ci] = 1
            continue
        worst = 0.0
        for k in range(nk):
            if out[ci, k] == 0.0:
                continue
            mult = coef[0]
            for a in range(d):
                mult += coef[a + 1] * (vel[k, a] - u_s[ci, a])
            dev = abs(mult - 1.0)
            if dev > worst:
                worst = dev
            out[ci, k] *= mult
        corr[ci] = worst
    return out, corr, err_mass, err_mom, status


def sample_equilibrium_np(rho_s, u_s, rho_t, m_t, vel, dvol, indicator, c_d, c, half_n,
                          gamma, d, under_resolved):
    nc = rho_s.shape[0]
    if indicator:
        r2 = (c_d * rho_s) ** (2.0 / d)
    else:
        r2 = 2.0 * gamma / (gamma - 1.0) * rho_s ** (gamma - 1.0)
    w = vel[None, :, :] - u_s[:, None, :]
    w2 = np.einsum("cka,cka->ck", w, w)
    inside = w2 <= r2[:, None]
    if indicator:
        raw = np.where(inside, 1.0, 0.0)
    else:
        raw = np.where(inside, c * np.maximum(r2[:, None] - w2, 0.0) ** half_n, 0.0)
    active = rho_t != 0.0
    raw[~active] = 0.0
    mat = np.empty((nc, d + 1, d + 1))
    mat[:, 0, 0] = raw.sum(axis=1)
    first = np.einsum("ck,cka->ca", raw, w)
    mat[:, 0, 1:] = first
    mat[:, 1:, 0] = first
    mat[:, 1:, 1:] = np.einsum("ck,cka,ckb->cab", raw, w, w)
    status = np.zeros(nc, dtype=np.int64)
    status[active & ((rho_s <= 0.0) | (r2 < under_resolved) | (mat[:, 0, 0] == 0.0))] = 1
    solve = active & (status == 0)
    rhs = np.zeros((nc, d + 1))
    rhs[:, 0] = rho_t / dvol
    rhs[:, 1:] = m_t / dvol - u_s * rhs[:, :1]
    coef = np.zeros((nc, d + 1))
    if np.any(solve):
        coef[solve] = np.linalg.solve(mat[solve], rhs[solve][..., None])[..., 0]
    mult = coef[:, :1] + np.einsum("ca,cka->ck", coef[:, 1:], w)
    out = np.where(solve[:, None], raw * mult, 0.0)
    corr = np.where(solve, np.max(np.where(raw > 0.0, np.abs(mult - 1.0), 0.0), axis=1), 0.0)
    err_mass = np.where(active & (status == 0), mat[:, 0, 0] * dvol - rho_t, 0.0)
    raw_m = (first + u_s * mat[:, :1, 0]) * dvol
    err_mom = np.where(active & (status == 0), np.sqrt(np.sum((raw_m - m_t) ** 2, axis=1)), 0.0)
    return out, corr, err_mass, err_mom, status


# ---------------------------------------------------------------------------
# periodic stencil convolution along one axis
# ---------------------------------------------------------------------------

@njit
def convolve_periodic_nb(g, weights):
    """``out[i, m] = sum_k weights[k] * g[i - (k - K//2), m]`` on a periodic axis 0."""
    nx, nm = g.shape
    nk = weights.shape[0]
    half = nk // 2
    out = np.zeros_like(g)
    for i in range(nx):
        for k in range(nk):
            src = (i - (k - half)) % nx
            wk = weights[k]
            for m in range(nm):
                out[i, m] += wk * g[src, m]
    return out


def convolve_periodic_np(g, weights):
    half = weights.shape[0] // 2
    out = np.zeros_like(g)
    for k, wk in enumerate(weights):
        out += wk * np.roll(g, k - half, axis=0)
    return out


# ---------------------------------------------------------------------------
# weighted L1 distance between two equilibria, exact along velocity slices
# ---------------------------------------------------------------------------

@njit
def _m_slice(s, a2, b, indicator, c, half_n):
    t = a2 - (s - b) * (s - b)
    if t < 0.0:
        return 0.0
    if indicator:
        return 1.0
    return c * t ** half_n


@njit
def _slice_l12_nb(af, bf, ag, bg, w0, indicator, c, half_n, frac, jac):
    """int (w0 + s^2) |M_f(s) - M_g(s)| ds along one line; ``af``/``ag`` are
    squared chord half-lengths (negative means the line misses the ball)."""
    pts = np.empty(5)
    npts = 0
    if af > 0.0:
        h = math.sqrt(af)
        pts[npts] = bf - h
        pts[npts + 1] = bf + h
        npts += 2
    if ag > 0.0:
        h = math.sqrt(ag)
        pts[npts] = bg - h
        pts[npts + 1] = bg + h
        npts += 2
    if npts == 0:
        return 0.0
    if (not indicator) and af > 0.0 and ag > 0.0 and bf != bg:
        pts[npts] = (ag - af + bf * bf - bg * bg) / (2.0 * (bf - bg))
        npts += 1
    srt = np.sort(pts[:npts])
    lo = srt[0]
    hi = srt[npts - 1]
    total = 0.0
    for p in range(npts - 1):
        x0 = min(max(srt[p], lo), hi)
        x1 = min(max(srt[p + 1], lo), hi)
        width = x1 - x0
        if width <= 0.0:
            continue
        acc = 0.0
        for q in range(frac.shape[0]):
            s = x0 + width * frac[q]
            diff = _m_slice(s, af, bf, indicator, c, half_n) - _m_slice(s, ag, bg, indicator, c, half_n)
            acc += jac[q] * (w0 + s * s) * abs(diff)
        total += width * acc
    return total


@njit
def l12_pair_nb(d, rf, rg, a, bf, bg, indicator, c, half_n, frac, jac, frac_out, jac_out):
    """Weighted distance for balls whose centers differ only along the last axis.

    For ``d == 2`` the centers are ``(a, bf)`` and ``(a, bg)``.
    """
    if d == 1:
        return _slice_l12_nb(rf * rf, bf, rg * rg, bg, 1.0, indicator, c, half_n, frac, jac)
    big = max(rf, rg)
    pts = np.empty(6)
    npts = 0
    pts[0] = -rf
    pts[1] = rf
    pts[2] = -rg
    pts[3] = rg
    npts = 4
    du = abs(bf - bg)
    if du > 0.0 and du < rf + rg and du > abs(rf - rg):
        x = (rf * rf - rg * rg + du * du) / (2.0 * du)
        h2 = rf * rf - x * x
        if h2 > 0.0:
            h = math.sqrt(h2)
            pts[4] = -h
            pts[5] = h
            npts = 6
    srt = np.sort(pts[:npts])
    total = 0.0
    for p in range(npts - 1):
        t0 = max(srt[p], -big)
        t1 = min(srt[p + 1], big)
        width = t1 - t0
        if width <= 0.0:
            continue
        acc = 0.0
        for q in range(frac_out.shape[0]):
            t = t0 + width * frac_out[q]
            v1 = a + t
            acc += jac_out[q] * _slice_l12_nb(rf * rf - t * t, bf, rg * rg - t * t, bg,
                                              1.0 + v1 * v1, indicator, c, half_n, frac, jac)
        total += width * acc
    return total


def _slice_l12_np(af, bf, ag, bg, w0, indicator, c, half_n, frac, jac):
    """Vectorized over arrays ``af``, ``ag``, ``w0`` (scalar centers)."""
    af = np.asarray(af, dtype=float)
    ag = np.asarray(ag, dtype=float)
    w0 = np.broadcast_to(np.asarray(w0, dtype=float), af.shape)
    hf = np.sqrt(np.maximum(af, 0.0))
    hg = np.sqrt(np.maximum(ag, 0.0))
    okf = af > 0.0
    okg = ag > 0.0
    nan = np.nan
    pts = np.stack([
        np.where(okf, bf - hf, nan), np.where(okf, bf + hf, nan),
        np.where(okg, bg - hg, nan), np.where(okg, bg + hg, nan),
        np.full(af.shape, nan),
    ], axis=-1)
    if not indicator and bf != bg:
        cross = (ag - af + bf * bf - bg * bg) / (2.0 * (bf - bg))
        pts[..., 4] = np.where(okf & okg, cross, nan)
    lo = np.nanmin(np.where(np.isnan(pts), np.inf, pts), axis=-1)
    hi = np.nanmax(np.where(np.isnan(pts), -np.inf, pts), axis=-1)
    pts = np.where(np.isnan(pts), hi[..., None], pts)
    pts = np.sort(np.clip(pts, lo[..., None], hi[..., None]), axis=-1)
    pts = np.where(np.isfinite(pts), pts, 0.0)
    x0 = pts[..., :-1]
    width = pts[..., 1:] - x0
    s = x0[..., None] + width[..., None] * frac
    tf = af[..., None, None] - (s - bf) ** 2
    tg = ag[..., None, None] - (s - bg) ** 2
    if indicator:
        mf = (tf >= 0.0).astype(float)
        mg = (tg >= 0.0).astype(float)
    else:
        mf = np.where(tf >= 0.0, c * np.maximum(tf, 0.0) ** half_n, 0.0)
        mg = np.where(tg >= 0.0, c * np.maximum(tg, 0.0) ** half_n, 0.0)
    integrand = (w0[..., None, None] + s * s) * np.abs(mf - mg)
    return np.sum(width * np.sum(jac * integrand, axis=-1), axis=-1)


def l12_pair_np(d, rf, rg, a, bf, bg, indicator, c, half_n, frac, jac, frac_out, jac_out):
    if d == 1:
        return float(_slice_l12_np(rf * rf, bf, rg * rg, bg, 1.0, indicator, c, half_n, frac, jac))
    big = max(rf, rg)
    pts = [-rf, rf, -rg, rg]
    du = abs(bf - bg)
    if 0.0 < du < rf + rg and du > abs(rf - rg):
        x = (rf * rf - rg * rg + du * du) / (2.0 * du)
        h2 = rf * rf - x * x
        if h2 > 0.0:
            pts += [-math.sqrt(h2), math.sqrt(h2)]
    srt = np.clip(np.sort(np.asarray(pts)), -big, big)
    t0 = srt[:-1]
    width = srt[1:] - t0
    t = t0[:, None] + width[:, None] * frac_out
    inner = _slice_l12_np(rf * rf - t * t, bf, rg * rg - t * t, bg, 1.0 + (a + t) ** 2,
                          indicator, c, half_n, frac, jac)
    return float(np.sum(width * np.sum(jac_out * inner, axis=-1)))


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def moments(vals, vel, v2):
    if _accel.USE_NUMBA:
        return moments_nb(np.ascontiguousarray(vals, dtype=float), vel, v2)
    return moments_np(vals, vel, v2)


def shift_columns(g, shifts):
    g = np.ascontiguousarray(g, dtype=float)
    shifts = np.ascontiguousarray(shifts, dtype=float)
    if _accel.USE_NUMBA:
        return shift_columns_nb(g, shifts)
    return shift_columns_np(g, shifts)


def sample_equilibrium(*args):
    if _accel.USE_NUMBA:
        return sample_equilibrium_nb(*args)
    return sample_equilibrium_np(*args)


def convolve_periodic(g, weights):
    g = np.ascontiguousarray(g, dtype=float)
    if _accel.USE_NUMBA:
        return convolve_periodic_nb(g, np.ascontiguousarray(weights, dtype=float))
    return convolve_periodic_np(g, weights)


def l12_pair(d, rf, rg, a, bf, bg, indicator, c, half_n):
    args = (int(d), float(rf), float(rg), float(a), float(bf), float(bg), bool(indicator),
            float(c), float(half_n), COS_FRAC, COS_JAC, COS_FRAC_OUT, COS_JAC_OUT)
    if _accel.USE_NUMBA:
        return l12_pair_nb(*args)
    return l12_pair_np(*args)
