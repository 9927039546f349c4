"""Numba inner loops for collision-operator evaluation over whole grids.

State evaluation = closed-form mixture part + trilinear interpolation of
the grid correction. Queries are clamped componentwise into the cube; for
points inside the inscribed ball the clamp is an exact no-op because the
post-collisional frequencies satisfy |xi+-| <= |xi|. Azimuth tables are
built with exact +pi antisymmetry (see collision module) so that mirrored
grid points produce conjugate-mirrored results up to roundoff.
"""

import math

import numba as nb
import numpy as np

_TINY_R = 1e-14


@nb.njit(inline="always")
def _eval_state(q0, q1, q2, ax, aw, gm, gv, gw, corr, rad, npts, delta, use_corr):
    re = 0.0
    im = 0.0
    for a in range(ax.shape[0]):
        ph = -(ax[a, 0] * q0 + ax[a, 1] * q1 + ax[a, 2] * q2)
        re += aw[a] * math.cos(ph)
        im += aw[a] * math.sin(ph)
    if gw.shape[0] > 0:
        r2 = q0 * q0 + q1 * q1 + q2 * q2
        for g in range(gw.shape[0]):
            amp = gw[g] * math.exp(-0.5 * gv[g] * r2)
            ph = -(gm[g, 0] * q0 + gm[g, 1] * q1 + gm[g, 2] * q2)
            re += amp * math.cos(ph)
            im += amp * math.sin(ph)
    val = complex(re, im)
    if use_corr:
        x0 = min(max(q0, -rad), rad)
        x1 = min(max(q1, -rad), rad)
        x2 = min(max(q2, -rad), rad)
        t0 = (x0 + rad) / delta
        t1 = (x1 + rad) / delta
        t2 = (x2 + rad) / delta
        i0 = min(max(int(t0), 0), npts - 2)
        i1 = min(max(int(t1), 0), npts - 2)
        i2 = min(max(int(t2), 0), npts - 2)
        f0 = min(max(t0 - i0, 0.0), 1.0)
        f1 = min(max(t1 - i1, 0.0), 1.0)
        f2 = min(max(t2 - i2, 0.0), 1.0)
        g0 = 1.0 - f0
        g1 = 1.0 - f1
        g2 = 1.0 - f2
        val += (g0 * (g1 * (g2 * corr[i0, i1, i2] + f2 * corr[i0, i1, i2 + 1])
                      + f1 * (g2 * corr[i0, i1 + 1, i2] + f2 * corr[i0, i1 + 1, i2 + 1]))
                + f0 * (g1 * (g2 * corr[i0 + 1, i1, i2] + f2 * corr[i0 + 1, i1, i2 + 1])
                        + f1 * (g2 * corr[i0 + 1, i1 + 1, i2] + f2 * corr[i0 + 1, i1 + 1, i2 + 1])))
    return val


@nb.njit(inline="always")
def _frame(u0, u1, u2):
    # canonical sign so the frame depends only on the line through u
    s = 1.0
    if abs(u0) > _TINY_R:
        s = 1.0 if u0 > 0.0 else -1.0
    elif abs(u1) > _TINY_R:
        s = 1.0 if u1 > 0.0 else -1.0
    else:
        s = 1.0 if u2 > 0.0 else -1.0
    v0 = s * u0
    v1 = s * u1
    v2 = s * u2
    a0 = abs(u0)
    a1 = abs(u1)
    a2 = abs(u2)
    # basis vector along the smallest component of u
    if a0 <= a1 and a0 <= a2:
        c0, c1, c2 = 1.0, 0.0, 0.0
    elif a1 <= a2:
        c0, c1, c2 = 0.0, 1.0, 0.0
    else:
        c0, c1, c2 = 0.0, 0.0, 1.0
    e10 = c1 * v2 - c2 * v1
    e11 = c2 * v0 - c0 * v2
    e12 = c0 * v1 - c1 * v0
    nrm = math.sqrt(e10 * e10 + e11 * e11 + e12 * e12)
    e10 /= nrm
    e11 /= nrm
    e12 /= nrm
    e20 = v1 * e12 - v2 * e11
    e21 = v2 * e10 - v0 * e12
    e22 = v0 * e11 - v1 * e10
    return e10, e11, e12, e20, e21, e22


@nb.njit(parallel=True, cache=True)
def rhs_batch(pts, vals, ct, st, bw, cosphi, sinphi,
              ax, aw, gm, gv, gw, corr, rad, npts, delta, use_corr, out):
    """Collision right-hand side at each point of pts.

    bw holds b(theta) * sin(theta) * w_theta * (2*pi/M) per theta node, so
    the double loop is a plain weighted sum of psi(xi+) psi(xi-) - psi(xi).
    """
    n_theta = ct.shape[0]
    n_phi = cosphi.shape[0]
    for i in nb.prange(pts.shape[0]):
        x0 = pts[i, 0]
        x1 = pts[i, 1]
        x2 = pts[i, 2]
        r = math.sqrt(x0 * x0 + x1 * x1 + x2 * x2)
        if r < _TINY_R:
            out[i] = 0.0 + 0.0j
            continue
        u0 = x0 / r
        u1 = x1 / r
        u2 = x2 / r
        e10, e11, e12, e20, e21, e22 = _frame(u0, u1, u2)
        psi_i = vals[i]
        acc = 0.0 + 0.0j
        for k in range(n_theta):
            ctk = ct[k]
            stk = st[k]
            wk = bw[k]
            part = 0.0 + 0.0j
            for m in range(n_phi):
                d0 = cosphi[m] * e10 + sinphi[m] * e20
                d1 = cosphi[m] * e11 + sinphi[m] * e21
                d2 = cosphi[m] * e12 + sinphi[m] * e22
                s0 = ctk * u0 + stk * d0
                s1 = ctk * u1 + stk * d1
                s2 = ctk * u2 + stk * d2
                xp0 = 0.5 * (x0 + r * s0)
                xp1 = 0.5 * (x1 + r * s1)
                xp2 = 0.5 * (x2 + r * s2)
                xm0 = 0.5 * (x0 - r * s0)
                xm1 = 0.5 * (x1 - r * s1)
                xm2 = 0.5 * (x2 - r * s2)
                pp = _eval_state(xp0, xp1, xp2, ax, aw, gm, gv, gw,
                                 corr, rad, npts, delta, use_corr)
                pm = _eval_state(xm0, xm1, xm2, ax, aw, gm, gv, gw,
                                 corr, rad, npts, delta, use_corr)
                part += pp * pm - psi_i
            acc += wk * part
        out[i] = acc


@nb.njit(parallel=True, cache=True)
def eval_batch(pts, ax, aw, gm, gv, gw, corr, rad, npts, delta, use_corr, out):
    for i in nb.prange(pts.shape[0]):
        out[i] = _eval_state(pts[i, 0], pts[i, 1], pts[i, 2], ax, aw, gm, gv, gw,
                             corr, rad, npts, delta, use_corr)
