"""numba kernels for the inner (y, r or k) integrals; see ``_inner`` for the math."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .specfun import log_i0_scalar

_log_i0 = njit(cache=True, nogil=True)(log_i0_scalar)


@njit(cache=True, nogil=True)
def _point(form, v, s, g2, l, j, gamma, rho, cphi, delta, bound, need_tilde, out):
    if form == 0:
        w = math.sqrt(v * v + 1.0)
        x = s * v * v / (2.0 * (w + 1.0))
        a1 = -l * v * v / (w + 1.0)
        z = j * v
        meas = v / w
    elif form == 1:
        rs = math.sqrt(s)
        big_r = math.sqrt(v * v + s)
        x = rs * v * v / (2.0 * (big_r + rs))
        a1 = -l * v * v / (rs * (big_r + rs))
        z = j * v / rs
        meas = v / (big_r * rs)
    else:
        x = v
        a1 = -2.0 * l * v / s
        z = 2.0 * j * math.sqrt(v * (v + s)) / s
        meas = 2.0 / s
    gl2 = g2 + x
    u = x / gl2
    for c in range(5):
        out[c] = 0.0
    if u < delta or u <= 0.0:
        return
    ang = u ** (-1.0 - 0.5 * gamma)
    if bound > 0.0 and ang > bound:
        ang = bound
    kern = meas * (gl2 + 4.0) * cphi * gl2 ** (0.5 * rho) * ang
    lr = -math.log1p(x / s) - (2.0 + 0.5 * rho) * math.log1p(x / g2)
    ratio = math.exp(lr)
    rm1 = math.expm1(lr)
    li1 = _log_i0(z)
    e1 = a1 + li1
    em1 = math.expm1(e1)
    out[0] = -kern * ratio * em1
    out[1] = kern * math.exp(e1) * rm1
    if need_tilde:
        li2 = _log_i0(2.0 * z)
        # E2 I0(2z) - E1 I0(z), accurate in the far tail where both are tiny
        d = math.exp(e1) * math.expm1(a1 + li2 - li1)
        out[2] = kern * ratio * d
        out[3] = -kern * rm1 * d
        out[4] = kern * ratio * (em1 * em1 - math.exp(2.0 * a1 + li2) * math.expm1(2.0 * li1 - li2))


@njit(cache=True, nogil=True)
def eval_panels(kind, a, b, node, s, g2, l, j, form, gamma, rho, cphi, delta, bound, need_tilde,
                alpha, gk_x, gk_wk, gk_wg, jx1, jw1, jx2, jw2):
    n = kind.shape[0]
    val = np.zeros((n, 5))
    err = np.zeros((n, 5))
    absval = np.zeros((n, 5))
    buf = np.zeros(5)
    kv = np.zeros(5)
    gv = np.zeros(5)
    av = np.zeros(5)
    for p in range(n):
        i = node[p]
        for c in range(5):
            kv[c] = 0.0
            gv[c] = 0.0
            av[c] = 0.0
        if kind[p] == 1:
            # Gauss-Jacobi on [0, b] with weight v^alpha, two orders
            half = 0.5 * b[p]
            scale = half ** (1.0 + alpha)
            for m in range(jx1.shape[0]):
                vv = half * (1.0 + jx1[m])
                _point(form, vv, s[i], g2[i], l[i], j[i], gamma, rho, cphi, delta, bound, need_tilde, buf)
                f = scale * jw1[m] / vv ** alpha
                for c in range(5):
                    gv[c] += f * buf[c]
            for m in range(jx2.shape[0]):
                vv = half * (1.0 + jx2[m])
                _point(form, vv, s[i], g2[i], l[i], j[i], gamma, rho, cphi, delta, bound, need_tilde, buf)
                f = scale * jw2[m] / vv ** alpha
                for c in range(5):
                    kv[c] += f * buf[c]
                    av[c] += f * abs(buf[c])
        else:
            for m in range(15):
                if kind[p] == 0:
                    half = 0.5 * (b[p] - a[p])
                    vv = 0.5 * (a[p] + b[p]) + half * gk_x[m]
                    jac = half
                else:
                    t = 0.5 * (1.0 + gk_x[m])
                    vv = a[p] / t
                    jac = 0.5 * a[p] / (t * t)
                _point(form, vv, s[i], g2[i], l[i], j[i], gamma, rho, cphi, delta, bound, need_tilde, buf)
                for c in range(5):
                    fk = jac * buf[c]
                    kv[c] += gk_wk[m] * fk
                    gv[c] += gk_wg[m] * fk
                    av[c] += gk_wk[m] * abs(fk)
        for c in range(5):
            val[p, c] = kv[c]
            err[p, c] = abs(kv[c] - gv[c])
            absval[p, c] = av[c]
    return val, err, absval


@njit(cache=True, nogil=True)
def eval_points(form, v, s, g2, l, j, gamma, rho, cphi, delta, bound):
    n = v.shape[0]
    out = np.zeros((n, 5))
    buf = np.zeros(5)
    for i in range(n):
        _point(form, v[i], s[i], g2[i], l[i], j[i], gamma, rho, cphi, delta, bound, True, buf)
        for c in range(5):
            out[i, c] = buf[c]
    return out
