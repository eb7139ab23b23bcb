"""Inner integrals over the boost variable, batched over many momentum pairs.

For a pair with invariants (s, g^2, l, j) and u = X / (g^2 + X), where
X = g_L^2 - g^2 is the boost variable, the five integrands are

    K  = meas * s_L * Phi(g_L) * sigma0(u)
    R  = kernel ratio,   e1 = A + log I0(z),   e2 = 2A + log I0(2z)

    0  zeta0   K R (1 - e^e1)
    1  zetaL   K e^e1 (R - 1)
    2  tilde0  K R (e^e2 - e^e1)
    3  tildeL  K (1 - R)(e^e2 - e^e1)
    4  square  K R (e^e1 - 1)^2 + K R (e^e2 - e^(2 e1))

where the variable is y (form 0), r = sqrt(s) y (form 1) or k = X
(form 2), and ``meas`` carries the Jacobian so that every form integrates
to the same y-measure integral.  Differences are taken with expm1/log1p so
nothing cancels catastrophically near the singular endpoint.
"""
from __future__ import annotations

import math

import numpy as np

from ._backend import resolve
from .kernels import KernelConfig
from .quadrature import GAUSS_WEIGHTS, GK_NODES, GK_WEIGHTS, JACOBI_ORDERS, jacobi_rule
from .specfun import log_i0_array

COMPONENTS = ("zeta0", "zetaL", "tilde0", "tildeL", "square")
FORMS = {"y": 0, "r": 1, "k": 2}

_GK_G = GAUSS_WEIGHTS


def points_numpy(form, v, s, g2, l, j, gamma, rho, cphi, delta, bound, need_tilde=True):
    """Vectorised integrands, shape v.shape + (5,)."""
    v = np.asarray(v, dtype=float)
    if form == 0:
        w = np.sqrt(v * v + 1.0)
        x = s * v * v / (2.0 * (w + 1.0))
        a1 = -l * v * v / (w + 1.0)
        z = j * v
        meas = v / w
    elif form == 1:
        rs = np.sqrt(s)
        big_r = np.sqrt(v * v + s)
        x = rs * v * v / (2.0 * (big_r + rs))
        a1 = -l * v * v / (rs * (big_r + rs))
        z = j * v / rs
        meas = v / (big_r * rs)
    else:
        x = v
        a1 = -2.0 * l * v / s
        z = 2.0 * j * np.sqrt(v * (v + s)) / s
        meas = 2.0 / s * np.ones_like(v)
    gl2 = g2 + x
    u = x / gl2
    live = (u >= delta) & (u > 0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        ang = np.where(live, u, 1.0) ** (-1.0 - 0.5 * gamma)
        if bound > 0:
            ang = np.minimum(ang, bound)
        kern = np.where(live, meas * (gl2 + 4.0) * cphi * gl2 ** (0.5 * rho) * ang, 0.0)
    lr = -np.log1p(x / s) - (2.0 + 0.5 * rho) * np.log1p(x / g2)
    ratio = np.exp(lr)
    rm1 = np.expm1(lr)
    li1 = log_i0_array(z)
    e1 = a1 + li1
    em1 = np.expm1(e1)
    out = np.zeros(v.shape + (5,))
    out[..., 0] = -kern * ratio * em1
    out[..., 1] = kern * np.exp(e1) * rm1
    if need_tilde:
        li2 = log_i0_array(2.0 * z)
        # E2 I0(2z) - E1 I0(z), accurate in the far tail where both are tiny
        d = np.exp(e1) * np.expm1(a1 + li2 - li1)
        out[..., 2] = kern * ratio * d
        out[..., 3] = -kern * rm1 * d
        out[..., 4] = kern * ratio * (em1 * em1 - np.exp(2.0 * a1 + li2) * np.expm1(2.0 * li1 - li2))
    return out


def _eval_panels_numpy(kind, a, b, node, pairs, point_fn, ncomp, alpha, chunk=4000):
    """GK / Gauss-Jacobi / tail panel sums of ``point_fn(v, s, g2, l, j) -> (..., ncomp)``."""
    s, g2, l, j = pairs
    n = len(kind)
    val = np.zeros((n, ncomp))
    err = np.zeros((n, ncomp))
    absval = np.zeros((n, ncomp))
    for start in range(0, n, chunk):
        sl = slice(start, start + chunk)
        k_ = kind[sl]
        idx = node[sl]
        for code in (0, 2):
            sel = np.nonzero(k_ == code)[0]
            if not sel.size:
                continue
            aa, bb, ii = a[sl][sel], b[sl][sel], idx[sel]
            if code == 0:
                half = 0.5 * (bb - aa)
                vv = (0.5 * (aa + bb))[:, None] + half[:, None] * GK_NODES[None, :]
                jac = np.repeat(half[:, None], 15, axis=1)
            else:
                t = 0.5 * (1.0 + GK_NODES)
                vv = aa[:, None] / t[None, :]
                jac = 0.5 * aa[:, None] / (t * t)[None, :]
            f = point_fn(vv, s[ii][:, None], g2[ii][:, None], l[ii][:, None],
                         j[ii][:, None]) * jac[..., None]
            kv = np.einsum("m,pmc->pc", GK_WEIGHTS, f)
            gv = np.einsum("m,pmc->pc", _GK_G, f)
            val[start + sel] = kv
            err[start + sel] = np.abs(kv - gv)
            absval[start + sel] = np.einsum("m,pmc->pc", GK_WEIGHTS, np.abs(f))
        sel = np.nonzero(k_ == 1)[0]
        if sel.size:
            bb, ii = b[sl][sel], idx[sel]
            half = 0.5 * bb
            res = []
            for order in JACOBI_ORDERS:
                x, w = jacobi_rule(order, alpha)
                vv = half[:, None] * (1.0 + x)[None, :]
                f = point_fn(vv, s[ii][:, None], g2[ii][:, None], l[ii][:, None],
                             j[ii][:, None])
                wt = (half ** (1.0 + alpha))[:, None] * w[None, :] / vv ** alpha
                res.append((np.einsum("pm,pmc->pc", wt, f), np.einsum("pm,pmc->pc", wt, np.abs(f))))
            val[start + sel] = res[1][0]
            err[start + sel] = np.abs(res[1][0] - res[0][0])
            absval[start + sel] = res[1][1]
    return val, err, absval


def eval_panels(backend, kind, a, b, node, pairs, form, cfg: KernelConfig, need_tilde, alpha):
    s, g2, l, j = pairs
    bound = cfg.sigma0_bound if cfg.bounded else -1.0
    common = (form, cfg.gamma, cfg.rho, cfg.c_phi, cfg.delta, bound, need_tilde, alpha)
    if backend == "numba":
        from . import _inner_numba as nb

        x1, w1 = jacobi_rule(JACOBI_ORDERS[0], alpha)
        x2, w2 = jacobi_rule(JACOBI_ORDERS[1], alpha)
        return nb.eval_panels(kind, a, b, node, s, g2, l, j, *common,
                              GK_NODES, GK_WEIGHTS, _GK_G, x1, w1, x2, w2)
    args = common[1:7]
    return _eval_panels_numpy(kind, a, b, node, pairs,
                              lambda v, *pr: points_numpy(form, v, *pr, *args), 5, alpha)


def eval_points(v, pairs, form: int, cfg: KernelConfig, backend: str | None = None) -> np.ndarray:
    """Pointwise integrands (n, 5) at matching arrays of nodes and pairs."""
    backend = resolve(backend)
    s, g2, l, j = (np.ascontiguousarray(np.broadcast_to(np.asarray(x, float), np.shape(v)).ravel())
                   for x in pairs)
    vv = np.ascontiguousarray(np.asarray(v, dtype=float).ravel())
    bound = cfg.sigma0_bound if cfg.bounded else -1.0
    args = (cfg.gamma, cfg.rho, cfg.c_phi, cfg.delta, bound)
    if backend == "numba":
        from . import _inner_numba as nb

        out = nb.eval_points(form, vv, s, g2, l, j, *args)
    else:
        out = points_numpy(form, vv, s, g2, l, j, *args)
    return out.reshape(np.shape(v) + (5,))


# ---------------------------------------------------------------------------
# panel layout
# ---------------------------------------------------------------------------

def _y_to_form(y, s, form):
    if form == 0:
        return y
    if form == 1:
        return np.sqrt(s) * y
    return s * y * y / (2.0 * (np.sqrt(y * y + 1.0) + 1.0))


def jacobi_exponent(form: int, gamma: float) -> float:
    """Power of the variable that the integrand follows at 0."""
    return -0.5 * gamma if form == 2 else 1.0 - gamma


def initial_panels(pairs, cfg: KernelConfig, form: int):
    """Per-pair panel edges following the scales of the integrand.

    Returns flat arrays (node, a, b, kind) with kind 0 = Gauss-Kronrod,
    1 = Gauss-Jacobi from 0, 2 = semi-infinite tail.
    """
    s, g2, l, j = pairs
    n = len(s)
    g = np.sqrt(g2)
    rs = np.sqrt(s)
    lj = np.sqrt(np.maximum((l - j) * (l + j), 1e-300))
    decay = lj * lj / (l + j)
    with np.errstate(divide="ignore"):
        y_g = 2.0 * g / rs
        y_l = 1.0 / np.sqrt(l)
        y_j = np.where(j > 0, 1.0 / np.where(j > 0, j, 1.0), np.inf)
        y_m = j / lj
        y_s = 2.0 * l * j / (lj * lj)
    y1 = 0.25 * np.minimum(np.minimum(y_g, y_l), np.minimum(y_j, 1.0))
    y_tail = np.minimum(np.maximum(np.maximum(8.0, 4.0 * y_s), y_m + 50.0 / decay), 1e8)

    y_start = np.zeros(n)
    if cfg.delta > 0:
        if cfg.delta >= 1.0:
            y_start = np.full(n, np.inf)
        else:
            xd = g2 * cfg.delta / (1.0 - cfg.delta)
            wd = 1.0 + 2.0 * xd / s
            y_start = np.sqrt((wd - 1.0) * (wd + 1.0))
    extra = []
    if cfg.bounded and cfg.sigma0_bound > 1.0:
        ub = cfg.sigma0_bound ** (-1.0 / (1.0 + 0.5 * cfg.gamma))
        xb = g2 * ub / (1.0 - ub)
        wb = 1.0 + 2.0 * xb / s
        extra.append(np.sqrt((wb - 1.0) * (wb + 1.0)))

    n_geo = 34
    geo = y1[:, None] * 4.0 ** np.arange(1, n_geo + 1)[None, :]
    geo = np.where(geo < y_tail[:, None], geo, np.nan)
    cands = np.column_stack([y1, y_g, y_l, np.where(np.isfinite(y_j), y_j, np.nan), y_m, y_s,
                             2.0 * y_s, np.ones(n), 2.0 * np.ones(n), y_tail, y_start, *extra, geo])
    cands = np.where((cands >= y_start[:, None]) & (cands > 0) & (cands <= y_tail[:, None]), cands, np.nan)
    cands = np.sort(cands, axis=1)  # nan sorts last
    # thin points that are within 5% of their predecessor
    prev = np.concatenate([np.full((n, 1), -np.inf), cands[:, :-1]], axis=1)
    keep = np.isfinite(cands) & ~(cands <= prev * 1.05)
    zero = np.where(y_start == 0.0, 0.0, np.nan)
    edges = np.sort(np.column_stack([zero, np.where(keep, cands, np.nan)]), axis=1)
    count = np.isfinite(edges).sum(axis=1)

    m = edges.shape[1]
    k = np.arange(m - 1)[None, :]
    valid = k + 1 < count[:, None]
    node = np.broadcast_to(np.arange(n)[:, None], valid.shape)[valid]
    a = edges[:, :-1][valid]
    b = edges[:, 1:][valid]
    kind = np.zeros(valid.shape, dtype=np.int64)
    if not cfg.cutoff:
        kind[:, 0] = 1
    kind = kind[valid]
    has = count > 0
    tail_node = np.nonzero(has)[0]
    tail_a = edges[tail_node, count[has] - 1]
    node = np.concatenate([node, tail_node]).astype(np.int64)
    a = np.concatenate([a, tail_a])
    b = np.concatenate([b, np.full(len(tail_node), np.inf)])
    kind = np.concatenate([kind, np.full(len(tail_node), 2, dtype=np.int64)])
    order = np.lexsort((a, node))
    node, a, b, kind = node[order], a[order], b[order], kind[order]
    s_node = s[node]
    b_form = np.where(np.isinf(b), np.inf, _y_to_form(np.where(np.isinf(b), 0.0, b), s_node, form))
    return node, _y_to_form(a, s_node, form), b_form, kind


def integrate_inner(pairs, cfg: KernelConfig, form: str = "y", rel_tol: float = 1e-9,
                    abs_tol: float = 1e-300, need_tilde: bool = True, backend: str | None = None,
                    max_rounds: int = 40, point_fn=None, width: int = 5
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integrate all five integrands over [0, inf) for every pair.

    ``pairs`` is a tuple of equal-length arrays (s, g^2, l, j) with g > 0.
    Returns (values, errors, converged) with shapes (n, 5), (n, 5), (n,).

    A custom vectorised ``point_fn(v, s, g2, l, j) -> (..., width)`` replaces
    the five standard integrands; it always runs on numpy.
    """
    backend = resolve(backend)
    fcode = FORMS[form]
    pairs = tuple(np.ascontiguousarray(np.asarray(x, dtype=float)) for x in pairs)
    n = len(pairs[0])
    alpha = jacobi_exponent(fcode, cfg.gamma)
    node, a, b, kind = initial_panels(pairs, cfg, fcode)
    if point_fn is None:
        width = 5
        ncomp = 5 if need_tilde else 2

        def evaluate(kind_, a_, b_, node_):
            return eval_panels(backend, kind_, a_, b_, node_, pairs, fcode, cfg, need_tilde, alpha)
    else:
        ncomp = width

        def evaluate(kind_, a_, b_, node_):
            return _eval_panels_numpy(kind_, a_, b_, node_, pairs, point_fn, width, alpha)

    val = np.zeros((0, width))
    err = np.zeros((0, width))
    absv = np.zeros((0, width))
    done_node = np.zeros(0, dtype=np.int64)
    done_val = np.zeros((0, width))
    done_err = np.zeros((0, width))
    done_abs = np.zeros((0, width))

    new = (node, a, b, kind)
    act_node = np.zeros(0, dtype=np.int64)
    act_a = np.zeros(0)
    act_b = np.zeros(0)
    act_kind = np.zeros(0, dtype=np.int64)
    for round_ in range(max_rounds):
        nv, ne, na = evaluate(new[3], new[1], new[2], new[0])
        act_node = np.concatenate([act_node, new[0]])
        act_a = np.concatenate([act_a, new[1]])
        act_b = np.concatenate([act_b, new[2]])
        act_kind = np.concatenate([act_kind, new[3]])
        val = np.concatenate([val, nv])
        err = np.concatenate([err, ne])
        absv = np.concatenate([absv, na])

        tot_v = _node_sum(act_node, val, n) + _node_sum(done_node, done_val, n)
        tot_e = _node_sum(act_node, err, n) + _node_sum(done_node, done_err, n)
        tot_a = _node_sum(act_node, absv, n) + _node_sum(done_node, done_abs, n)
        tol = np.maximum(abs_tol, rel_tol * tot_a)[:, :ncomp]
        ok_node = np.all(tot_e[:, :ncomp] <= tol, axis=1)
        ok_panel = ok_node[act_node]
        # retire panels of converged pairs
        done_node = np.concatenate([done_node, act_node[ok_panel]])
        done_val = np.concatenate([done_val, val[ok_panel]])
        done_err = np.concatenate([done_err, err[ok_panel]])
        done_abs = np.concatenate([done_abs, absv[ok_panel]])
        keep = ~ok_panel
        act_node, act_a, act_b, act_kind = act_node[keep], act_a[keep], act_b[keep], act_kind[keep]
        val, err, absv = val[keep], err[keep], absv[keep]
        if not act_node.size or round_ == max_rounds - 1:
            break

        counts = np.bincount(act_node, minlength=n)
        score = (err[:, :ncomp] / np.maximum(tol[act_node], 1e-300)).max(axis=1)
        worst = np.zeros(n)
        np.maximum.at(worst, act_node, score)
        split = (score * counts[act_node] > 1.0) | (score >= worst[act_node])
        # panels already at rounding width cannot be refined further
        split &= (act_kind != 0) | (act_b - act_a > 1e-13 * np.abs(act_b))
        if not split.any():
            break
        sn, sa, sb, sk = act_node[split], act_a[split], act_b[split], act_kind[split]
        safe_b = np.where(np.isfinite(sb), sb, 1.0)
        mid = np.where((sa > 0) & (safe_b > 8.0 * sa), np.sqrt(sa * safe_b), 0.5 * (sa + safe_b))
        # kind 0 bisects, kind 1 keeps a quarter as a Jacobi panel, kind 2 peels off [a, 4a]
        left_b = np.where(sk == 0, mid, np.where(sk == 1, 0.25 * sb, 4.0 * sa))
        left_kind = np.where(sk == 1, 1, 0)
        right_kind = np.where(sk == 2, 2, 0)
        new = (np.concatenate([sn, sn]), np.concatenate([sa, left_b]),
               np.concatenate([left_b, sb]), np.concatenate([left_kind, right_kind]).astype(np.int64))
        keep = ~split
        act_node, act_a, act_b, act_kind = act_node[keep], act_a[keep], act_b[keep], act_kind[keep]
        val, err, absv = val[keep], err[keep], absv[keep]

    tot_v = _node_sum(act_node, val, n) + _node_sum(done_node, done_val, n)
    tot_e = _node_sum(act_node, err, n) + _node_sum(done_node, done_err, n)
    converged = np.ones(n, dtype=bool)
    converged[np.unique(act_node)] = False
    return tot_v, tot_e, converged


def _node_sum(node, arr, n):
    return np.stack([np.bincount(node, weights=arr[:, c], minlength=n) for c in range(arr.shape[1])],
                    axis=1)
