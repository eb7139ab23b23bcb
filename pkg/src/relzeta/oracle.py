"""Ground-truth checks that bypass the reduced representations.

``direct_tilde_zeta`` integrates the frequency multiplier straight from its
collision-integral definition: for every q an integral over the sphere of
centre-of-momentum directions, with q' and the scattering angle produced by
the kinematics module.  The sphere is parametrised about the axis on which
the scattering angle vanishes, so the grazing singularity of sigma0 sits at
one end of the polar coordinate u = sin^2(theta/2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _inner
from .kernels import KernelConfig, phi, sigma0
from .kinematics import com_axis, post_collision, scattering_cos
from .multiplier import OUTER_SPEC, _p_norm, pair_arrays, tilde_zeta
from .quadrature import (GAUSS_WEIGHTS, GK_NODES, GK_WEIGHTS, JACOBI_ORDERS, FULL, QuadResult,
                         QuadSpec, adaptive_rt, jacobi_rule, mc_integrate, q_integration_mesh)
from .specfun import log_i0_array

ORACLE_SPEC = QuadSpec(rel_tol=1e-4)
N_PHI = 32
_U_LEVELS = 6  # geometric u panels [4^-k, 4^-k+1] below the top one
_CHUNK_POINTS = 400_000


class CalibrationError(RuntimeError):
    """Direct / reduced ratios disagree across the calibration grid."""


def _check_direct(cfg: KernelConfig) -> None:
    if not cfg.cutoff and cfg.gamma >= 1.0:
        raise ValueError("the direct sphere integral diverges absolutely for gamma >= 1 "
                         "without an angular cutoff")


# ---------------------------------------------------------------------------
# sphere rule in (u, phi)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _SphereRule:
    u: np.ndarray        # polar nodes
    w_hi: np.ndarray     # weights of the accurate rule
    w_lo: np.ndarray     # weights of the embedded lower rule (error estimate)


def _u_breaks(cfg: KernelConfig) -> list[float]:
    lo = cfg.delta
    pts = [4.0 ** -k for k in range(_U_LEVELS, -1, -1)]
    if cfg.bounded and cfg.sigma0_bound > 1.0:
        pts.append(cfg.sigma0_bound ** (-1.0 / (1.0 + 0.5 * cfg.gamma)))
    pts = sorted(x for x in set(pts) if x > lo)
    return [lo] + pts


def _sphere_rule(cfg: KernelConfig) -> _SphereRule:
    """Quadrature for int_0^1 du F(u): Gauss-Jacobi on the first panel when sigma0 is singular."""
    breaks = _u_breaks(cfg)
    us, hi, lo = [], [], []
    start = 0
    if not cfg.cutoff:
        # F ~ u^(-gamma/2) at 0 once the phi average removes the sqrt(u) terms
        alpha = -0.5 * cfg.gamma
        b = breaks[1]
        half = 0.5 * b
        for order, is_hi in ((JACOBI_ORDERS[1], True), (JACOBI_ORDERS[0], False)):
            x, w = jacobi_rule(order, alpha)
            v = half * (1.0 + x)
            wt = half ** (1.0 + alpha) * w / v ** alpha
            us.append(v)
            hi.append(wt if is_hi else np.zeros_like(v))
            lo.append(np.zeros_like(v) if is_hi else wt)
        start = 1
    for a, b in zip(breaks[start:-1], breaks[start + 1:]):
        half = 0.5 * (b - a)
        us.append(0.5 * (a + b) + half * GK_NODES)
        hi.append(half * GK_WEIGHTS)
        lo.append(half * GAUSS_WEIGHTS)
    return _SphereRule(np.concatenate(us), np.concatenate(hi), np.concatenate(lo))


def _orthonormal_pair(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.where((np.abs(n[:, 0]) < 0.9)[:, None], [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    return e1, np.cross(n, e1)


def _sphere_values(p_norm: float, r: np.ndarray, t: np.ndarray, cfg: KernelConfig,
                   rule: _SphereRule, n_phi: int, split: bool):
    """Per-q sphere integrals of v_o Phi sigma0 x (weights) / (4 pi).

    With ``split`` the two columns are the loss weight exp(-q0) and the gain
    weight exp(-(q0 + q0')/2); otherwise one column holds their difference.
    """
    n = len(r)
    mu = 1.0 - t
    sin_a = np.sqrt(np.maximum(t * (2.0 - t), 0.0))
    p = np.array([0.0, 0.0, p_norm])
    q = np.column_stack([r * sin_a, np.zeros(n), r * mu])
    ncol = 2 if split else 1
    vals = np.zeros((n, ncol))
    errs = np.zeros((n, ncol))
    phis = 2.0 * math.pi * np.arange(n_phi) / n_phi
    cos_phi, sin_phi = np.cos(phis), np.sin(phis)
    nu = len(rule.u)
    su = 2.0 * np.sqrt(rule.u * (1.0 - rule.u))
    step = max(1, _CHUNK_POINTS // (nu * n_phi))
    p0 = math.sqrt(1.0 + p_norm * p_norm)
    for lo in range(0, n, step):
        qs = q[lo:lo + step]
        m = len(qs)
        axis = com_axis(np.broadcast_to(p, qs.shape), qs)
        e1, e2 = _orthonormal_pair(axis)
        trans = (cos_phi[None, None, :, None] * e1[:, None, None, :]
                 + sin_phi[None, None, :, None] * e2[:, None, None, :])
        omega = ((1.0 - 2.0 * rule.u)[None, :, None, None] * axis[:, None, None, :]
                 + su[None, :, None, None] * trans)
        omega /= np.linalg.norm(omega, axis=-1, keepdims=True)
        pp = np.broadcast_to(p, (m, 1, 1, 3))
        qq = qs[:, None, None, :]
        p_out, q_out = post_collision(pp, qq, omega)
        cos_t = scattering_cos(pp, qq, p_out)
        u_kin = np.clip(0.5 * (1.0 - cos_t), 1e-300, 1.0)
        ang = sigma0(u_kin, cfg)
        q0 = np.sqrt(1.0 + np.einsum("ij,ij->i", qs, qs))
        q0p = np.sqrt(1.0 + np.einsum("...i,...i->...", q_out, q_out))
        s_, g2, _, _, _ = pair_arrays(p_norm, r[lo:lo + step], t[lo:lo + step])
        g = np.sqrt(g2)
        pref = g * np.sqrt(s_) / (p0 * q0) * phi(g, cfg) / (4.0 * math.pi) * 2.0
        half_gap = 0.5 * (q0p - q0[:, None, None])
        if split:
            cols = [np.broadcast_to(np.exp(-q0)[:, None, None], ang.shape),
                    np.exp(-q0[:, None, None] - half_gap)]
        else:
            cols = [-np.exp(-q0)[:, None, None] * np.expm1(-half_gap)]
        for c, weight in enumerate(cols):
            f = ang * weight
            full = f.mean(axis=2) * 2.0 * math.pi
            coarse = f[:, :, ::2].mean(axis=2) * 2.0 * math.pi
            v_hi = full @ rule.w_hi
            v_lo = full @ rule.w_lo
            phi_err = np.abs(full - coarse) @ np.abs(rule.w_hi)
            vals[lo:lo + m, c] = pref * v_hi
            errs[lo:lo + m, c] = pref * (np.abs(v_hi - v_lo) + phi_err)
    return vals, errs


def _direct(p, cfg: KernelConfig, spec: QuadSpec, split: bool, n_phi: int):
    p_norm = _p_norm(p)
    rule = _sphere_rule(cfg)
    r_far = spec.q_max_override or max(40.0, 2.0 * p_norm + 40.0)
    r_breaks, t_breaks, unbounded = q_integration_mesh(p_norm, FULL, r_far)
    if spec.q_max_override:
        unbounded = False
    evals = 0

    def func(r, t):
        nonlocal evals
        evals += len(r) * len(rule.u) * n_phi
        s, g2, *_ = pair_arrays(p_norm, r, t)
        ncol = 2 if split else 1
        vals = np.zeros((len(r), ncol))
        errs = np.zeros((len(r), ncol))
        live = g2 > 0
        if live.any():
            v, e = _sphere_values(p_norm, r[live], t[live], cfg, rule, n_phi, split)
            w = 2.0 * math.pi * r[live] ** 2
            vals[live] = w[:, None] * v
            errs[live] = w[:, None] * e
        return vals, errs

    total, err, _ = adaptive_rt(func, r_breaks, t_breaks, 2 if split else 1, spec,
                                extend_r=unbounded)
    return [QuadResult(float(total[c]), float(err[c]), evals) for c in range(len(total))]


def direct_tilde_zeta(p, cfg: KernelConfig, spec: QuadSpec = ORACLE_SPEC,
                      n_phi: int = N_PHI) -> QuadResult:
    """int dq int dw v_o sigma (sqrt J(q) - sqrt J(q')) sqrt J(q) by nested quadrature.

    Only |p| matters, so p is taken along the z axis.
    """
    _check_direct(cfg)
    if cfg.c_phi == 0:
        return QuadResult(0.0, 0.0, 0)
    return _direct(p, cfg, spec, split=False, n_phi=n_phi)[0]


def direct_gain_loss(p, cfg: KernelConfig, spec: QuadSpec = ORACLE_SPEC,
                     n_phi: int = N_PHI) -> tuple[QuadResult, QuadResult]:
    """Separate sphere integrals of v_o sigma sqrt(J(q) J(q')) and v_o sigma J(q)."""
    if not cfg.cutoff:
        raise ValueError("gain and loss are separately finite only for cutoff kernels")
    if cfg.c_phi == 0:
        zero = QuadResult(0.0, 0.0, 0)
        return zero, zero
    loss, gain = _direct(p, cfg, spec, split=True, n_phi=n_phi)
    return gain, loss


# ---------------------------------------------------------------------------
# Monte Carlo fallback
# ---------------------------------------------------------------------------

_K2_OF_1 = 1.6248388986351774  # int_0^inf r^2 exp(-sqrt(1+r^2)) dr = K_2(1)


def _sample_juttner(rng: np.random.Generator, n: int) -> np.ndarray:
    """|q| with density r^2 exp(-sqrt(1+r^2)) / K_2(1), by rejection from Gamma(3)."""
    out = np.empty(0)
    while len(out) < n:
        r = rng.gamma(3.0, 1.0, size=2 * (n - len(out)) + 16)
        accept = rng.random(len(r)) < np.exp(r - np.sqrt(1.0 + r * r))
        out = np.concatenate([out, r[accept]])
    return out[:n]


def direct_tilde_zeta_mc(p, cfg: KernelConfig, n: int = 200_000, seed: int = 0) -> QuadResult:
    """Importance-sampled estimate; q from exp(-q0), omega uniform with antithetic phi.

    The antithetic partner (phi + pi) cancels the O(sqrt(u)) part of the
    integrand so the variance stays finite for gamma < 1.
    """
    _check_direct(cfg)
    if cfg.c_phi == 0:
        return QuadResult(0.0, 0.0, 0)
    p_norm = _p_norm(p)
    p0 = math.sqrt(1.0 + p_norm * p_norm)
    pvec = np.array([0.0, 0.0, p_norm])
    norm_q = 4.0 * math.pi * _K2_OF_1

    def sampler(rng, m):
        r = _sample_juttner(rng, m)
        mu = rng.uniform(-1.0, 1.0, m)
        az = rng.uniform(0.0, 2.0 * math.pi, m)
        u = rng.random(m)
        ph = rng.uniform(0.0, 2.0 * math.pi, m)
        sa = np.sqrt(1.0 - mu * mu)
        q = np.column_stack([r * sa * np.cos(az), r * sa * np.sin(az), r * mu])
        q0 = np.sqrt(1.0 + r * r)
        dens = np.exp(-q0) / norm_q / (4.0 * math.pi)
        return np.column_stack([q, u, ph]), dens

    def integrand(x):
        q, u, ph = x[:, :3], x[:, 3], x[:, 4]
        keep = np.linalg.norm(q - pvec, axis=1) > 0
        out = np.zeros(len(q))
        q, u, ph = q[keep], u[keep], ph[keep]
        pp = np.broadcast_to(pvec, q.shape)
        axis = com_axis(pp, q)
        e1, e2 = _orthonormal_pair(axis)
        total = np.zeros(len(q))
        q0 = np.sqrt(1.0 + np.einsum("ij,ij->i", q, q))
        for shift in (0.0, math.pi):
            trans = np.cos(ph + shift)[:, None] * e1 + np.sin(ph + shift)[:, None] * e2
            om = (1.0 - 2.0 * u)[:, None] * axis + (2.0 * np.sqrt(u * (1.0 - u)))[:, None] * trans
            om /= np.linalg.norm(om, axis=1, keepdims=True)
            p_out, q_out = post_collision(pp, q, om)
            cos_t = scattering_cos(pp, q, p_out)
            ang = sigma0(np.clip(0.5 * (1.0 - cos_t), 1e-300, 1.0), cfg)
            q0p = np.sqrt(1.0 + np.einsum("ij,ij->i", q_out, q_out))
            total += 0.5 * ang * -np.exp(-q0) * np.expm1(-0.5 * (q0p - q0))
        dq = q - pvec
        diff2 = np.einsum("ij,ij->i", dq, dq)
        cross2 = np.einsum("ij,ij->i", np.cross(pp, q), np.cross(pp, q))
        g2 = 2.0 * (diff2 + cross2) / (p0 * q0 + q[:, 2] * p_norm + 1.0)
        g = np.sqrt(g2)
        out[keep] = g * np.sqrt(g2 + 4.0) / (p0 * q0) * phi(g, cfg) * total / (4.0 * math.pi)
        return out

    mean, stderr = mc_integrate(integrand, sampler, n, seed)
    return QuadResult(mean, stderr, n)


# ---------------------------------------------------------------------------
# reduced gain and loss (r variable, Bessel weights)
# ---------------------------------------------------------------------------

def _gain_loss_points(cfg: KernelConfig):
    bound = cfg.sigma0_bound if cfg.bounded else None

    def point(v, s, g2, l, j):
        rs = np.sqrt(s)
        big_r = np.sqrt(v * v + s)
        x = rs * v * v / (2.0 * (big_r + rs))
        a1 = -l * v * v / (rs * (big_r + rs))
        z = j * v / rs
        gl2 = g2 + x
        u = x / gl2
        live = (u > 0) & (u >= cfg.delta)
        with np.errstate(divide="ignore", over="ignore"):
            ang = np.where(live, u, 1.0) ** (-1.0 - 0.5 * cfg.gamma)
        if bound is not None:
            ang = np.minimum(ang, bound)
        kern = np.where(live, v / (big_r * rs) * (gl2 + 4.0) * cfg.c_phi * gl2 ** (0.5 * cfg.rho) * ang, 0.0)
        gain = kern * np.exp(a1 + log_i0_array(z))
        loss = kern * np.exp(2.0 * a1 + log_i0_array(2.0 * z))
        return np.stack([gain, loss], axis=-1)

    return point


def _reduced_q_integral(p_norm: float, cfg: KernelConfig, spec: QuadSpec, point_fn, width: int):
    p0 = math.sqrt(1.0 + p_norm * p_norm)
    r_far = spec.q_max_override or max(40.0, 2.0 * p_norm + 40.0)
    r_breaks, t_breaks, unbounded = q_integration_mesh(p_norm, FULL, r_far)
    inner_rel = min(1e-8, max(1e-12, 1e-2 * spec.rel_tol))

    def func(r, t):
        s, g2, l, j, q0 = pair_arrays(p_norm, r, t)
        vals = np.zeros((len(r), width))
        errs = np.zeros((len(r), width))
        live = g2 > 0
        if live.any():
            v, e, _ = _inner.integrate_inner((s[live], g2[live], l[live], j[live]), cfg, "r",
                                             rel_tol=inner_rel, point_fn=point_fn, width=width)
            w = (2.0 * math.pi * r * r * np.exp(-q0) * np.sqrt(s) / (np.sqrt(g2) * p0 * q0))[live]
            vals[live] = w[:, None] * v
            errs[live] = w[:, None] * e
        return vals, errs

    total, err, n = adaptive_rt(func, r_breaks, t_breaks, width, spec, extend_r=unbounded)
    return [QuadResult(float(total[c]), float(err[c]), n * 225) for c in range(width)]


def reduced_gain_loss(p, cfg: KernelConfig, spec: QuadSpec = OUTER_SPEC
                      ) -> tuple[QuadResult, QuadResult]:
    """Gain and loss as r-integrals with I0 weights; gain - loss = -Rep2."""
    if not cfg.cutoff:
        raise ValueError("gain and loss are separately finite only for cutoff kernels")
    if cfg.c_phi == 0:
        zero = QuadResult(0.0, 0.0, 0)
        return zero, zero
    gain, loss = _reduced_q_integral(_p_norm(p), cfg, spec, _gain_loss_points(cfg), 2)
    return gain, loss


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Calibration:
    constant: float
    ratios: tuple[float, ...]
    spread: float


def calibration_ratios(cfgs, ps, spec: QuadSpec = ORACLE_SPEC,
                       reduced_spec: QuadSpec = OUTER_SPEC) -> Calibration:
    ratios = []
    for cfg in cfgs:
        if not cfg.cutoff:
            raise ValueError("calibration needs cutoff-regularised kernels")
        for p in ps:
            direct = direct_tilde_zeta(p, cfg, spec).value
            reduced = tilde_zeta(p, cfg, reduced_spec).value
            ratios.append(direct / reduced)
    arr = np.array(ratios)
    mean = float(arr.mean())
    spread = float((arr.max() - arr.min()) / abs(mean))
    return Calibration(mean, tuple(ratios), spread)


def calibrate_constant(cfgs, ps, spec: QuadSpec = ORACLE_SPEC, reduced_spec: QuadSpec = OUTER_SPEC,
                       max_spread: float = 5e-3) -> float:
    """Mean direct / Rep1 ratio over the grid; raises if the ratios spread too much."""
    cal = calibration_ratios(cfgs, ps, spec, reduced_spec)
    if not cal.spread <= max_spread:
        raise CalibrationError(f"ratios {cal.ratios} spread {cal.spread:.3g} > {max_spread}")
    return cal.constant


# ---------------------------------------------------------------------------
# divergence of the loss term written in post-collision variables
# ---------------------------------------------------------------------------

def _divergence_inner(s, g2, l, j, cfg: KernelConfig, cutoffs: np.ndarray, weighted: bool):
    """int_0^R r dr / sqrt(r^2+s) s_L sigma for every R in ``cutoffs``; shape (n, len(cutoffs))."""
    edges = np.unique(np.concatenate([[0.0], np.geomspace(1e-3, cutoffs[-1], 48), cutoffs]))
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    r = (0.5 * (a + b))[:, None] + half[:, None] * GK_NODES[None, :]  # (P, 15)
    wts = half[:, None] * GK_WEIGHTS[None, :]
    s_ = s[:, None, None]
    rs = np.sqrt(s_)
    big_r = np.sqrt(r[None] ** 2 + s_)
    x = rs * r[None] ** 2 / (2.0 * (big_r + rs))
    gl2 = g2[:, None, None] + x
    u = x / gl2
    ang = np.minimum(u ** (-1.0 - 0.5 * cfg.gamma), cfg.sigma0_bound)
    ang = np.where(u >= cfg.delta, ang, 0.0)
    f = r[None] / big_r * (gl2 + 4.0) * cfg.c_phi * gl2 ** (0.5 * cfg.a) * ang
    if weighted:
        a1 = -l[:, None, None] * r[None] ** 2 / (rs * (big_r + rs))
        z = 2.0 * j[:, None, None] * r[None] / rs
        f = f * np.exp(2.0 * a1 + log_i0_array(z))
    panel = np.einsum("npk,pk->np", f, wts)
    cum = np.cumsum(panel, axis=1)
    idx = np.searchsorted(b, cutoffs)
    return cum[:, idx]


def divergence_demo(p, cfg: KernelConfig, cutoffs, weighted: bool = False,
                    spec: QuadSpec = QuadSpec(rel_tol=1e-6)) -> list[QuadResult]:
    """Partial r-integrals of the loss term rewritten in post-collision variables.

    Without ``weighted`` the r-integrand has no exponential decay and the
    partial integrals grow without bound; with it the exponential and Bessel
    weights of the convergent loss representation are restored.
    """
    if not cfg.bounded or cfg.a < 0:
        raise ValueError("the divergence demo needs a bounded demo kernel with a >= 0")
    cuts = np.asarray(cutoffs, dtype=float)
    if cuts.ndim != 1 or not len(cuts) or np.any(cuts <= 0) or np.any(np.diff(cuts) <= 0):
        raise ValueError("cutoffs must be positive and strictly increasing")
    p_norm = _p_norm(p)
    p0 = math.sqrt(1.0 + p_norm * p_norm)
    r_breaks, t_breaks, unbounded = q_integration_mesh(p_norm, FULL, max(40.0, 2.0 * p_norm + 40.0))

    def func(r, t):
        s, g2, l, j, q0 = pair_arrays(p_norm, r, t)
        vals = np.zeros((len(r), len(cuts)))
        live = g2 > 0
        if live.any():
            inner = _divergence_inner(s[live], g2[live], l[live], j[live], cfg, cuts, weighted)
            w = (2.0 * math.pi * r * r * np.exp(-q0) / (np.sqrt(g2) * p0 * q0))[live]
            vals[live] = w[:, None] * inner
        return vals, None

    total, err, n = adaptive_rt(func, r_breaks, t_breaks, len(cuts), spec, extend_r=unbounded)
    return [QuadResult(float(total[c]), float(err[c]), n * 225) for c in range(len(cuts))]


__all__ = [
    "Calibration", "CalibrationError", "ORACLE_SPEC", "calibrate_constant", "calibration_ratios",
    "direct_gain_loss", "direct_tilde_zeta", "direct_tilde_zeta_mc", "divergence_demo",
    "reduced_gain_loss",
]
