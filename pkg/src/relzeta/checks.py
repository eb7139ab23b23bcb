"""Randomised invariant suites behind ``verify-identities``.

Each suite returns a list of ``Check`` rows (name, worst observed value,
limit).  The quadrature oracles use scipy's ``quad`` and ``i0e`` so they
share no code with the closed forms under test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import i0e, roots_laguerre, roots_legendre

from . import _inner
from .kernels import KernelConfig, kernel_ratio, lambda_vars
from .kinematics import (mixed_g_residual, com_frame, energy, four_vector, pair_invariants,
                         post_collision, ETA)
from .multiplier import (pair_arrays, inner_tilde0, inner_tildeL, inner_zeta0, inner_zeta_square, inner_zetaL,
                         rep1_integrand, rep2_integrand)
from .specfun import j2_closed, k2tilde_closed, kbar_gamma_num, log_i0


@dataclass(frozen=True)
class Check:
    name: str
    worst: float
    limit: float

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.worst) and self.worst <= self.limit)

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: worst {self.worst:.3e} (limit {self.limit:.1e})"


def random_momenta(rng: np.random.Generator, n: int, max_p: float) -> np.ndarray:
    """Uniform directions with |p| uniform on [0, max_p]."""
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * rng.uniform(0.0, max_p, size=(n, 1))


def random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _rel(a, b, floor=0.0):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def kinematics_suite(n: int = 10_000, seed: int = 0, max_p: float = 50.0) -> list[Check]:
    rng = np.random.default_rng(seed)
    p, q = random_momenta(rng, n, max_p), random_momenta(rng, n, max_p)
    inv = pair_invariants(p, q)
    p0, q0 = inv.p0, inv.q0
    diff = inv.diff_norm
    s_direct = 2.0 + 2.0 * (p0 * q0 - np.einsum("ij,ij->i", p, q))
    slack = 1e-12
    rows = [
        Check("s = g^2 + 4", float(np.max(_rel(s_direct, inv.g2 + 4.0))), 1e-12),
        Check("g <= |p - q|", float(np.max((inv.g - diff) / np.maximum(diff, 1.0))), slack),
        Check("sqrt(|p-q|^2 + |pxq|^2 / (p0 q0)) <= g",
              float(np.max((np.sqrt((diff ** 2 + inv.cross_norm ** 2) / (p0 * q0)) - inv.g)
                           / np.maximum(inv.g, 1.0))), slack),
        Check("|p0 - q0| <= |p - q|", float(np.max((np.abs(p0 - q0) - diff) / np.maximum(diff, 1.0))), slack),
        Check("s <= 4 p0 q0", float(np.max((inv.s - 4.0 * p0 * q0) / (4.0 * p0 * q0))), slack),
        Check("j <= l", float(np.max((inv.j - inv.l) / inv.l)), slack),
    ]
    ok = inv.g >= 1e-6
    lhs = (inv.l ** 2 - inv.j ** 2)[ok]
    rhs = (inv.s * diff ** 2 / (16.0 * inv.g2))[ok]
    rows.append(Check("l^2 - j^2 = s |p-q|^2 / (16 g^2)", float(np.max(_rel(lhs, rhs))), 1e-10))
    omega = random_unit(rng, n)
    pp, qp = post_collision(p, q, omega)
    before = four_vector(p) + four_vector(q)
    after = four_vector(pp) + four_vector(qp)
    cons = np.max(np.abs(after - before), axis=1) / before[:, 0]
    rows.append(Check("four-momentum conservation", float(np.max(cons)), 1e-12))
    mixed = np.abs(mixed_g_residual(p, q, pp, qp)) / inv.s
    rows.append(Check("g^2 vs mixed-pair g identity residual / s", float(np.max(mixed)), 1e-10))
    return rows


def frame_suite(n: int = 1_000, seed: int = 0, max_p: float = 50.0) -> list[Check]:
    rng = np.random.default_rng(seed + 1)
    worst_eta = worst_sum = worst_diff = 0.0
    done = 0
    while done < n:
        p, q = random_momenta(rng, 1, max_p)[0], random_momenta(rng, 1, max_p)[0]
        inv = pair_invariants(p, q)
        if inv.cross_norm < 1e-6 * inv.p0 * inv.q0:
            continue
        lam = com_frame(p, q).matrix
        worst_eta = max(worst_eta, float(np.max(np.abs(lam.T @ ETA @ lam - ETA))))
        tot = lam @ (four_vector(p) + four_vector(q))
        worst_sum = max(worst_sum, float(np.max(np.abs(tot - [math.sqrt(inv.s), 0, 0, 0]))))
        rel = -(lam @ (four_vector(p) - four_vector(q)))
        worst_diff = max(worst_diff, float(np.max(np.abs(rel - [0, 0, 0, inv.g]))))
        done += 1
    return [Check("Lambda^T eta Lambda = eta", worst_eta, 1e-10),
            Check("Lambda (p + q) = (sqrt s, 0, 0, 0)", worst_sum, 1e-10),
            Check("-Lambda (p - q) = (0, 0, 0, g)", worst_diff, 1e-10)]


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def log_i0_by_quadrature(x: float) -> float:
    """log of (1/pi) int_0^pi exp(x cos phi) dphi.

    Small x integrates I0 - 1 = (1/pi) int 2 sinh^2(x cos phi / 2), which has no
    cancellation; large x pulls the exp(x) factor out of the integrand.
    """
    if x <= 2.0:
        val, _ = quad(lambda t: 2.0 * math.sinh(0.5 * x * math.cos(t)) ** 2, 0.0, math.pi,
                      epsabs=0.0, epsrel=1e-13, limit=200)
        return math.log1p(val / math.pi)
    val, _ = quad(lambda t: math.exp(x * (math.cos(t) - 1.0)), 0.0, math.pi,
                  epsabs=0.0, epsrel=1e-13, limit=200)
    return x + math.log(val / math.pi)


def _weighted_y_integral(l: float, j: float, power) -> float:
    """int_0^inf y power(w) exp(-l w) I0(jy) dy * exp(sqrt(l^2-j^2)), w = sqrt(y^2+1)."""
    w0 = math.sqrt((l - j) * (l + j))

    def f(y):
        w = math.sqrt(y * y + 1.0)
        return y * power(w) * math.exp(-l * w + j * y + w0) * i0e(j * y)

    peak = j / w0
    width = 1.0 / math.sqrt(w0)
    top = peak + 60.0 * max(width, 1.0 / (l - j))
    pts = sorted({peak, max(peak - 5 * width, 0.0), peak + 5 * width})
    pts = [t for t in pts if 0.0 < t < top]
    val, _ = quad(f, 0.0, top, points=pts or None, epsabs=0.0, epsrel=1e-13, limit=400)
    return val


def j2_by_quadrature(l: float, j: float) -> float:
    w0 = math.sqrt((l - j) * (l + j))
    return _weighted_y_integral(l, j, lambda w: 1.0 / w) * math.exp(-w0)


def k2tilde_by_quadrature(l: float, j: float) -> float:
    w0 = math.sqrt((l - j) * (l + j))
    return _weighted_y_integral(l, j, lambda w: w) * math.exp(-w0)


def lj_grid(n: int = 10):
    for l in np.linspace(1.0, 50.0, n):
        for frac in np.linspace(0.0, 0.95, n):
            yield float(l), float(frac * l)


def specfun_suite(n_grid: int = 10) -> list[Check]:
    xs = np.concatenate([[0.0, 1e-8, 1e-3, 0.1], np.linspace(0.5, 30.0, 60)])
    err_i0 = max(abs(log_i0(x) - log_i0_by_quadrature(x)) / max(abs(log_i0_by_quadrature(x)), 1e-300)
                 if x > 0 else abs(log_i0(x)) for x in xs)
    err_j2 = err_k2 = kbar_worst = max_worst = 0.0
    xgrid = np.linspace(0.0, 1.0, 1001)
    for l, j in lj_grid(n_grid):
        w0 = math.sqrt((l - j) * (l + j))
        err_j2 = max(err_j2, abs(j2_closed(l, j) / j2_by_quadrature(l, j) - 1.0))
        err_k2 = max(err_k2, abs(k2tilde_closed(l, j) / k2tilde_by_quadrature(l, j) - 1.0))
        for gamma in (0.5, 1.0, 1.5):
            kbar_worst = max(kbar_worst, kbar_gamma_num(l, j, gamma) / math.exp(-w0))
        mx = np.max(np.exp(-l * np.sqrt(xgrid ** 2 + 1.0) + j * xgrid + w0))
        max_worst = max(max_worst, float(mx))
    return [Check("log_i0 vs quadrature (rel)", float(err_i0), 1e-10),
            Check("j2_closed vs quadrature (rel)", err_j2, 1e-8),
            Check("k2tilde_closed vs quadrature (rel)", err_k2, 1e-6),
            Check("Kbar_gamma / exp(-sqrt(l^2-j^2))", kbar_worst, 10.0),
            Check("max_x exp(-l sqrt(x^2+1) + jx) / exp(-sqrt(l^2-j^2))", max_worst, 3.0)]


# ---------------------------------------------------------------------------
# kernel and inner-integrand algebra
# ---------------------------------------------------------------------------

CANONICAL = (KernelConfig(0.5, "hard", a=1.0), KernelConfig(1.2, "soft", b=1.5))


def random_kernel(rng: np.random.Generator) -> KernelConfig:
    gamma = float(rng.uniform(0.1, 1.9))
    if rng.random() < 0.5:
        return KernelConfig(gamma, "hard", a=float(rng.uniform(-gamma, 1.9)))
    return KernelConfig(gamma, "soft", b=float(rng.uniform(gamma + 0.01, 1.99)))


def inner_algebra_suite(n: int = 1_000, seed: int = 0, max_p: float = 50.0) -> list[Check]:
    rng = np.random.default_rng(seed + 2)
    worst = {"zeta0 + zetaL = Rep1": 0.0, "tilde0 + tildeL = Rep2": 0.0,
             "square = zeta0 + tilde0": 0.0}
    mono = 0.0
    sign = 0.0
    for _ in range(n):
        p, q = random_momenta(rng, 1, max_p)[0], random_momenta(rng, 1, max_p)[0]
        pair = pair_invariants(p, q)
        if pair.g < 1e-6:
            continue
        cfg = random_kernel(rng)
        y = float(10.0 ** rng.uniform(-4, 1.5))
        z0, zl = inner_zeta0(pair, cfg, y), inner_zetaL(pair, cfg, y)
        t0, tl = inner_tilde0(pair, cfg, y), inner_tildeL(pair, cfg, y)
        sq = inner_zeta_square(pair, cfg, y)
        r1, r2 = rep1_integrand(pair, cfg, y), rep2_integrand(pair, cfg, y)
        scale1 = abs(z0) + abs(zl) + 1e-300
        scale2 = abs(t0) + abs(tl) + 1e-300
        scale3 = abs(z0) + abs(t0) + 1e-300
        worst["zeta0 + zetaL = Rep1"] = max(worst["zeta0 + zetaL = Rep1"], abs(z0 + zl - r1) / scale1)
        worst["tilde0 + tildeL = Rep2"] = max(worst["tilde0 + tildeL = Rep2"], abs(t0 + tl - r2) / scale2)
        worst["square = zeta0 + tilde0"] = max(worst["square = zeta0 + tilde0"], abs(sq - z0 - t0) / scale3)
        lv = lambda_vars(pair, y)
        mono = max(mono, pair.g2 - lv.g_lambda2, kernel_ratio(pair, lv, cfg) - 1.0)
        sign = max(sign, zl, -sq)
    rows = [Check(k, v, 1e-12) for k, v in worst.items()]
    rows.append(Check("g_L >= g and kernel ratio <= 1", mono, 0.0))
    rows.append(Check("zetaL integrand <= 0 and square integrand >= 0", sign, 0.0))
    return rows


def _shared_q_rule(n_r: int = 24, n_t: int = 16):
    # Gauss-Laguerre in r (absorbs exp(-r) ~ exp(-q0)) times Gauss-Legendre in t on [0, 2]
    xr, wr = roots_laguerre(n_r)
    xt, wt = roots_legendre(n_t)
    r, t = np.meshgrid(xr, 1.0 + xt, indexing="ij")
    w = np.outer(wr * np.exp(xr), wt)
    return r.ravel(), t.ravel(), w.ravel()


def zeta0_on_rule(p_norm: float, cfg: KernelConfig, form: str, rule=None) -> float:
    """zeta0 with the q integral replaced by a fixed product rule shared by all forms."""
    r, t, w = rule if rule is not None else _shared_q_rule()
    p0 = math.sqrt(1.0 + p_norm * p_norm)
    s, g2, l, j, q0 = pair_arrays(p_norm, r, t)
    live = g2 > 1e-12
    v, _, _ = _inner.integrate_inner((s[live], g2[live], l[live], j[live]), cfg, form,
                                     rel_tol=1e-11, need_tilde=False)
    outer = (w * 2.0 * math.pi * r * r * np.exp(-q0) * np.sqrt(s) / (np.sqrt(g2) * p0 * q0))[live]
    return float(np.dot(outer, v[:, 0]))


def forms_suite(n: int = 50, seed: int = 0, max_p: float = 50.0) -> list[Check]:
    """zeta0 in y-, r- and k-forms over one shared q rule, so only the inner forms differ."""
    rng = np.random.default_rng(seed + 3)
    rule = _shared_q_rule()
    worst = 0.0
    for _ in range(n):
        p_norm = float(rng.uniform(0.0, max_p))
        cfg = random_kernel(rng)
        vals = [zeta0_on_rule(p_norm, cfg, f, rule) for f in ("y", "r", "k")]
        worst = max(worst, (max(vals) - min(vals)) / max(abs(vals[0]), 1e-300))
    return [Check("zeta0 y/r/k forms agree (rel)", worst, 1e-6)]


def run_all(n: int = 10_000, seed: int = 0, max_p: float = 50.0) -> list[Check]:
    return (kinematics_suite(n, seed, max_p) + frame_suite(min(n, 1_000), seed, max_p)
            + specfun_suite() + inner_algebra_suite(min(n, 1_000), seed, max_p)
            + forms_suite(50, seed, max_p))


__all__ = ["CANONICAL", "Check", "forms_suite", "frame_suite", "inner_algebra_suite", "j2_by_quadrature",
           "k2tilde_by_quadrature", "kinematics_suite", "log_i0_by_quadrature", "random_kernel",
           "random_momenta", "random_unit", "run_all", "specfun_suite", "zeta0_on_rule"]
