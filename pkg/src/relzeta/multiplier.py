"""Reduced representations of the linearized frequency multiplier and its split.

Every quantity here has the form

    (1/p0) int dq/q0 exp(-q0) sqrt(s)/g  int_0^inf y dy / sqrt(y^2+1)  [inner]

over all of q-space or over the ball / shell |q| <= or >= |p|^(1/m) / 2.
The q integral is reduced to (|q|, 1 - cos angle(p, q)) by axial symmetry
and done by adaptive tensor Gauss-Kronrod; the inner integrals for all
quadrature nodes of a batch are done together in ``_inner``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _inner
from ._backend import resolve
from .kernels import (KernelConfig, LambdaVars, boosted_kernel, kernel_ratio, lambda_vars,
                      log_kernel_ratio)
from .kinematics import DegeneratePairError, PairInvariants
from .quadrature import (QuadResult, QuadSpec, QuadratureError, RegionSpec, adaptive_rt,
                         q_integration_mesh)
from .specfun import log_i0

OUTER_SPEC = QuadSpec(rel_tol=1e-6)
COMPONENTS = _inner.COMPONENTS


def default_m(cfg: KernelConfig) -> int:
    """Smallest integer m with (|rho| + 8) / (2m) <= 0.1."""
    return math.ceil(round(5.0 * (abs(cfg.rho) + 8.0), 9))


def _p_norm(p) -> float:
    arr = np.asarray(p, dtype=float)
    return float(np.linalg.norm(arr)) if arr.ndim else float(arr)


# ---------------------------------------------------------------------------
# pointwise inner integrands (without the y / sqrt(y^2+1) measure)
# ---------------------------------------------------------------------------

def _inner_parts(pair: PairInvariants, cfg: KernelConfig, y):
    if np.any(np.asarray(pair.g) == 0):
        raise DegeneratePairError("inner integrands need g > 0")
    y = np.asarray(y, dtype=float)
    w = np.sqrt(y * y + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        meas = np.where(y > 0, w / np.where(y > 0, y, 1.0), 0.0)
    pts = _inner.eval_points(y, (pair.s, pair.g2, pair.l, pair.j), 0, cfg, backend="numpy")
    out = pts * np.asarray(meas)[..., None]
    zero = y == 0
    if np.any(zero):
        out = np.where(np.asarray(zero)[..., None], 0.0, out)
    return out


def inner_zeta0(pair, cfg, y):
    """s_L sigma(g_L, theta_L) R [1 - exp(l(1 - sqrt(y^2+1))) I0(jy)]."""
    return _take(_inner_parts(pair, cfg, y), 0)


def inner_zetaL(pair, cfg, y):
    """s_L sigma(g_L, theta_L) exp(l(1 - sqrt(y^2+1))) I0(jy) (R - 1); never positive."""
    return _take(_inner_parts(pair, cfg, y), 1)


def inner_tilde0(pair, cfg, y, phi_nodes: int | None = None):
    """s_L sigma R [E2 I0(2jy) - E1 I0(jy)] with E_k = exp(k l (1 - sqrt(y^2+1))).

    With ``phi_nodes`` the azimuthal average is done by an explicit
    trapezoid rule instead of through I0.
    """
    if phi_nodes:
        return _tilde_by_phi(pair, cfg, y, phi_nodes, loss_weight=False)
    return _take(_inner_parts(pair, cfg, y), 2)


def inner_tildeL(pair, cfg, y, phi_nodes: int | None = None):
    """s_L sigma (1 - R) [E2 I0(2jy) - E1 I0(jy)]."""
    if phi_nodes:
        return _tilde_by_phi(pair, cfg, y, phi_nodes, loss_weight=True)
    return _take(_inner_parts(pair, cfg, y), 3)


def inner_zeta_square(pair, cfg, y):
    """s_L sigma R (1/pi) int_0^pi [exp(l(1 - sqrt(y^2+1)) + jy cos phi) - 1]^2 dphi."""
    return _take(_inner_parts(pair, cfg, y), 4)


def rep1_integrand(pair, cfg, y):
    """s_L sigma [R - E1 I0(jy)], computed directly."""
    y = np.asarray(y, dtype=float)
    lv = lambda_vars(pair, y)
    kern = _boosted(pair, lv, cfg, y)
    lr = log_kernel_ratio(pair.g2, pair.s, lv.k, cfg.rho)
    e1 = _a1(pair, y) + log_i0(pair.j * y)
    return _scalar(np.where(y > 0, kern * _exp_diff(lr, e1), 0.0))


def rep2_integrand(pair, cfg, y):
    """s_L sigma [E2 I0(2jy) - E1 I0(jy)], computed directly."""
    y = np.asarray(y, dtype=float)
    lv = lambda_vars(pair, y)
    kern = _boosted(pair, lv, cfg, y)
    a = _a1(pair, y)
    br = _exp_diff(2.0 * a + log_i0(2.0 * pair.j * y), a + log_i0(pair.j * y))
    return _scalar(np.where(y > 0, kern * br, 0.0))


def _exp_diff(a, b):
    # exp(a) - exp(b), accurate both near 1 and in the tails
    return np.exp(b) * np.expm1(a - b)


def _a1(pair, y):
    # l (1 - sqrt(y^2+1)) without cancellation at small y
    return -pair.l * y * y / (np.sqrt(y * y + 1.0) + 1.0)


def _boosted(pair, lv: LambdaVars, cfg, y):
    safe = np.where(np.asarray(y) > 0, lv.sin2half_lambda, 1.0)
    lv_safe = LambdaVars(lv.g_lambda2, lv.s_lambda, safe, lv.cos_lambda, lv.k)
    return boosted_kernel(pair, lv_safe, cfg)


def _tilde_by_phi(pair, cfg, y, n_phi, loss_weight):
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lv = lambda_vars(pair, y)
    kern = _boosted(pair, lv, cfg, y)
    ratio = kernel_ratio(pair, lv, cfg)
    weight = (1.0 - ratio) if loss_weight else ratio
    # (1/pi) int_0^pi F(cos phi) dphi by the trapezoid rule on the full period
    phis = 2.0 * math.pi * np.arange(n_phi) / n_phi
    a = _a1(pair, y)
    ex = pair.j * y[:, None] * np.cos(phis)[None, :]
    h = a[:, None] + ex
    br = np.mean(_exp_diff(2.0 * h, h), axis=1)
    out = np.where(y > 0, kern * weight * br, 0.0)
    return float(out[0]) if scalar else out


def _take(arr, c):
    out = arr[..., c]
    return _scalar(out)


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def bracket_critical_points(l: float, j: float, cos_phi: float = 1.0) -> tuple[float, float]:
    """Stationary point and positive zero of h(y) = l(1 - sqrt(y^2+1)) + j y cos(phi)."""
    c = j * cos_phi
    if not 0.0 < cos_phi <= 1.0:
        raise ValueError("cos_phi must lie in (0, 1]")
    if c >= l:
        raise ValueError("need j cos(phi) < l")
    d = (l - c) * (l + c)
    return c / math.sqrt(d), 2.0 * l * c / d


# ---------------------------------------------------------------------------
# q integration
# ---------------------------------------------------------------------------

def pair_arrays(p_norm: float, r: np.ndarray, t: np.ndarray):
    """Invariants (s, g^2, l, j) for |p| = p_norm, |q| = r, cos angle = 1 - t."""
    p0 = math.sqrt(1.0 + p_norm * p_norm)
    q0 = np.sqrt(1.0 + r * r)
    mu = 1.0 - t
    cross = p_norm * r * np.sqrt(np.maximum(t * (2.0 - t), 0.0))
    diff2 = (p_norm - r) ** 2 + 2.0 * p_norm * r * t
    g2 = 2.0 * (diff2 + cross * cross) / (p0 * q0 + p_norm * r * mu + 1.0)
    s = g2 + 4.0
    l = 0.25 * (p0 + q0)
    j = cross / (2.0 * np.sqrt(g2))
    return s, g2, l, j, q0


def _inner_tol(spec: QuadSpec) -> float:
    return min(1e-8, max(1e-12, 1e-2 * spec.rel_tol))


def q_integral(p_norm: float, cfg: KernelConfig, region: RegionSpec, spec: QuadSpec = OUTER_SPEC,
               form: str = "y", need_tilde: bool = True, backend: str | None = None
               ) -> dict[str, QuadResult]:
    """All inner components integrated over q in ``region`` (constant 1 convention)."""
    backend = resolve(backend)
    return dict(zip(COMPONENTS if need_tilde else COMPONENTS[:2],
                    _q_integral_cached(p_norm, cfg, region, spec, form, need_tilde, backend)))


@lru_cache(maxsize=256)
def _q_integral_cached(p_norm, cfg, region, spec, form, need_tilde, backend):
    if cfg.c_phi == 0:
        return tuple(QuadResult(0.0, 0.0, 0) for _ in range(5 if need_tilde else 2))
    p0 = math.sqrt(1.0 + p_norm * p_norm)
    r_far = spec.q_max_override or max(40.0, 2.0 * p_norm + 40.0)
    r_breaks, t_breaks, unbounded = q_integration_mesh(p_norm, region, r_far)
    if spec.q_max_override:
        unbounded = False
    ncomp = 5 if need_tilde else 2
    inner_rel = _inner_tol(spec)
    evals = 0

    def func(r, t):
        nonlocal evals
        s, g2, l, j, q0 = pair_arrays(p_norm, r, t)
        vals = np.zeros((len(r), ncomp))
        errs = np.zeros((len(r), ncomp))
        live = (g2 > 0) & (2.0 * np.pi * r * r * np.exp(-q0) > 0)
        if live.any():
            v, e, _ = _inner.integrate_inner((s[live], g2[live], l[live], j[live]), cfg, form,
                                             rel_tol=inner_rel, need_tilde=need_tilde,
                                             backend=backend)
            w = (2.0 * np.pi * r * r * np.exp(-q0) * np.sqrt(s) / (np.sqrt(g2) * p0 * q0))[live]
            vals[live] = w[:, None] * v[:, :ncomp]
            errs[live] = np.abs(w)[:, None] * e[:, :ncomp]
        evals += len(r)
        return vals, errs

    total, err, _ = adaptive_rt(func, r_breaks, t_breaks, ncomp, spec, extend_r=unbounded)
    return tuple(QuadResult(float(total[c]), float(err[c]), evals) for c in range(ncomp))


def _region(kind: str, m: float | None, cfg: KernelConfig) -> RegionSpec:
    return RegionSpec(kind, float(m if m is not None else default_m(cfg)))


def _component(p, cfg, region, spec, name, form="y"):
    need = name not in ("zeta0", "zetaL")
    return q_integral(_p_norm(p), cfg, region, spec, form, need_tilde=need)[name]


def zeta0(p, cfg: KernelConfig, region: RegionSpec = RegionSpec(), spec: QuadSpec = OUTER_SPEC):
    return _component(p, cfg, region, spec, "zeta0")


def zetaL(p, cfg: KernelConfig, region: RegionSpec = RegionSpec(), spec: QuadSpec = OUTER_SPEC):
    return _component(p, cfg, region, spec, "zetaL")


def tilde_zeta0(p, cfg: KernelConfig, region: RegionSpec = RegionSpec(), spec: QuadSpec = OUTER_SPEC):
    return _component(p, cfg, region, spec, "tilde0")


def tilde_zetaL(p, cfg: KernelConfig, region: RegionSpec = RegionSpec(), spec: QuadSpec = OUTER_SPEC):
    return _component(p, cfg, region, spec, "tildeL")


def zeta0_alt_forms(p, cfg: KernelConfig, spec: QuadSpec = OUTER_SPEC, form: str = "y",
                    region: RegionSpec = RegionSpec()):
    """zeta0 with the inner integral taken in y, r = sqrt(s) y or k = g_L^2 - g^2."""
    if form not in _inner.FORMS:
        raise ValueError(f"form must be one of {tuple(_inner.FORMS)}")
    return _component(p, cfg, region, spec, "zeta0", form)


def tilde_zeta(p, cfg: KernelConfig, spec: QuadSpec = OUTER_SPEC, rep: str = "rep1",
               region: RegionSpec = RegionSpec()) -> QuadResult:
    """The frequency multiplier, rep1 = zeta0 + zetaL, rep2 = tilde0 + tildeL."""
    p_norm = _p_norm(p)
    if rep == "rep1":
        res = q_integral(p_norm, cfg, region, spec, need_tilde=False)
        return res["zeta0"] + res["zetaL"]
    if rep == "rep2":
        res = q_integral(p_norm, cfg, region, spec, need_tilde=True)
        return res["tilde0"] + res["tildeL"]
    raise ValueError("rep must be 'rep1' or 'rep2'")


# ---------------------------------------------------------------------------
# the split into a positive leading part and a remainder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierBreakdown:
    p0: float
    cfg: KernelConfig
    m: float
    tilde_zeta: QuadResult
    zeta: QuadResult
    zeta_k: QuadResult
    zeta0_full: QuadResult
    zetaL_full: QuadResult
    zeta0_m: QuadResult
    zetaL_m: QuadResult
    tilde_zeta0_m: QuadResult
    tilde_zetaL_m: QuadResult
    tilde_zeta1: QuadResult
    calibration_constant: float = 1.0
    notes: tuple[str, ...] = field(default=())

    @property
    def closure_residual(self) -> float:
        return self.zeta.value + self.zeta_k.value - self.tilde_zeta.value

    @property
    def closure_error(self) -> float:
        return self.zeta.err_estimate + self.zeta_k.err_estimate + self.tilde_zeta.err_estimate

    def as_dict(self) -> dict:
        def q(r: QuadResult):
            c = self.calibration_constant
            return {"value": r.value * c, "err": r.err_estimate * abs(c)}
        return {
            "p0": self.p0, "kernel": self.cfg.describe(), "m": self.m,
            "calibrationConstant": self.calibration_constant,
            "tildeZeta": q(self.tilde_zeta), "zeta": q(self.zeta), "zetaK": q(self.zeta_k),
            "zeta0Full": q(self.zeta0_full), "zetaLFull": q(self.zetaL_full),
            "zeta0m": q(self.zeta0_m), "zetaLm": q(self.zetaL_m),
            "tildeZeta0m": q(self.tilde_zeta0_m), "tildeZetaLm": q(self.tilde_zetaL_m),
            "tildeZeta1": q(self.tilde_zeta1),
            "closureResidual": self.closure_residual * self.calibration_constant,
            "closureError": self.closure_error * abs(self.calibration_constant),
        }


def leading_weight(p0: float, cfg: KernelConfig) -> float:
    return p0 ** (0.5 * (cfg.rho + cfg.gamma))


def breakdown(p, cfg: KernelConfig, m: float | None = None, spec: QuadSpec = OUTER_SPEC,
              calibration_constant: float = 1.0) -> MultiplierBreakdown:
    p_norm = _p_norm(p)
    p0 = math.sqrt(1.0 + p_norm * p_norm)
    m = float(m if m is not None else default_m(cfg))
    zero = QuadResult(0.0, 0.0, 0)
    full = q_integral(p_norm, cfg, RegionSpec("full", m), spec, need_tilde=False)
    tz = full["zeta0"] + full["zetaL"]
    weight = leading_weight(p0, cfg)
    small_on = p_norm >= 1.0
    low_on = p_norm <= 1.0
    if small_on:
        small = q_integral(p_norm, cfg, RegionSpec("small", m), spec, need_tilde=True)
        large = q_integral(p_norm, cfg, RegionSpec("large", m), spec, need_tilde=False)
        z0m, zLm = small["zeta0"], small["zetaL"]
        t0m, tLm = small["tilde0"], small["tildeL"]
        t1 = large["zeta0"] + large["zetaL"]
        square = small["square"].scaled(0.5)
    else:
        z0m = zLm = t0m = tLm = t1 = square = zero
    bump = QuadResult(weight if low_on else 0.0, 0.0, 0)
    zeta_val = square + bump
    zk = t1 + (zLm + tLm).scaled(0.5)
    if low_on:
        zk = zk + tz + bump.scaled(-1.0)
    return MultiplierBreakdown(p0, cfg, m, tz, zeta_val, zk, full["zeta0"], full["zetaL"],
                               z0m, zLm, t0m, tLm, t1, calibration_constant)


def zeta(p, cfg: KernelConfig, m: float | None = None, spec: QuadSpec = OUTER_SPEC) -> QuadResult:
    """Positive leading part: half the perfect-square integral over the small-q ball."""
    return breakdown(p, cfg, m, spec).zeta


def zetaK(p, cfg: KernelConfig, m: float | None = None, spec: QuadSpec = OUTER_SPEC) -> QuadResult:
    return breakdown(p, cfg, m, spec).zeta_k


__all__ = [
    "MultiplierBreakdown", "RegionSpec", "QuadratureError", "bracket_critical_points", "breakdown",
    "default_m", "inner_tilde0", "inner_tildeL", "inner_zeta0", "inner_zetaL", "inner_zeta_square",
    "q_integral", "rep1_integrand", "rep2_integrand", "tilde_zeta", "tilde_zeta0", "tilde_zetaL",
    "zeta", "zeta0", "zeta0_alt_forms", "zetaK", "zetaL",
]
