"""Adaptive quadrature used throughout the package.

Everything here works on vectorised integrands: ``f`` receives a numpy
array of abscissae and must return an array of the same shape.  Panels use
the 7-point Gauss / 15-point Kronrod pair; endpoint power singularities are
absorbed by a Gauss-Jacobi starting panel.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

Array = np.ndarray


class QuadratureError(RuntimeError):
    """Requested tolerance not reached within the panel budget."""


@dataclass(frozen=True)
class QuadSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-300
    max_depth: int = 50
    tail_log_threshold: float = 40.0
    q_max_override: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


@dataclass(frozen=True)
class QuadResult:
    value: float
    err_estimate: float
    evals: int = 0

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(self.value + other.value, self.err_estimate + other.err_estimate,
                          self.evals + other.evals)

    def scaled(self, factor: float) -> "QuadResult":
        return QuadResult(self.value * factor, self.err_estimate * abs(factor), self.evals)


# 15-point Kronrod abscissae on [-1, 1] in ascending order; the odd-indexed
# entries are the 7 Gauss points.
_XK_HALF = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK_HALF = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_HALF = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

GK_NODES = np.concatenate([-_XK_HALF, _XK_HALF[-2::-1]])
GK_WEIGHTS = np.concatenate([_WK_HALF, _WK_HALF[-2::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1:15:2] = np.concatenate([_WG_HALF, _WG_HALF[-2::-1]])

JACOBI_ORDERS = (12, 20)


@lru_cache(maxsize=64)
def jacobi_rule(n: int, alpha: float) -> tuple[Array, Array]:
    """Nodes and weights on [-1, 1] for the weight (1 + x)^alpha."""
    x, w = roots_jacobi(n, 0.0, alpha)
    return x, w


# ---------------------------------------------------------------------------
# one-dimensional panels
# ---------------------------------------------------------------------------

@dataclass(order=True)
class _Panel:
    sort_key: float
    a: float = field(compare=False)
    b: float = field(compare=False)
    kind: str = field(compare=False)  # "gk", "jacobi" (singular at a = 0) or "tail" ([a, inf))
    depth: int = field(compare=False)
    value: float = field(compare=False, default=0.0)
    error: float = field(compare=False, default=0.0)


def _eval_gk(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    fx = np.asarray(f(0.5 * (a + b) + half * GK_NODES), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError(f"non-finite integrand on [{a}, {b}]")
    k = half * float(GK_WEIGHTS @ fx)
    g = half * float(GAUSS_WEIGHTS @ fx)
    return k, abs(k - g)


def _eval_tail(f, a: float) -> tuple[float, float]:
    # y = a / t maps t in (0, 1] onto [a, inf); dy = a / t^2 dt
    t = 0.5 + 0.5 * GK_NODES
    y = a / t
    fx = np.asarray(f(y), dtype=float) * a / (t * t)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError(f"non-finite integrand on [{a}, inf)")
    k = 0.5 * float(GK_WEIGHTS @ fx)
    g = 0.5 * float(GAUSS_WEIGHTS @ fx)
    return k, abs(k - g)


def _eval_jacobi(f, b: float, alpha: float) -> tuple[float, float]:
    vals = []
    for n in JACOBI_ORDERS:
        x, w = jacobi_rule(n, alpha)
        y = 0.5 * b * (1.0 + x)
        fx = np.asarray(f(y), dtype=float) / y ** alpha
        if not np.all(np.isfinite(fx)):
            raise QuadratureError(f"non-finite integrand on (0, {b}]")
        vals.append((0.5 * b) ** (1.0 + alpha) * float(w @ fx))
    return vals[-1], abs(vals[-1] - vals[0])


def _adaptive_1d(f, panels: list[tuple[float, float, str]], spec: QuadSpec,
                 alpha: float = 0.0, max_panels: int = 4000) -> QuadResult:
    evals = 0

    def evaluate(a, b, kind, depth):
        nonlocal evals
        if kind == "gk":
            v, e = _eval_gk(f, a, b)
            evals += 15
        elif kind == "tail":
            v, e = _eval_tail(f, a)
            evals += 15
        else:
            v, e = _eval_jacobi(f, b, alpha)
            evals += sum(JACOBI_ORDERS)
        return _Panel(-e, a, b, kind, depth, v, e)

    heap = [evaluate(a, b, kind, 0) for a, b, kind in panels]
    heapq.heapify(heap)
    frozen: list[_Panel] = []
    while True:
        total = math.fsum(p.value for p in heap) + math.fsum(p.value for p in frozen)
        err = math.fsum(p.error for p in heap) + math.fsum(p.error for p in frozen)
        if err <= spec.tolerance(total):
            return QuadResult(total, err, evals)
        if not heap or len(heap) + len(frozen) > max_panels:
            raise QuadratureError(
                f"tolerance unreachable: value {total:.6g}, error {err:.3g}, {evals} evaluations")
        worst = heapq.heappop(heap)
        if worst.depth >= spec.max_depth:
            frozen.append(worst)
            continue
        d = worst.depth + 1
        if worst.kind == "jacobi":
            cut = 0.25 * worst.b
            children = [(0.0, cut, "jacobi"), (cut, worst.b, "gk")]
        elif worst.kind == "tail":
            children = [(worst.a, 4.0 * worst.a, "gk"), (4.0 * worst.a, math.inf, "tail")]
        else:
            mid = 0.5 * (worst.a + worst.b)
            if worst.a > 0 and worst.b > 8.0 * worst.a:
                mid = math.sqrt(worst.a * worst.b)
            children = [(worst.a, mid, "gk"), (mid, worst.b, "gk")]
        for a, b, kind in children:
            heapq.heappush(heap, evaluate(a, b, kind, d))


def integrate_adaptive(f: Callable[[Array], Array], a: float, b: float,
                       spec: QuadSpec = QuadSpec()) -> QuadResult:
    """Globally adaptive Gauss-Kronrod quadrature of f over [a, b]."""
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if math.isinf(b):
        if a <= 0:
            raise ValueError("semi-infinite ranges must start at a > 0")
        return _adaptive_1d(f, [(a, b, "tail")], spec)
    return _adaptive_1d(f, [(a, b, "gk")], spec)


def integrate_singular_finite(f: Callable[[Array], Array], singular_exponent: float, b: float,
                              spec: QuadSpec = QuadSpec()) -> QuadResult:
    """Integral of f over [0, b] where f(y) / y^singular_exponent is smooth at 0."""
    if not -1.0 < singular_exponent <= 1.0:
        raise ValueError("singular_exponent must lie in (-1, 1]")
    cut = 0.25 * b
    return _adaptive_1d(f, [(0.0, cut, "jacobi"), (cut, b, "gk")], spec, alpha=singular_exponent)


def integrate_singular_semiinf(f: Callable[[Array], Array], singular_exponent: float,
                               decay_rate: float, spec: QuadSpec = QuadSpec()) -> QuadResult:
    """Integral of f over [0, inf) with f ~ y^singular_exponent at 0 and exponential decay.

    The range is truncated at Y where the log-integrand has fallen
    ``spec.tail_log_threshold`` below its observed peak; Y is pushed out
    until that holds.
    """
    if not decay_rate > 0:
        raise ValueError("decay_rate must be positive")
    y_grid = np.geomspace(1e-3, 1.0 + spec.tail_log_threshold / decay_rate, 200)
    with np.errstate(divide="ignore"):
        log_f = np.log(np.abs(np.asarray(f(y_grid), dtype=float)))
    peak = float(np.max(log_f))
    y_peak = float(y_grid[int(np.argmax(log_f))])
    big_y = max(2.0, y_peak + spec.tail_log_threshold / decay_rate)
    for _ in range(60):
        with np.errstate(divide="ignore"):
            at_y = math.log(abs(float(f(np.array([big_y]))[0])) or 1e-320)
        if at_y < peak - spec.tail_log_threshold:
            break
        big_y *= 2.0
    else:
        raise QuadratureError("integrand does not decay")
    head = integrate_singular_finite(f, singular_exponent, 1.0, spec)
    body = _adaptive_1d(f, [(1.0, big_y, "gk")], spec)
    return head + body


# ---------------------------------------------------------------------------
# axisymmetric q integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionSpec:
    """Which part of q-space to integrate: all of it, |q| <= R or |q| >= R.

    R = 0.5 |p|^(1/m).
    """
    kind: str = "full"
    m: float = 45.0

    def __post_init__(self):
        if self.kind not in ("full", "small", "large"):
            raise ValueError(f"region kind must be full, small or large, got {self.kind!r}")
        if not self.m >= 1.0:
            raise ValueError(f"m must be >= 1, got {self.m}")

    def radius(self, p_norm: float) -> float:
        return 0.5 * p_norm ** (1.0 / self.m)


FULL = RegionSpec("full")


def region_bounds(region: RegionSpec, p_norm: float) -> tuple[float, float]:
    if region.kind == "full":
        return 0.0, math.inf
    if p_norm <= 0:
        raise ValueError("a split region needs |p| > 0")
    r = region.radius(p_norm)
    return (0.0, r) if region.kind == "small" else (r, math.inf)


def _radial_breaks(p_norm: float, lo: float, hi: float, r_far: float) -> np.ndarray:
    pts = [lo]
    if p_norm > 0 and p_norm < 60.0:
        # geometric grading toward the q = p singular point
        pts += [p_norm * (1.0 + s * 0.5 ** k) for k in range(1, 7) for s in (-1.0, 1.0)]
        pts.append(p_norm)
    pts += [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
    if p_norm > 0:
        pts += [p_norm, 0.5 * p_norm, 2.0 * p_norm]
    top = hi if math.isfinite(hi) else r_far
    pts.append(top)
    pts = np.unique(np.array([x for x in pts if lo <= x <= top]))
    keep = [pts[0]]
    for x in pts[1:]:
        if x - keep[-1] > 1e-9 * max(1.0, x):
            keep.append(x)
    return np.array(keep)


ANGLE_BREAKS = np.array([0.0, 4.0 ** -5, 4.0 ** -4, 4.0 ** -3, 4.0 ** -2, 0.25, 1.0, 2.0])


@dataclass
class _RectBatch:
    r0: Array
    r1: Array
    t0: Array
    t1: Array


def _tensor_nodes(batch: _RectBatch) -> tuple[Array, Array, Array, Array]:
    hr = 0.5 * (batch.r1 - batch.r0)
    ht = 0.5 * (batch.t1 - batch.t0)
    r = 0.5 * (batch.r0 + batch.r1)[:, None] + hr[:, None] * GK_NODES[None, :]
    t = 0.5 * (batch.t0 + batch.t1)[:, None] + ht[:, None] * GK_NODES[None, :]
    rr = np.repeat(r[:, :, None], 15, axis=2)
    tt = np.repeat(t[:, None, :], 15, axis=1)
    return rr.reshape(-1), tt.reshape(-1), hr, ht


def adaptive_rt(func, r_breaks: Array, t_breaks: Array, ncomp: int, spec: QuadSpec,
                extend_r: bool = False, max_rects: int = 60000,
                r_limit: float = 1e5) -> tuple[Array, Array, int]:
    """Globally adaptive tensor Gauss-Kronrod over rectangles in (r, t).

    ``func(r, t)`` maps flat node arrays to ``(values, errors)`` of shape
    (n, ncomp); ``errors`` (per-node inner errors) may be None.

    Returns per-component integral values, error estimates and the number of
    rectangles evaluated.  With ``extend_r`` the last radial edge is pushed
    outward by doubling until the added shell is below tolerance.
    """
    r0, r1 = np.meshgrid(r_breaks[:-1], t_breaks[:-1], indexing="ij")
    rr1, tt1 = np.meshgrid(r_breaks[1:], t_breaks[1:], indexing="ij")
    batch = _RectBatch(r0.ravel(), rr1.ravel(), r1.ravel(), tt1.ravel())

    wk = GK_WEIGHTS
    wg = GAUSS_WEIGHTS

    def evaluate(b: _RectBatch):
        r, t, hr, ht = _tensor_nodes(b)
        vals, errs = func(r, t)
        vals = np.asarray(vals, dtype=float).reshape(len(hr), 15, 15, ncomp)
        area = (hr * ht)[:, None]
        kk = np.einsum("i,j,nijc->nc", wk, wk, vals) * area
        gk_r = np.einsum("i,j,nijc->nc", wg, wk, vals) * area
        gk_t = np.einsum("i,j,nijc->nc", wk, wg, vals) * area
        err_r = np.abs(kk - gk_r)
        err_t = np.abs(kk - gk_t)
        err = err_r + err_t
        if errs is not None:
            errs = np.asarray(errs, dtype=float).reshape(len(hr), 15, 15, ncomp)
            err = err + np.einsum("i,j,nijc->nc", wk, wk, errs) * area
        if not np.all(np.isfinite(kk)):
            raise QuadratureError("non-finite integrand in q integration")
        split_r = err_r.max(axis=1) >= err_t.max(axis=1)
        return kk, err, split_r

    rects = [batch]
    vals, errs, split_r = evaluate(batch)
    store_v = [vals]
    store_e = [errs]
    store_s = [split_r]
    n_rects = len(batch.r0)
    top = r_breaks[-1]

    def flat():
        return (np.concatenate(store_v), np.concatenate(store_e), np.concatenate(store_s),
                _RectBatch(*(np.concatenate([getattr(b, k) for b in rects])
                             for k in ("r0", "r1", "t0", "t1"))))

    while True:
        V, E, S, B = flat()
        total = V.sum(axis=0)
        err_tot = E.sum(axis=0)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(total))
        if np.all(err_tot <= tol):
            if not extend_r or top >= r_limit:
                return total, err_tot, n_rects
            shell = _RectBatch(np.full(len(t_breaks) - 1, top), np.full(len(t_breaks) - 1, 2.0 * top),
                               t_breaks[:-1].copy(), t_breaks[1:].copy())
            sv, se, ss = evaluate(shell)
            n_rects += len(shell.r0)
            rects.append(shell)
            store_v.append(sv)
            store_e.append(se)
            store_s.append(ss)
            top *= 2.0
            if np.all(np.abs(sv.sum(axis=0)) + se.sum(axis=0) <= 0.1 * tol):
                V, E, _, _ = flat()
                return V.sum(axis=0), E.sum(axis=0), n_rects
            continue
        if n_rects > max_rects:
            raise QuadratureError(
                f"q integration exceeded {max_rects} rectangles; error {err_tot} vs tolerance {tol}")
        score = (E / np.where(tol > 0, tol, 1.0)).max(axis=1)
        order = np.argsort(-score)
        csum = np.cumsum(score[order])
        n_split = int(np.searchsorted(csum, 0.5 * csum[-1])) + 1
        chosen = np.zeros(len(score), dtype=bool)
        chosen[order[:n_split]] = True
        keep = ~chosen
        c = chosen
        sr = S[c]
        rm = np.where(sr, 0.5 * (B.r0[c] + B.r1[c]), B.r1[c])
        tm = np.where(sr, B.t1[c], 0.5 * (B.t0[c] + B.t1[c]))
        child_a = _RectBatch(B.r0[c], rm, B.t0[c], tm)
        child_b = _RectBatch(np.where(sr, rm, B.r0[c]), B.r1[c], np.where(sr, B.t0[c], tm), B.t1[c])
        children = _RectBatch(*(np.concatenate([getattr(child_a, k), getattr(child_b, k)])
                                for k in ("r0", "r1", "t0", "t1")))
        cv, ce, cs = evaluate(children)
        n_rects += len(children.r0)
        rects = [_RectBatch(B.r0[keep], B.r1[keep], B.t0[keep], B.t1[keep]), children]
        store_v = [V[keep], cv]
        store_e = [E[keep], ce]
        store_s = [S[keep], cs]


def q_integration_mesh(p_norm: float, region: RegionSpec, r_far: float) -> tuple[Array, Array, bool]:
    lo, hi = region_bounds(region, p_norm)
    return _radial_breaks(p_norm, lo, hi, r_far), ANGLE_BREAKS.copy(), not math.isfinite(hi)


def integrate_q_region(F: Callable[[Array, Array], Array], p, region: RegionSpec = FULL,
                       spec: QuadSpec = QuadSpec(rel_tol=1e-6)) -> QuadResult:
    """2 pi int int F(|q|, mu) |q|^2 d|q| dmu over a ball, a shell or all of R^3.

    F must depend on q only through |q| and mu, the cosine of the angle
    between p and q.
    """
    p_norm = float(np.linalg.norm(np.asarray(p, dtype=float)))
    r_far = spec.q_max_override or max(50.0, 2.0 * p_norm + 50.0)
    r_breaks, t_breaks, unbounded = q_integration_mesh(p_norm, region, r_far)
    if unbounded and spec.q_max_override:
        unbounded = False

    def func(r, t):
        vals = 2.0 * math.pi * r * r * np.asarray(F(r, 1.0 - t), dtype=float)
        return vals[:, None], None

    v, e, n = adaptive_rt(func, r_breaks, t_breaks, 1, spec, extend_r=unbounded)
    return QuadResult(float(v[0]), float(e[0]), n * 225)


def mc_integrate(F: Callable[[Array], Array], sampler, n: int, seed: int) -> tuple[float, float]:
    """Importance-sampled Monte Carlo estimate of int F.

    ``sampler(rng, n)`` must return ``(x, density)`` with x of length n.
    Deterministic for a fixed (seed, n).
    """
    if n < 2:
        raise ValueError("need at least two samples")
    rng = np.random.Generator(np.random.PCG64(seed))
    x, density = sampler(rng, n)
    ratio = np.asarray(F(x), dtype=float) / np.asarray(density, dtype=float)
    return float(ratio.mean()), float(ratio.std(ddof=1) / math.sqrt(n))
