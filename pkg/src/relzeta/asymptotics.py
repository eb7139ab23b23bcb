"""Momentum scans, power-law fits and the large-|p| bound checks."""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from .kernels import KernelConfig
from .multiplier import OUTER_SPEC, MultiplierBreakdown, breakdown, default_m
from .quadrature import QuadSpec

FLOOR = 1e-300
FIT_MIN_P0 = 10.0
EPSILON = 0.2        # the arbitrary epsilon of the zeta_K bound, pinned
SLOPE_TOL = 0.05
BOUND_TOL = 0.1


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    std_err: float
    r2: float
    n: int

    def prefactor(self) -> float:
        return math.exp(self.intercept)


def _ols(x, y) -> ExponentFit:
    res = linregress(x, y)
    r2 = float(res.rvalue ** 2) if np.isfinite(res.rvalue) else 0.0
    return ExponentFit(float(res.slope), float(res.intercept), float(res.stderr), min(r2, 1.0), len(x))


def fit_exponent(samples) -> ExponentFit:
    """OLS of log|value| on log p0; samples below the floor are dropped."""
    pts = [(float(p0), abs(float(v))) for p0, v in samples]
    pts = [(p0, v) for p0, v in pts if v > FLOOR and p0 > 0]
    if len(pts) < 3:
        raise InsufficientDataError("need at least three samples with non-negligible magnitude")
    x = np.log([p for p, _ in pts])
    y = np.log([v for _, v in pts])
    if np.ptp(y) == 0.0:
        return ExponentFit(0.0, float(y[0]), 0.0, 1.0, len(pts))
    return _ols(x, y)


def fit_stretched(samples, m: float) -> ExponentFit:
    """OLS of log|value| on p0^(1/m), the natural variable of exp(-c p0^(1/m))."""
    pts = [(float(p0), abs(float(v))) for p0, v in samples if abs(float(v)) > FLOOR]
    if len(pts) < 3:
        raise InsufficientDataError("need at least three samples with non-negligible magnitude")
    x = np.array([p ** (1.0 / m) for p, _ in pts])
    y = np.log([v for _, v in pts])
    return _ols(x, y)


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanFailure:
    p0: float
    message: str


def momentum_for(p0: float, direction) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if not norm > 0:
        raise ValueError("direction must be non-zero")
    return math.sqrt(max(p0 * p0 - 1.0, 0.0)) * d / norm


def _one(args):
    p0, direction, cfg, m, spec = args
    try:
        # report the requested p0 rather than sqrt(1 + |p|^2) after rounding
        return dataclasses.replace(breakdown(momentum_for(p0, direction), cfg, m, spec), p0=p0)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        return ScanFailure(p0, f"{type(exc).__name__}: {exc}")


def scan(p0_grid, direction, cfg: KernelConfig, m: float | None = None,
         spec: QuadSpec = OUTER_SPEC, workers: int = 1):
    """Breakdown at every grid point, in grid order; failures are returned, not raised."""
    grid = [float(x) for x in p0_grid]
    if not grid:
        return []
    if any(x < 1.0 for x in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("p0 grid must be strictly increasing and >= 1")
    jobs = [(p0, tuple(direction), cfg, m, spec) for p0 in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one, jobs))
    return [_one(j) for j in jobs]


def log_grid(lo: float, hi: float, n: int) -> list[float]:
    if n < 1 or lo <= 0 or hi < lo:
        raise ValueError("log grid needs 0 < lo <= hi and n >= 1")
    return [float(x) for x in np.geomspace(lo, hi, n)]


# ---------------------------------------------------------------------------
# bound checks
# ---------------------------------------------------------------------------

def target_slope(cfg: KernelConfig) -> float:
    return 0.5 * (cfg.rho + cfg.gamma)


@dataclass
class BoundsReport:
    kernel: str
    m: float
    fits: dict[str, ExponentFit]
    stretched: ExponentFit | None
    zeta_positive: bool
    checks: dict[str, bool] = field(default_factory=dict)
    limits: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def lines(self) -> list[str]:
        out = []
        for name, ok in self.checks.items():
            fit = self.fits.get(name)
            detail = f"slope={fit.slope:.4f} limit={self.limits.get(name, float('nan')):.4f}" if fit else ""
            if name == "tildeZeta1" and self.stretched is not None:
                detail = f"slope={self.stretched.slope:.4g} r2={self.stretched.r2:.4f}"
            out.append(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
        return out


def check_bounds(breakdowns, cfg: KernelConfig, m: float | None = None) -> BoundsReport:
    pts = [b for b in breakdowns if isinstance(b, MultiplierBreakdown)]
    if len(pts) < 8:
        raise InsufficientDataError("bound checks need at least 8 grid points")
    p0s = np.array([b.p0 for b in pts])
    if math.log10(p0s.max() / p0s.min()) < 1.5:
        raise InsufficientDataError("grid must span at least 1.5 decades of p0")
    m = float(m if m is not None else pts[0].m)
    fit_pts = [b for b in pts if b.p0 >= FIT_MIN_P0]
    rho, lead = cfg.rho, target_slope(cfg)

    def fit(attr):
        return fit_exponent([(b.p0, getattr(b, attr).value) for b in fit_pts])

    fits = {"zeta": fit("zeta"), "zeta0": fit("zeta0_full"), "zetaL": fit("zetaL_full"),
            "tildeZetaLm": fit("tilde_zetaL_m"), "zetaK": fit("zeta_k")}
    limits = {"zeta": lead, "zeta0": lead + BOUND_TOL, "zetaL": 0.5 * rho + BOUND_TOL,
              "tildeZetaLm": 0.5 * rho + EPSILON + BOUND_TOL, "zetaK": 0.5 * rho + EPSILON}
    checks = {
        "zeta": abs(fits["zeta"].slope - lead) <= SLOPE_TOL,
        "zeta0": fits["zeta0"].slope <= limits["zeta0"],
        "zetaL": fits["zetaL"].slope <= limits["zetaL"],
        "tildeZetaLm": fits["tildeZetaLm"].slope <= limits["tildeZetaLm"],
        "zetaK": fits["zetaK"].slope <= limits["zetaK"],
    }
    stretched = fit_stretched([(b.p0, b.tilde_zeta1.value) for b in fit_pts], m)
    checks["tildeZeta1"] = stretched.slope < 0 and stretched.r2 >= 0.9
    positive = all(b.zeta.value > 0 for b in pts)
    checks["zetaPositive"] = positive
    return BoundsReport(cfg.describe(), m, fits, stretched, positive, checks, limits)


__all__ = [
    "BoundsReport", "ExponentFit", "InsufficientDataError", "ScanFailure", "check_bounds",
    "default_m", "fit_exponent", "fit_stretched", "log_grid", "momentum_for", "scan", "target_slope",
]
