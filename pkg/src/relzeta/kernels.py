"""Collision kernel sigma(g, theta) = Phi(g) sigma0(theta) and its boosted arguments."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .kinematics import DegeneratePairError, PairInvariants


@dataclass(frozen=True)
class KernelConfig:
    """Product kernel with a non-integrable angular part.

    ``interaction`` is ``"hard"`` (Phi = c_phi g^a), ``"soft"``
    (Phi = c_phi g^-b) or ``"demo"`` (hard speed part with the angular part
    capped at ``sigma0_bound``).  ``delta > 0`` removes grazing angles with
    sin^2(theta/2) < delta.
    """
    gamma: float
    interaction: str = "hard"
    a: float = 0.0
    b: float = 0.0
    c_phi: float = 1.0
    delta: float = 0.0
    sigma0_bound: float | None = None

    def __post_init__(self):
        g = self.gamma
        if not 0.0 < g < 2.0:
            raise ValueError(f"gamma must lie in (0, 2), got {g}")
        if self.interaction == "hard":
            if not -g <= self.a < 2.0:
                raise ValueError(f"hard interactions need a in [-gamma, 2), got {self.a}")
        elif self.interaction == "soft":
            if not g < self.b < 2.0:
                raise ValueError(f"soft interactions need b in (gamma, 2), got {self.b}")
        elif self.interaction == "demo":
            if not 0.0 <= self.a < 2.0:
                raise ValueError(f"demo kernels need a in [0, 2), got {self.a}")
            if self.sigma0_bound is None or not self.sigma0_bound > 0:
                raise ValueError("demo kernels need sigma0_bound > 0")
        else:
            raise ValueError(f"unknown interaction {self.interaction!r}")
        if self.c_phi < 0:
            raise ValueError("c_phi must be non-negative")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")

    @property
    def rho(self) -> float:
        return -self.b if self.interaction == "soft" else self.a

    @property
    def bounded(self) -> bool:
        return self.interaction == "demo"

    @property
    def cutoff(self) -> bool:
        """True when the angular part is integrable (cut off or capped)."""
        return self.delta > 0 or self.bounded

    def with_(self, **changes) -> "KernelConfig":
        return replace(self, **changes)

    @classmethod
    def parse(cls, text: str) -> "KernelConfig":
        """Parse ``hard:a=1,gamma=0.5``, ``soft:b=1.5,gamma=1.2`` or ``demo:a=0,bound=1``."""
        head, _, tail = text.strip().partition(":")
        kind = head.strip().lower()
        values: dict[str, float] = {}
        for item in filter(None, (t.strip() for t in tail.split(","))):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"malformed kernel field {item!r}")
            values[key.strip().lower()] = float(val)
        aliases = {"cphi": "c_phi", "c_phi": "c_phi", "bound": "sigma0_bound", "delta": "delta",
                   "gamma": "gamma", "a": "a", "b": "b"}
        unknown = set(values) - set(aliases)
        if unknown:
            raise ValueError(f"unknown kernel fields {sorted(unknown)}")
        kwargs = {aliases[k]: v for k, v in values.items()}
        if kind == "demo":
            # the capped angular part is integrable for any exponent; 1 is a neutral default
            kwargs.setdefault("gamma", 1.0)
        if "gamma" not in kwargs:
            raise ValueError("kernel spec needs gamma=")
        return cls(interaction=kind, **kwargs)

    def describe(self) -> str:
        if self.interaction == "soft":
            parts = [f"soft:b={self.b:g}", f"gamma={self.gamma:g}"]
        else:
            parts = [f"{self.interaction}:a={self.a:g}", f"gamma={self.gamma:g}"]
        if self.bounded:
            parts.append(f"bound={self.sigma0_bound:g}")
        if self.c_phi != 1.0:
            parts.append(f"cphi={self.c_phi:g}")
        if self.delta:
            parts.append(f"delta={self.delta:g}")
        return ",".join(parts)


def phi(g, cfg: KernelConfig):
    g = np.asarray(g, dtype=float)
    if cfg.interaction == "soft":
        if np.any(g <= 0):
            raise ZeroDivisionError("soft speed kernel is singular at g = 0")
        out = cfg.c_phi * g ** (-cfg.b)
    else:
        out = cfg.c_phi * g ** cfg.a
    return float(out) if out.ndim == 0 else out


def sigma0(sin2half, cfg: KernelConfig):
    """Angular kernel as a function of u = sin^2(theta/2) in (0, 1]."""
    u = np.asarray(sin2half, dtype=float)
    if np.any(~((u > 0) & (u <= 1.0))):
        raise ValueError("sin^2(theta/2) must lie in (0, 1]")
    out = u ** (-1.0 - 0.5 * cfg.gamma)
    if cfg.bounded:
        out = np.minimum(out, cfg.sigma0_bound)
    if cfg.delta > 0:
        out = np.where(u < cfg.delta, 0.0, out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LambdaVars:
    g_lambda2: np.ndarray | float
    s_lambda: np.ndarray | float
    sin2half_lambda: np.ndarray | float
    cos_lambda: np.ndarray | float
    k: np.ndarray | float  # g_lambda^2 - g^2


def _pack(g2, k) -> LambdaVars:
    gl2 = g2 + k
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(gl2 > 0, k / np.where(gl2 > 0, gl2, 1.0), 0.0)
        c = np.where(gl2 > 0, 2.0 * g2 / np.where(gl2 > 0, gl2, 1.0) - 1.0, 1.0)
    vals = [gl2, gl2 + 4.0, u, c, k]
    vals = [float(v) if np.ndim(v) == 0 else v for v in vals]
    return LambdaVars(*vals)


def lambda_vars(pair: PairInvariants, y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("y must be non-negative")
    # s (sqrt(y^2+1) - 1) / 2 without cancellation
    k = pair.s * y * y / (2.0 * (np.sqrt(y * y + 1.0) + 1.0))
    return _pack(pair.g2, k)


def k_variable_vars(pair: PairInvariants, k):
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("k must be non-negative")
    return _pack(pair.g2, k)


def log_kernel_ratio(g2, s, k, rho):
    """log of s Phi(g) g^4 / (s_L Phi(g_L) g_L^4) for g_L^2 = g^2 + k."""
    return -np.log1p(k / s) - (2.0 + 0.5 * rho) * np.log1p(k / g2)


def kernel_ratio(pair: PairInvariants, lv: LambdaVars, cfg: KernelConfig):
    if np.any(np.asarray(pair.g) == 0):
        raise DegeneratePairError("kernel ratio needs g > 0")
    out = np.exp(log_kernel_ratio(pair.g2, pair.s, lv.k, cfg.rho))
    return float(out) if np.ndim(out) == 0 else out


def boosted_kernel(pair: PairInvariants, lv: LambdaVars, cfg: KernelConfig):
    """s_L Phi(g_L) sigma0(theta_L); zero where the angular cutoff removes it."""
    u = np.asarray(lv.sin2half_lambda)
    gl = np.sqrt(lv.g_lambda2)
    with np.errstate(divide="ignore"):
        ang = np.where(u > 0, sigma0(np.where(u > 0, np.minimum(u, 1.0), 1.0), cfg), math.inf)
    out = lv.s_lambda * phi(gl, cfg) * ang
    return float(out) if np.ndim(out) == 0 else out
