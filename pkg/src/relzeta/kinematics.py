"""Relativistic two-particle kinematics for unit mass, c = 1.

All functions accept either single 3-vectors or stacks of shape (..., 3)
and broadcast over the leading axes.  The metric signature is (-, +, +, +).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])


class DegeneratePairError(ValueError):
    """Raised when an operation needs g > 0 but p = q."""


@dataclass(frozen=True)
class Momentum:
    px: float
    py: float
    pz: float

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz])

    @property
    def p0(self) -> float:
        return float(energy(self.vec))

    def __array__(self, dtype=None, copy=None):
        return self.vec if dtype is None else self.vec.astype(dtype)

    @classmethod
    def along_z(cls, p0: float) -> "Momentum":
        """Momentum of energy p0 pointing along +z."""
        return cls(0.0, 0.0, math.sqrt(max(p0 * p0 - 1.0, 0.0)))


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def energy(p) -> np.ndarray | float:
    p = _vec(p)
    e = np.sqrt(1.0 + np.einsum("...i,...i->...", p, p))
    return float(e) if e.ndim == 0 else e


@dataclass(frozen=True)
class PairInvariants:
    """Lorentz scalars of a momentum pair; arrays when built from stacks."""
    s: np.ndarray | float
    g: np.ndarray | float
    l: np.ndarray | float
    j: np.ndarray | float
    cross_norm: np.ndarray | float
    diff_norm: np.ndarray | float
    sqrt_l2_m_j2: np.ndarray | float
    p0: np.ndarray | float
    q0: np.ndarray | float

    @property
    def g2(self):
        return self.g * self.g


def _scalarize(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def pair_invariants(p, q) -> PairInvariants:
    p, q = _vec(p), _vec(q)
    p0, q0 = energy(p), energy(q)
    pq = np.einsum("...i,...i->...", p, q)
    diff = p - q
    diff2 = np.einsum("...i,...i->...", diff, diff)
    cross = np.linalg.norm(np.cross(p, q), axis=-1)
    # cancellation-free: 2(p0 q0 - p.q - 1) = 2(|p-q|^2 + |pxq|^2) / (p0 q0 + p.q + 1)
    g2 = 2.0 * (diff2 + cross * cross) / (p0 * q0 + pq + 1.0)
    g = np.sqrt(g2)
    s = g2 + 4.0
    l = 0.25 * (p0 + q0)
    with np.errstate(divide="ignore", invalid="ignore"):
        j = np.where(g > 0, cross / (2.0 * np.where(g > 0, g, 1.0)), 0.0)
        w = np.where(g > 0, np.sqrt(diff2) * np.sqrt(s) / (4.0 * np.where(g > 0, g, 1.0)), 0.0)
    return PairInvariants(*(_scalarize(v) for v in (s, g, l, j, cross, np.sqrt(diff2), w, p0, q0)))


def post_collision(p, q, omega) -> tuple[np.ndarray, np.ndarray]:
    """Outgoing momenta (p', q') for centre-of-momentum direction omega."""
    p, q, omega = _vec(p), _vec(q), _vec(omega)
    norm = np.linalg.norm(omega, axis=-1)
    if np.any(np.abs(norm - 1.0) > 1e-12):
        raise ValueError("omega must be a unit vector")
    inv = pair_invariants(p, q)
    s, g = np.asarray(inv.s), np.asarray(inv.g)
    P = p + q
    P0 = np.asarray(inv.p0 + inv.q0)
    rs = np.sqrt(s)
    coef = np.einsum("...i,...i->...", P, omega) / (rs * (P0 + rs))
    p_out = 0.5 * P + 0.5 * g[..., None] * (omega + coef[..., None] * P)
    return p_out, P - p_out


def _gbar2(p, pp) -> np.ndarray:
    diff = p - pp
    cross = np.cross(p, pp)
    num = 2.0 * (np.einsum("...i,...i->...", diff, diff) + np.einsum("...i,...i->...", cross, cross))
    return num / (energy(p) * energy(pp) + np.einsum("...i,...i->...", p, pp) + 1.0)


def scattering_cos(p, q, p_prime):
    """cos of the centre-of-momentum scattering angle, 1 - 2 gbar^2 / g^2."""
    p, q, pp = _vec(p), _vec(q), _vec(p_prime)
    g2 = np.asarray(pair_invariants(p, q).g) ** 2
    if np.any(g2 == 0):
        raise DegeneratePairError("scattering angle undefined for p = q")
    c = 1.0 - 2.0 * _gbar2(p, pp) / g2
    if np.any(np.abs(c) > 1.0 + 1e-12):
        raise ArithmeticError("scattering cosine outside [-1, 1] beyond rounding")
    return _scalarize(np.clip(c, -1.0, 1.0))


def moller_velocity(p, q):
    inv = pair_invariants(p, q)
    return _scalarize(np.asarray(inv.g) * np.sqrt(inv.s) / (np.asarray(inv.p0) * inv.q0))


def juttner(p):
    return _scalarize(np.exp(-np.asarray(energy(p))) / (4.0 * math.pi))


def minkowski(a, b):
    a, b = _vec(a), _vec(b)
    return _scalarize(-a[..., 0] * b[..., 0] + np.einsum("...i,...i->...", a[..., 1:], b[..., 1:]))


def four_vector(p) -> np.ndarray:
    p = _vec(p)
    return np.concatenate([np.asarray(energy(p))[..., None], p], axis=-1)


def mixed_g_residual(p, q, p_prime, q_prime):
    """g^2 - [gtilde^2 - (p + q')^mu (p' + q - p - q')_mu / 2]; zero for valid collisions."""
    P, Q, Pp, Qp = (four_vector(x) for x in (p, q, p_prime, q_prime))
    g2 = np.asarray(pair_invariants(p, q).g) ** 2
    gt2 = np.asarray(pair_invariants(p_prime, q).g) ** 2
    return _scalarize(g2 - (gt2 - 0.5 * minkowski(P + Qp, Pp + Q - P - Qp)))


@dataclass(frozen=True)
class ComFrame:
    """Lorentz matrix taking the pair to its centre-of-momentum frame."""
    matrix: np.ndarray

    def apply(self, four: np.ndarray) -> np.ndarray:
        return self.matrix @ np.asarray(four, dtype=float)


def _eta_dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(-a[0] * b[0] + a[1:] @ b[1:])


def com_frame(p, q) -> ComFrame:
    p, q = _vec(p), _vec(q)
    inv = pair_invariants(p, q)
    g, s = inv.g, inv.s
    if g == 0:
        raise DegeneratePairError("centre-of-momentum frame needs p != q")
    p0, q0 = inv.p0, inv.q0
    rs = math.sqrt(s)
    lam = np.zeros((4, 4))
    lam[0, 0] = (p0 + q0) / rs
    lam[0, 1:] = -(p + q) / rs
    lam[3, 0] = (p0 - q0) / g
    lam[3, 1:] = -(p - q) / g
    cross = np.cross(p, q)
    cn = inv.cross_norm
    if cn >= 1e-10 * p0 * q0:
        pq_mink = -p0 * q0 + float(p @ q)
        lam[1, 0] = 2.0 * cn / (g * rs)
        lam[1, 1:] = 2.0 * (p * (p0 + q0 * pq_mink) + q * (q0 + p0 * pq_mink)) / (g * rs * cn)
        lam[2, 1:] = cross / cn
    else:
        # collinear pair: complete rows 1 and 2 by Gram-Schmidt in the eta metric
        filled = [lam[0], lam[3]]
        signs = [-1.0, 1.0]
        row = 1
        for axis in range(3):
            v = np.zeros(4)
            v[1 + axis] = 1.0
            for u, sgn in zip(filled, signs):
                v = v - sgn * _eta_dot(v, u) * u
            n2 = _eta_dot(v, v)
            if n2 <= 1e-8:
                continue
            v = v / math.sqrt(n2)
            lam[row] = v
            filled.append(v)
            signs.append(1.0)
            row += 1
            if row == 3:
                break
    return ComFrame(lam)


def com_axis(p, q) -> np.ndarray:
    """Unit vector n with scattering angle theta(omega) = angle(omega, n).

    It is the direction of p seen from the centre-of-momentum frame; the
    outgoing p' equals p exactly when omega = n.
    """
    p, q = _vec(p), _vec(q)
    inv = pair_invariants(p, q)
    if np.any(np.asarray(inv.g) == 0):
        raise DegeneratePairError("axis undefined for p = q")
    P = p + q
    P0 = np.asarray(inv.p0 + inv.q0)
    rs = np.sqrt(inv.s)
    coef = np.einsum("...i,...i->...", P, p) / (rs * (P0 + rs)) - np.asarray(inv.p0) / rs
    v = p + coef[..., None] * P
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
