import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from relzeta.kinematics import (ETA, DegeneratePairError, Momentum, mixed_g_residual, com_axis,
                                com_frame, energy, four_vector, juttner, moller_velocity,
                                pair_invariants, post_collision, scattering_cos)

coord = st.floats(-30, 30, allow_nan=False)
vec3 = st.tuples(coord, coord, coord).map(np.array)
unit = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.array(v) / np.linalg.norm(v))


def test_energy_values():
    assert energy([0, 0, 0]) == 1.0
    assert energy([1, 0, 0]) == pytest.approx(math.sqrt(2), rel=1e-14)
    assert energy([3, 4, 0]) == pytest.approx(5.0990195136, rel=1e-10)
    assert Momentum.along_z(5.0).p0 == pytest.approx(5.0, rel=1e-14)


def test_pair_invariants_coincident():
    inv = pair_invariants([0, 0, 0], [0, 0, 0])
    assert (inv.s, inv.g, inv.l, inv.j) == (4.0, 0.0, 0.5, 0.0)
    assert inv.sqrt_l2_m_j2 == 0.0


def test_pair_invariants_orthogonal():
    inv = pair_invariants([1, 0, 0], [0, 1, 0])
    assert inv.s == pytest.approx(6.0, rel=1e-14)
    assert inv.g == pytest.approx(math.sqrt(2), rel=1e-14)
    assert inv.cross_norm == pytest.approx(1.0)
    assert inv.l == pytest.approx(math.sqrt(2) / 2, rel=1e-14)
    assert inv.j == pytest.approx(1 / (2 * math.sqrt(2)), rel=1e-14)
    assert inv.l ** 2 - inv.j ** 2 == pytest.approx(0.375, rel=1e-13)
    assert inv.sqrt_l2_m_j2 ** 2 == pytest.approx(0.375, rel=1e-13)


def test_pair_invariants_head_on():
    inv = pair_invariants([1, 0, 0], [-1, 0, 0])
    assert inv.s == pytest.approx(8.0, rel=1e-14)
    assert inv.g == pytest.approx(2.0, rel=1e-14)
    assert inv.l == pytest.approx(math.sqrt(2) / 2, rel=1e-14)
    assert inv.j == 0.0


@given(vec3, vec3)
def test_pair_inequalities(p, q):
    inv = pair_invariants(p, q)
    p0q0 = inv.p0 * inv.q0
    assert inv.s == pytest.approx(inv.g2 + 4.0, rel=1e-12)
    assert inv.g <= inv.diff_norm * (1 + 1e-12) + 1e-14
    assert math.sqrt(inv.diff_norm ** 2 + inv.cross_norm ** 2) / math.sqrt(p0q0) <= inv.g * (1 + 1e-12) + 1e-14
    assert abs(inv.p0 - inv.q0) <= inv.diff_norm * (1 + 1e-12) + 1e-14
    assert inv.s <= 4 * p0q0 * (1 + 1e-12)
    assert inv.j <= inv.l * (1 + 1e-12)
    assert inv.l <= p0q0 / 2 * (1 + 1e-12)
    if inv.g >= 1e-6:
        assert inv.sqrt_l2_m_j2 ** 2 == pytest.approx(inv.l ** 2 - inv.j ** 2, rel=1e-10)
        assert inv.sqrt_l2_m_j2 == pytest.approx(inv.diff_norm * math.sqrt(inv.s) / (4 * inv.g), rel=1e-10)


def test_post_collision_fixed_point_and_head_on():
    pp, qp = post_collision([0, 0, 0], [0, 0, 0], [0, 0, 1])
    assert np.allclose(pp, 0) and np.allclose(qp, 0)
    pp, qp = post_collision([1, 0, 0], [-1, 0, 0], [0, 0, 1])
    assert np.allclose(pp, [0, 0, 1], atol=1e-14)
    assert np.allclose(qp, [0, 0, -1], atol=1e-14)


@given(vec3, vec3, unit)
def test_post_collision_conserves_four_momentum(p, q, w):
    if pair_invariants(p, q).g == 0:
        return
    pp, qp = post_collision(p, q, w)
    scale = energy(p) + energy(q)
    assert np.allclose(pp + qp, p + q, rtol=0, atol=1e-12 * scale)
    assert energy(pp) + energy(qp) == pytest.approx(scale, rel=1e-12)
    c = scattering_cos(p, q, pp)
    assert -1 - 1e-12 <= c <= 1 + 1e-12
    assert abs(mixed_g_residual(p, q, pp, qp)) <= 1e-10 * pair_invariants(p, q).s


def test_scattering_cos_values():
    p, q = np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])
    assert scattering_cos(p, q, p) == pytest.approx(1.0, abs=1e-14)
    assert scattering_cos(p, q, np.array([0, 0, 1.0])) == pytest.approx(0.0, abs=1e-14)


def test_com_axis_gives_forward_scattering(rng):
    # omega along the axis must reproduce p' = p (theta = 0)
    for _ in range(50):
        p, q = rng.normal(size=3) * 5, rng.normal(size=3) * 5
        pp, _ = post_collision(p, q, com_axis(p, q))
        assert np.allclose(pp, p, atol=1e-9 * energy(p))


def test_moller_velocity():
    assert moller_velocity([1, 2, 3], [1, 2, 3]) == 0.0
    assert moller_velocity([1, 0, 0], [0, 1, 0]) == pytest.approx(math.sqrt(3), rel=1e-12)


@given(vec3, vec3)
def test_moller_velocity_velocity_form(p, q):
    # the velocity-difference form equals g sqrt(s) / (2 p0 q0): half the convention used here
    vp, vq = p / energy(p), q / energy(q)
    alt2 = np.sum((vp - vq) ** 2) - np.sum(np.cross(vp, vq) ** 2)
    assert moller_velocity(p, q) == pytest.approx(2.0 * math.sqrt(max(alt2, 0.0)), rel=1e-8, abs=1e-10)


def test_com_frame_head_on():
    lam = com_frame([1, 0, 0], [-1, 0, 0]).matrix
    assert np.allclose(lam[0], [1, 0, 0, 0], atol=1e-14)
    assert np.allclose(lam.T @ ETA @ lam, ETA, atol=1e-12)


@given(vec3, vec3)
def test_com_frame_properties(p, q):
    if pair_invariants(p, q).g < 1e-3:
        return
    inv = pair_invariants(p, q)
    lam = com_frame(p, q)
    assert np.allclose(lam.matrix.T @ ETA @ lam.matrix, ETA, atol=1e-10 * inv.p0 * inv.q0)
    sum4 = lam.apply(four_vector(p) + four_vector(q))
    diff4 = -lam.apply(four_vector(p) - four_vector(q))
    assert np.allclose(sum4, [math.sqrt(inv.s), 0, 0, 0], atol=1e-10 * inv.p0 * inv.q0)
    assert np.allclose(diff4, [0, 0, 0, inv.g], atol=1e-10 * inv.p0 * inv.q0)


def test_com_frame_rejects_equal_momenta():
    with pytest.raises(DegeneratePairError):
        com_frame([1, 2, 3], [1, 2, 3])


def test_juttner():
    assert juttner([0, 0, 0]) == pytest.approx(math.exp(-1) / (4 * math.pi), rel=1e-14)
    vals = [juttner([0, 0, r]) for r in (0, 1, 5, 20)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@given(vec3, vec3)
def test_juttner_ratio(p, q):
    assert juttner(p) / juttner(q) == pytest.approx(math.exp(energy(q) - energy(p)), rel=1e-12)


def test_mixed_g_residual_trivial_cases():
    p = np.array([0.3, -1.2, 2.0])
    pp, qp = post_collision(p, p, np.array([0, 1.0, 0]))
    assert mixed_g_residual(p, p, pp, qp) == 0.0
    p, q = np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])
    pp, qp = post_collision(p, q, np.array([0, 0, 1.0]))
    assert abs(mixed_g_residual(p, q, pp, qp)) <= 1e-12
