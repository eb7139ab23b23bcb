import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import i0e

from relzeta.checks import j2_by_quadrature, k2tilde_by_quadrature, log_i0_by_quadrature
from relzeta.specfun import (SERIES_BRANCH, j2_closed, k2tilde_closed, kbar_gamma_num, log_i0,
                             log_i0_array)


def test_log_i0_values():
    assert log_i0(0.0) == 0.0
    # ln I0(1) = 0.23591435850717857 (mpmath, 40 digits)
    assert log_i0(1.0) == pytest.approx(0.23591435850717857, rel=1e-15)
    assert log_i0(1.0) == pytest.approx(0.2359143549, abs=1e-8)
    assert log_i0(1.0) == pytest.approx(log_i0_by_quadrature(1.0), rel=1e-13)
    rem = log_i0(100.0) - (100.0 - 0.5 * math.log(200.0 * math.pi))
    assert 0.0 <= rem <= 0.002


@pytest.mark.parametrize("x", [1e-12, 1e-6, 0.3, 5.0, SERIES_BRANCH, 20.000001, 75.0, 1e4, 1e8])
def test_log_i0_against_mpmath(x):
    with mp.workdps(40):
        ref = float(mp.log(mp.besseli(0, x)))
    assert log_i0(x) == pytest.approx(ref, rel=2e-15)


@given(st.floats(0, 700))
def test_log_i0_against_scaled_bessel(x):
    # x + log(i0e(x)) cancels at small x, so the reference is only good to ~1e-15 absolute
    assert log_i0(x) == pytest.approx(x + math.log(i0e(x)), rel=1e-13, abs=1e-15)


def test_log_i0_array_matches_scalar():
    xs = np.concatenate([np.geomspace(1e-10, 1e5, 400), [0.0, SERIES_BRANCH]])
    arr = log_i0_array(xs)
    np.testing.assert_allclose(arr, [log_i0(float(x)) for x in xs], rtol=5e-16, atol=0)


def test_log_i0_rejects_negative():
    with pytest.raises(ValueError):
        log_i0(-1.0)


def test_j2_values():
    assert j2_closed(1.0, 0.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert j2_closed(2.0, 1.0) == pytest.approx(math.exp(-math.sqrt(3)) / math.sqrt(3), rel=1e-15)
    assert j2_closed(2.0, 1.0) == pytest.approx(j2_by_quadrature(2.0, 1.0), rel=1e-10)


@given(st.floats(0.5, 40), st.floats(0, 0.95))
def test_j2_depends_on_sqrt_l2_minus_j2(l, frac):
    j = frac * l
    w = math.sqrt(l * l - j * j)
    assert j2_closed(l, j) == pytest.approx(j2_closed(w, 0.0), rel=1e-13)


def test_k2tilde_values():
    assert k2tilde_closed(2.0, 0.0) == pytest.approx(1.25 * math.exp(-2), rel=1e-14)
    for l in (1.0, 5.0, 10.0):
        exact = math.exp(-l) * (1 / l + 2 / l ** 2 + 2 / l ** 3)
        assert k2tilde_closed(l, 0.0) == pytest.approx(exact, rel=1e-10)
    assert k2tilde_closed(3.0, 2.0) == pytest.approx(k2tilde_by_quadrature(3.0, 2.0), rel=1e-8)


@given(st.floats(1.0, 30), st.floats(0, 0.9))
def test_k2tilde_is_second_l_derivative_of_j2(l, frac):
    j = frac * l
    w = math.sqrt(l * l - j * j)
    h = 1e-3 * min(1.0, w * w / l)  # j2 varies in l on the scale min(1, w^2 / l)
    fd = (j2_closed(l + h, j) - 2 * j2_closed(l, j) + j2_closed(l - h, j)) / h ** 2
    assert k2tilde_closed(l, j) == pytest.approx(fd, rel=1e-5)


def test_kbar_bracket_and_bound():
    v = kbar_gamma_num(1.0, 0.0, 1.0)
    assert math.exp(-math.sqrt(2)) < v < math.exp(-1)
    for l in (1.0, 5.0, 20.0):
        for gamma in (0.5, 1.5):
            j = 0.9 * l
            assert kbar_gamma_num(l, j, gamma) <= 10 * math.exp(-math.sqrt(l * l - j * j))


def test_kbar_monotone_in_gamma():
    # y^(1-gamma) grows with gamma on (0, 1), so the value shrinks as gamma -> 0+
    vals = [kbar_gamma_num(3.0, 1.0, g) for g in (1.5, 1.0, 0.5, 0.1, 0.01)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
