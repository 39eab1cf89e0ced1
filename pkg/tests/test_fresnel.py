import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from casimir_scatter.fresnel import fresnel, fresnel_x


def naive(eps, xi, kappa):
    km = math.sqrt(kappa**2 + (eps - 1) * xi**2)
    return (kappa - km) / (kappa + km), (eps * kappa - km) / (eps * kappa + km)


@given(st.floats(1.0, 1e4), st.floats(1e-4, 10.0), st.floats(1.0, 50.0))
def test_matches_textbook_form(eps, xi, x):
    r_te, r_tm = fresnel(eps, xi, x * xi)
    te, tm = naive(eps, xi, x * xi)
    assert r_te == pytest.approx(te, rel=1e-9, abs=1e-15)
    assert r_tm == pytest.approx(tm, rel=1e-9, abs=1e-15)


@given(st.floats(1.0001, 1e6), st.floats(1.0, 1e3))
def test_sign_invariants(eps, x):
    r_te, r_tm = fresnel_x(eps, x)
    assert -1.0 <= r_te < 0.0
    assert 0.0 < r_tm <= 1.0


def test_perfect_mirror_limit():
    r = fresnel_x(np.inf, np.array([1.0, 3.0]))
    np.testing.assert_array_equal(r.r_te, -1.0)
    np.testing.assert_array_equal(r.r_tm, 1.0)


def test_vacuum_gives_zero():
    r = fresnel_x(1.0, np.array([1.0, 2.0, 100.0]))
    np.testing.assert_array_equal(r.r_te, 0.0)
    np.testing.assert_array_equal(r.r_tm, 0.0)


def test_no_cancellation_at_small_contrast():
    # eps - 1 = 1e-12: r_te ~ -(eps-1)/(4x^2)
    r_te, r_tm = fresnel_x(1.0 + 1e-12, 2.0)
    assert r_te == pytest.approx(-1e-12 / 16.0, rel=1e-6)
    assert r_tm == pytest.approx(1e-12 * (2 * 4 - 1) / 16.0, rel=1e-6)


@pytest.mark.parametrize("args", [(0.5, 1.0, 1.0), (2.0, 0.0, 1.0), (2.0, 1.0, 0.5)])
def test_preconditions(args):
    with pytest.raises(ValueError):
        fresnel(*args)
