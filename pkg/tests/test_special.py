import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sps

from kdvtrail import special

mpmath.mp.dps = 40
from kdvtrail.errors import ConvergenceFloor, DomainError

moduli = st.floats(min_value=0.0, max_value=0.999, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(s=moduli)
def test_KE_against_scipy(s):
    pair = special.elliptic_KE(s)
    assert abs(pair.K - sps.ellipk(s * s)) < 1e-13 * pair.K
    assert abs(pair.E - sps.ellipe(s * s)) < 1e-13


def test_K_at_zero_and_near_one():
    assert special.elliptic_KE(0.0).K == pytest.approx(math.pi / 2, abs=1e-15)
    s = 1 - 1e-12
    sc = math.sqrt((1 - s) * (1 + s))
    ref = float(mpmath.ellipk(mpmath.mpf(s) ** 2))
    assert abs(special.elliptic_KE(s, sc).K - ref) < 1e-10 * ref


@settings(max_examples=60, deadline=None)
@given(s=st.floats(0.01, 0.99))
def test_legendre_relation(s):
    sc = math.sqrt(1 - s * s)
    a, b = special.elliptic_KE(s, sc), special.elliptic_KE(sc, s)
    assert abs(a.E * b.K + b.E * a.K - a.K * b.K - math.pi / 2) < 1e-12


@pytest.mark.parametrize("s", [1e-8, 1e-4, 0.1, 0.5])
def test_deficit_without_cancellation(s):
    K, d = special.elliptic_deficit(s)
    m = mpmath.mpf(s) ** 2
    ref = 1 - mpmath.ellipe(m) / mpmath.ellipk(m)
    assert abs(d - float(ref)) < 1e-14 * float(ref)


def test_modulus_domain():
    with pytest.raises(DomainError):
        special.elliptic_KE(1.0)
    with pytest.raises(DomainError):
        special.elliptic_deficit(-0.1)
    with pytest.raises(DomainError):
        special.jacobi_dn(0.3, 1.5)


@settings(max_examples=60, deadline=None)
@given(s=st.floats(0.0, 0.99), w=st.floats(-20, 20))
def test_dn_against_scipy(s, w):
    dn_ref = sps.ellipj(w, s * s)[2]
    assert abs(special.jacobi_dn(w, s) - dn_ref) < 1e-12


@pytest.mark.parametrize("s", [0.999999, 1 - 1e-10])
def test_dn_near_unit_modulus_against_mpmath(s):
    sc = math.sqrt((1 - s) * (1 + s))
    K = special.elliptic_KE(s, sc).K
    for w in (0.3, 0.5 * K, K, 1.7 * K):
        ref = float(mpmath.ellipfun("dn", w, m=mpmath.mpf(s) ** 2))
        assert abs(special.jacobi_dn(w, s, sc) - ref) < 1e-13


@settings(max_examples=40, deadline=None)
@given(s=st.floats(0.05, 0.999), w=st.floats(-5, 5))
def test_dn_period_2K(s, w):
    K = special.elliptic_KE(s).K
    assert abs(special.jacobi_dn(w + 2 * K, s) - special.jacobi_dn(w, s)) < 1e-11


def test_dn_special_values():
    s = 0.8
    sc = math.sqrt(1 - s * s)
    K = special.elliptic_KE(s).K
    assert special.jacobi_dn(0.0, s) == pytest.approx(1.0, abs=1e-15)
    assert special.jacobi_dn(K, s) == pytest.approx(sc, abs=1e-15)
    w = np.linspace(-2, 2, 9)
    assert np.allclose(special.jacobi_dn(w, 1.0), 1 / np.cosh(w), atol=1e-15)
    assert np.all(special.jacobi_dn(w, 0.0) == 1.0)
    assert isinstance(special.jacobi_dn(0.4, s), float)


@settings(max_examples=40, deadline=None)
@given(z=st.floats(-2, 2), T=st.floats(0.06, 3.0))
def test_theta_periodic_and_even(z, T):
    a = special.theta3(z, T)[0]
    assert abs(special.theta3(z + 1.0, T)[0] - a) < 1e-14 * max(1.0, abs(a))
    assert abs(special.theta3(-z, T)[0] - a) < 1e-14 * max(1.0, abs(a))


@pytest.mark.parametrize("T", [0.1, 0.5, 2.0])
def test_theta_against_mpmath(T):
    q = mpmath.exp(-mpmath.pi * T)
    for z in (0.0, 0.13, 0.5):
        th, d1, d2 = special.theta3(z, complex(0, T))
        assert abs(th - float(mpmath.jtheta(3, mpmath.pi * z, q))) < 1e-13 * abs(th)
        assert abs(d1 - float(mpmath.pi * mpmath.jtheta(3, mpmath.pi * z, q, 1))) < 1e-11 * max(1, abs(th))
        assert abs(d2 - float(mpmath.pi**2 * mpmath.jtheta(3, mpmath.pi * z, q, 2))) < 1e-10 * max(1, abs(th))


def test_theta_floor_and_real_part():
    with pytest.raises(ConvergenceFloor):
        special.theta3(0.1, 0.01)
    with pytest.raises(DomainError):
        special.theta3(0.1, complex(0.2, 1.0))


def test_hermite_norm_values():
    assert special.hermite_norm(0)[0] == pytest.approx(math.pi ** -0.25, rel=1e-15)
    for k in range(20):
        r = special.hermite_norm(k + 1)[0] / special.hermite_norm(k)[0]
        assert abs(r - math.sqrt(2.0 / (k + 1))) < 1e-14
    h, lh = special.hermite_norm(400)
    assert math.isfinite(lh) and lh < -500  # h itself underflows; the log does not
    for bad in (-1, 501, 1.5):
        with pytest.raises(DomainError):
            special.hermite_norm(bad)


def test_hermite_norm_orthonormal_leading_coefficient():
    # h_k is the leading coefficient of the k-th orthonormal Hermite polynomial
    x, w = np.polynomial.hermite.hermgauss(40)
    for k in range(6):
        c = np.zeros(k + 1)
        c[k] = 1.0
        Hk = np.polynomial.hermite.hermval(x, c)  # leading term 2^k x^k
        norm = math.sqrt(float(w @ (Hk * Hk)))
        assert abs(2.0**k / norm - special.hermite_norm(k)[0]) < 1e-13
