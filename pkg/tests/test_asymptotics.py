import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from kdvtrail import asymptotics as A
from kdvtrail.errors import DomainError, NegativeRadicand
from kdvtrail.numerics import derivative_richardson

EPS_SET = (1e-4, 1e-5, 1e-6)


# -- scattering phases -------------------------------------------------------


def test_rho_at_minus_one(sech2):
    assert abs(A.rho_eval(-1.0, sech2) + math.log(2.0)) < 1e-10


def test_rho_domain(sech2):
    for lam in (0.0, -1.5, 0.2):
        with pytest.raises(DomainError):
            A.rho_eval(lam, sech2)


def test_rho_small_lambda_vanishes(sech2):
    # rho is negative and shrinks towards zero as lam -> 0
    values = [A.rho_eval(-10.0**-p, sech2) for p in (2, 4, 6)]
    assert all(v < 0 for v in values)
    assert abs(values[-1]) < abs(values[1]) < abs(values[0])


def test_tau_limit(sech2):
    assert abs(A.tau_eval(-1e-4, sech2) - math.pi) < 0.05
    with pytest.raises(DomainError):
        A.tau_eval(-1.0, sech2)


# -- phi and hat-phi at the trailing edge ------------------------------------


@pytest.mark.parametrize("t", [0.25, 0.3])
def test_hat_phi_double_zero_at_v(sech2, edges, t):
    e = edges[t]
    p = A.phi_eval(e.v, e.x_plus, t, e, sech2)
    assert abs(p.hat_phi) < 1e-9
    assert abs(p.hat_phi_prime) < 1e-8
    assert A.hat_phi_second(e.v, t, e, sech2) < 0


def test_hat_phi_second_two_routes(sech2, edges):
    e = edges[0.25]
    assert abs(A.hat_phi_second(e.v, 0.25, e, sech2) - A.hat_phi_second_fd(e.v, 0.25, e, sech2)) < 1e-6


@pytest.mark.parametrize("lam", [-0.99, -0.98, -0.97])
def test_phi_prime_against_difference(sech2, edges, lam):
    e = edges[0.25]
    x = e.x_plus + 0.01
    fd = derivative_richardson(lambda l: A.phi_eval(l, x, 0.25, e, sech2).phi, lam, 2e-3)[0]
    assert abs(A.phi_eval(lam, x, 0.25, e, sech2).phi_prime - fd) < 1e-8


@pytest.mark.parametrize("lam", [-0.8, -0.5, -0.2])
def test_hat_phi_prime_against_difference(sech2, edges, lam):
    e = edges[0.25]
    x = e.x_plus - 0.01
    fd = derivative_richardson(lambda l: A.phi_eval(l, x, 0.25, e, sech2).hat_phi, lam, 2e-2)[0]
    assert abs(A.phi_eval(lam, x, 0.25, e, sech2).hat_phi_prime - fd) < 1e-8


def test_phi_branch_guards(sech2, edges):
    e = edges[0.25]
    with pytest.raises(DomainError):
        A.phi_eval(-0.5, e.x_plus, 0.25, e, sech2, branch="phi")
    with pytest.raises(DomainError):
        A.phi_eval(e.u, e.x_plus, 0.25, e, sech2)
    with pytest.raises(DomainError):
        A.phi_eval(-0.5, e.x_plus, 0.25, e, sech2, branch="other")
    assert A.phi_eval(-1.0, e.x_plus, 0.25, e, sech2).phi_prime == math.inf


@pytest.mark.parametrize("t", [0.25, 0.3])
def test_phi_inequalities(sech2, edges, t):
    rep = A.check_phi_inequalities(t, edges[t], sech2, grid_n=200)
    assert rep.passed, rep.margins


# -- zeta and gamma ------------------------------------------------------------


@pytest.mark.parametrize("t", [0.25, 0.3])
def test_gamma_two_routes(sech2, edges, t):
    e = edges[t]
    assert abs(A.gamma_from_zeta(t, e, sech2) - e.gamma) < 1e-7
    closed, fd = A.zeta_prime_v(t, e, sech2)
    assert abs(closed - fd) < 1e-7


def test_zeta_sign_and_domain(sech2, edges):
    e = edges[0.25]
    assert A.zeta_eval(e.v + 0.05, 0.25, e, sech2) > 0
    assert A.zeta_eval(e.v - 0.05, 0.25, e, sech2) < 0
    with pytest.raises(NegativeRadicand):
        A.zeta_eval(e.u - 0.01, 0.25, e, sech2)


# -- elliptic approximation --------------------------------------------------


def test_elliptic_dual_form(sech2, curve25, lead25, edges):
    lo, hi = lead25.x_minus, edges[0.25].x_plus
    xs = np.linspace(lo, hi, 22)[1:-1]
    for x in xs:
        r = A.elliptic_approx(float(x), 0.25, 1e-2, sech2, curve=curve25)
        assert abs(r.u_theta - r.u_dn) < 1e-6
        b1, b2, b3 = r.state.betas
        assert b1 - b2 + b3 - 1e-12 <= r.u_dn <= b1 + b2 - b3 + 1e-12


def test_elliptic_rejects_bad_eps(sech2, curve25):
    with pytest.raises(DomainError):
        A.elliptic_approx(-1.7, 0.25, 0.0, sech2, curve=curve25)


def test_formal_limit_matches_dn_near_trailing_edge(sech2, curve25, edges):
    # for s -> 1 the dn form is a single sech^2 pulse of height 2(v - u) per period
    e = edges[0.25]
    st_ = curve25.state(3)
    r = A.elliptic_from_state(st_, 1e-2, sech2)
    assert abs(r.u_dn - e.u) < 2.0 * (e.v - e.u) + 1e-9
    k = 0
    f = A.formal_trailing(st_.x, 0.25, 1e-2, k, e, st_)
    assert e.u <= f <= e.u + 2.0 * (e.v - e.u)


# -- soliton sum ---------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(y=st.floats(-3.0, 6.0), p=st.sampled_from(EPS_SET))
def test_y_x_round_trip(edges, y, p):
    e = edges[0.25]
    assert abs(A.y_from_x(A.x_from_y(y, p, e), p, e) - y) < 1e-9


@pytest.mark.parametrize("eps", EPS_SET)
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_peak_height_per_term(edges, eps, k):
    e = edges[0.25]
    yk = A.peak_center(k, eps, e)
    X = A.Xk_eval(yk, k, eps, e)
    height = e.u + 2.0 * (e.v - e.u) / math.cosh(X) ** 2
    assert abs(height - (e.u + 2.0 * (e.v - e.u))) < 1e-10


@pytest.mark.parametrize("k", [0, 1, 2])
def test_peak_centers_match_sum_maxima(sech2, edges, k):
    # the analytic center against the numerical maximiser of the full sum
    e = edges[0.25]
    eps = 1e-6
    yk = A.peak_center(k, eps, e)
    res = minimize_scalar(lambda y: -A.soliton_sum(y, 0.25, eps, sech2, e).u_value,
                          bracket=(yk - 0.2, yk, yk + 0.2), tol=1e-12)
    assert abs(res.x - yk) < 1e-3


def test_peak_center_rate(edges):
    e = edges[0.25]
    for k in range(4):
        eps = np.array([1e-4, 1e-5, 1e-6])
        dev = np.array([A.peak_center(k, p, e) - (k + 0.5) for p in eps])
        inv = 1.0 / np.abs(np.log(eps))
        coef = np.polyfit(inv, dev, 1)
        fit = np.polyval(coef, inv)
        assert np.max(np.abs(fit - dev)) < 0.1 * np.max(np.abs(dev))


@pytest.mark.parametrize("eps", EPS_SET)
@pytest.mark.parametrize("k", [0, 1, 2])
def test_sqrt_eps_order_at_integer_y(edges, eps, k):
    e = edges[0.25]
    val = 1.0 / math.cosh(A.Xk_eval(float(k), k, eps, e)) ** 2
    ratio = val / (math.sqrt(eps) * A.sqrt_eps_constant(k, e, -1))
    assert 0.5 < ratio < 2.0


@pytest.mark.parametrize("eps", EPS_SET)
def test_at_most_two_significant_terms(sech2, edges, eps):
    e = edges[0.25]
    floor = eps * math.log(eps) ** 2
    for y in np.linspace(-1.0, 6.0, 71):
        r = A.soliton_sum(float(y), 0.25, eps, sech2, e)
        big = [k for k, X in r.X.items() if 1.0 / math.cosh(X) ** 2 > floor]
        assert len(big) <= 2


@pytest.mark.parametrize("eps", EPS_SET)
def test_left_of_first_pulse_is_background(sech2, edges, eps):
    e = edges[0.25]
    for y in (-0.5, -1.0, -2.0):
        r = A.soliton_sum(y, 0.25, eps, sech2, e)
        assert r.u_value - e.u < 10 * math.sqrt(eps)
        assert r.k == 0


def test_soliton_sum_bookkeeping(sech2, edges):
    e = edges[0.25]
    r = A.soliton_sum(2.3, 0.25, 1e-5, sech2, e)
    assert r.k == 2 and abs(r.Delta_k - 0.3) < 1e-12
    assert r.terms_used == len(r.X) > 0
    with pytest.raises(DomainError):
        A.soliton_sum(1.0, 0.25, 1.5, sech2, e)
