import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from kdvtrail import modulation as M
from kdvtrail.errors import DegenerateGap, DomainError, HumpFloorReached, NotPastCatastrophe, OutsideCusp

# values frozen from the nested-bisection oracle (see golden/trailing_edge.json)
EDGE_025 = (-1.646543270953664, -0.9563795248694396, -0.3788023352887068)
EDGE_030 = (-1.8068820941404553, -0.9999514272940492, -0.2538578400056)


def ordered_triples():
    return st.tuples(st.floats(0.02, 0.96), st.floats(0.02, 0.96), st.floats(0.02, 0.96)).map(
        lambda p: tuple(-v for v in sorted(p))).filter(lambda b: b[0] - b[1] > 1e-3 and b[1] - b[2] > 1e-3)


def q_oracle(b1, b2, b3, model):
    # mu = 1 - 2 w^2 and nu = cos(phi) remove both endpoint singularities
    def f(phi, w):
        mu = 1.0 - 2.0 * w * w
        M_, N_ = 0.5 * (1 + mu), 0.5 * (1 + math.cos(phi))
        return float(model.f_L(M_ * (N_ * b1 + (1 - N_) * b2) + (1 - M_) * b3))

    val, _ = integrate.dblquad(f, 0.0, 1.0, 0.0, math.pi, epsabs=1e-13, epsrel=1e-12)
    return val / math.pi


# -- Hopf ------------------------------------------------------------------


def test_hopf_at_time_zero(sech2):
    r = M.hopf_solve(-0.5, 0.0, sech2)
    assert r.u == pytest.approx(-1 / math.cosh(0.5) ** 2) and not r.multivalued


def test_hopf_single_valued_before_breaking(sech2, cp):
    for x in np.linspace(-4, 2, 13):
        r = M.hopf_solve(float(x), 0.9 * cp.t_c, sech2)
        assert not r.multivalued
        assert abs(r.feet[0] + 6 * r.u * 0.9 * cp.t_c - x) < 1e-12


def test_hopf_three_branches_inside_cusp(sech2, edges):
    e = edges[0.25]
    r = M.hopf_solve(-1.65, 0.25, sech2)
    assert len(r.values) == 3 and r.multivalued
    for u, xi in zip(r.values, r.feet):
        assert abs(xi + 6 * u * 0.25 + 1.65) < 1e-12
    # the lowest branch stays below the trailing-edge value u
    assert r.values[0] < e.u + 0.01


# -- q -----------------------------------------------------------------------


@pytest.mark.parametrize("b", np.linspace(-0.95, -0.05, 10))
def test_q_diagonal_is_f_L(sech2, b):
    assert abs(M.q_eval(b, b, b, sech2) - sech2.f_L(b)) < 1e-9


@settings(max_examples=10, deadline=None)
@given(b=ordered_triples())
def test_q_symmetric_in_first_two(sech2, b):
    b1, b2, b3 = b
    assert abs(M.q_eval(b1, b2, b3, sech2) - M.q_eval(b2, b1, b3, sech2)) < 1e-11


@pytest.mark.parametrize("b", [(-0.2, -0.5, -0.8), (-0.3789, -0.3791, -0.9563), (-0.1, -0.12, -0.6)])
def test_q_against_adaptive_oracle(sech2, b):
    assert abs(M.q_eval(*b, sech2) - q_oracle(*b, sech2)) < 1e-9


@settings(max_examples=8, deadline=None)
@given(b=ordered_triples())
def test_q_gradient_two_routes(sech2, b):
    _, g = M.q_gradient(*b, sech2)
    gr = M.q_gradient_richardson(*b, sech2)
    assert np.allclose(g, gr, rtol=1e-6, atol=1e-7)


def test_q_domain(sech2):
    with pytest.raises(DomainError):
        M.q_eval(0.1, -0.2, -0.3, sech2)


# -- Whitham velocities ------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(b=ordered_triples())
def test_velocities_ordered(sech2, b):
    v1, v2, v3, *_ = M.whitham_velocities(*b, sech2)
    assert v1 > v2 > v3


def test_velocities_two_derivative_routes(sech2):
    a = M.whitham_velocities(-0.2, -0.5, -0.8, sech2)
    r = M.whitham_velocities(-0.2, -0.5, -0.8, sech2, dq="richardson")
    assert np.allclose(a, r, atol=1e-7)
    with pytest.raises(DomainError):
        M.whitham_velocities(-0.2, -0.5, -0.8, sech2, dq="bogus")


def test_velocity_limits():
    # b2 -> b3: v2 = v3 -> 12 b3 - ... ; check that the gap guard fires first
    with pytest.raises(DegenerateGap):
        M._kinematics(-0.2, -0.5, -0.5)


def test_velocities_near_trailing_limit(sech2):
    # as b1 -> b2 the first two velocities merge at 2(b1 + b2 + b3)
    b1, b3 = -0.3, -0.9
    v1, v2, *_ = M.whitham_velocities(b1, b1 - 1e-9, b3, sech2)
    assert abs(v1 - v2) < 1e-6
    assert abs(v1 - 2 * (2 * b1 + b3)) < 1e-6


# -- trailing edge -----------------------------------------------------------


@pytest.mark.parametrize("t,ref", [(0.25, EDGE_025), (0.3, EDGE_030)])
def test_trailing_edge_frozen_values(edges, t, ref):
    e = edges[t]
    assert abs(e.x_plus - ref[0]) < 1e-8 and abs(e.u - ref[1]) < 1e-8 and abs(e.v - ref[2]) < 1e-8
    assert max(abs(r) for r in e.residuals) < 1e-10
    assert e.dtheta_dv < 0
    assert e.gamma == pytest.approx(4 * (e.v - e.u) ** 1.25 * math.sqrt(-e.dtheta_dv), rel=1e-14)


def test_trailing_residuals_in_xi_form(sech2, edges):
    # the xi-form residuals agree with the foot form at the computed edge
    e = edges[0.25]
    e1, e2 = M.trailing_residuals(e.u, e.v, 0.25, sech2)
    assert abs(e1) < 1e-10 and abs(e2) < 1e-10
    assert abs(6 * 0.25 + M.theta_vu(e.v, e.u, sech2)) < 1e-8


@pytest.mark.parametrize("t", [0.25, 0.3])
def test_theta_has_two_zeros(sech2, edges, t):
    assert M.theta_zero_count(t, edges[t], sech2) == 2


def test_dtheta_two_routes(sech2, edges):
    e = edges[0.25]
    assert abs(M.dtheta_dv(e.v, e.u, sech2) - e.dtheta_dv) < 1e-6


def test_trailing_edge_guards(sech2, cp):
    with pytest.raises(NotPastCatastrophe):
        M.trailing_edge(cp.t_c, sech2, cp)
    with pytest.raises(DomainError):
        M.trailing_residuals(-0.3, -0.5, 0.25, sech2)


def test_hump_floor(sech2, cp):
    t0, v = M.hump_floor_time(sech2, cp)
    assert 0.3 < t0 < 0.31 and abs(v + 0.25) < 0.01
    with pytest.raises(HumpFloorReached):
        M.trailing_edge(0.4, sech2, cp)


def test_edge_near_catastrophe_is_cusp_like(sech2, cp):
    # v - u grows like sqrt(t - t_c) right after breaking
    gaps = []
    for dt in (1e-4, 4e-4):
        e = M.trailing_edge(cp.t_c + dt, sech2, cp)
        gaps.append(e.v - e.u)
    assert abs(gaps[1] / gaps[0] - 2.0) < 0.05


# -- modulation curve and Whitham solve --------------------------------------


def test_curve_endpoints(curve25, edges):
    e = edges[0.25]
    assert abs(curve25.x[0] - e.x_plus) < 1e-6
    assert curve25.m[0] > 0.999 and curve25.m[-1] < 1e-4
    assert np.all(np.diff(curve25.x) < 1e-9)  # x decreases from trailing to leading edge, up to Newton noise
    b2 = curve25.beta2
    assert np.all(curve25.beta1 > b2) and np.all(b2 > curve25.beta3)


def test_whitham_solve_interior(sech2, curve25):
    st_ = M.whitham_solve(-1.70, 0.25, sech2, curve=curve25)
    ref = (-0.24148429934, -0.56470220940, -0.91777659147)
    assert np.allclose(st_.betas, ref, atol=1e-9)
    assert max(abs(r) for r in st_.residual) < 1e-9
    again = M.whitham_solve(-1.70, 0.25, sech2, seed=st_)
    assert np.allclose(again.betas, st_.betas, atol=1e-12)


def test_whitham_solve_outside(sech2, curve25):
    with pytest.raises(OutsideCusp):
        M.whitham_solve(-1.0, 0.25, sech2, curve=curve25)


def test_trailing_edge_approach_scales_like_sqrt(sech2, curve25, edges):
    # beta1 - beta2 vanishes like sqrt(x+ - x); the betas reach (v, v, u)
    e = edges[0.25]
    deltas = np.array([1e-3, 1e-4, 1e-5, 1e-6])
    gaps, dev = [], []
    for d in deltas:
        s = M.whitham_solve(e.x_plus - d, 0.25, sech2, curve=curve25)
        gaps.append(s.beta1 - s.beta2)
        dev.append(max(abs(s.beta1 - e.v), abs(s.beta2 - e.v), abs(s.beta3 - e.u)))
    slope = np.polyfit(np.log(deltas), np.log(gaps), 1)[0]
    assert abs(slope - 0.5) < 0.05
    dev = np.array(dev)
    assert np.all(np.diff(dev) < 0) and dev[-1] < 1e-3


def test_leading_edge(lead25, edges, curve25):
    e = edges[0.25]
    assert lead25.x_minus < e.x_plus
    assert abs(lead25.x_minus + 1.75820511) < 1e-6
    assert lead25.gap < 1e-6
    # the fit agrees with the last curve point to the size of the remaining gap
    assert abs(curve25.x[-1] - lead25.x_minus) < 1e-4


def test_edge_just_below_hump_floor(sech2, cp):
    # the foot X sits within a Jacobian step of the minimum of u0 here
    t = 0.3014131324202516
    e = M.trailing_edge(t, sech2, cp)
    o = M.trailing_edge_oracle(t, sech2, cp)
    assert e.u > -1.0 and abs(e.u + 1.0) < 1e-5
    assert max(abs(e.x_plus - o[0]), abs(e.u - o[1]), abs(e.v - o[2])) < 1e-8
