"""Hopf characteristics, Whitham modulation and the oscillation-zone edges.

Conventions: Riemann invariants are ordered ``beta1 > beta2 > beta3`` and
all lie in (-1, 0); ``f_L`` is the inverse of the decreasing part of the
initial profile.  The hodograph solution ``x = v_i t + w_i`` is solved in
divided-difference form,

    (R1 - R2)/(b1 - b2) = 2A(2t + q_1) + 2B(2t + q_2),
    (R2 - R3)/(b2 - b3) = 2C(2t + q_2) + 2D(2t + q_3),

with ``A = (b1-b3)/(b1+alpha)``, ``B = (b2-b3)/(b2+alpha)``,
``C = (b2-b1)/(b2+alpha)``, ``D = (b3-b1)/(b3+alpha)`` and ``q_i`` the
partial derivatives of q.  This form stays well conditioned as either gap
closes, which is what lets the continuation reach both edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import special
from .errors import (
    ContinuationFailed,
    DegenerateGap,
    DomainError,
    EdgeSolveFailed,
    HumpFloorReached,
    KdVTrailError,
    NonNegativeDthetaDv,
    NotPastCatastrophe,
    OutsideCusp,
)
from .initial_data import CatastrophePoint, InitialDataModel, catastrophe
from .numerics import (
    QuadratureRule,
    ToleranceConfig,
    derivative_richardson,
    find_root_bracketed,
    newton_system,
    quad_adaptive,
    quad_sqrt_singular,
    reference_rule,
)

Q_NODES = 64
THETA_NODES = 64
MIN_GAP = 1e-12
ACCEPT_RESIDUAL = 1e-9
_SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Hopf solution


@dataclass(frozen=True)
class HopfResult:
    values: tuple[float, ...]
    feet: tuple[float, ...]

    @property
    def multivalued(self) -> bool:
        return len(self.values) > 1

    @property
    def u(self) -> float:
        return self.values[0]


def hopf_solve(x: float, t: float, model: InitialDataModel, samples: int = 2000) -> HopfResult:
    """All branches ``u0(xi)`` with ``x = xi + 6 u0(xi) t``, sorted by value.

    Since ``-1 <= u0 < 0`` every foot lies in ``[x, x + 6t]``; that interval is
    sampled and each sign change refined by Brent's method.
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        u = float(model.u0(np.array(x)))
        return HopfResult((u,), (float(x),))

    def g(xi):
        return xi + 6.0 * t * model.u0(xi) - x

    grid = np.linspace(x, x + 6.0 * t, samples + 1)
    vals = g(grid)
    cfg = ToleranceConfig(abs_tol=1e-15, rel_tol=1e-15)
    feet = []
    for i in np.flatnonzero(vals == 0.0):
        feet.append(float(grid[i]))
    for i in np.flatnonzero(vals[:-1] * vals[1:] < 0):
        feet.append(find_root_bracketed(lambda s: float(g(np.array(s))), grid[i], grid[i + 1], cfg))
    if not feet:
        raise KdVTrailError("no characteristic reaches this point")
    us = sorted((float(model.u0(np.array(f))), f) for f in feet)
    return HopfResult(tuple(u for u, _ in us), tuple(f for _, f in us))


# ---------------------------------------------------------------------------
# the q function


def _check_betas(*betas):
    for b in betas:
        if not (-1.0 < b < 0.0):
            raise DomainError(f"Riemann invariants must lie in (-1, 0), got {b}")


def _q_grid(b1, b2, b3, nodes):
    mu, wm = reference_rule("chebyshev_sqrt_right", nodes)
    nu, wn = reference_rule("chebyshev_both", nodes)
    M = 0.5 * (1.0 + mu)[:, None]
    N = 0.5 * (1.0 + nu)[None, :]
    arg = M * (N * b1 + (1.0 - N) * b2) + (1.0 - M) * b3
    return M, N, arg, wm, wn


def q_eval(b1: float, b2: float, b3: float, model, nodes: int = Q_NODES) -> float:
    """Tensor-product Gauss rule for the double integral defining q.

    The mu-direction absorbs ``1/sqrt(1-mu)`` (Gauss-Jacobi), the
    nu-direction ``1/sqrt(1-nu^2)`` (Gauss-Chebyshev).  The rule size is
    fixed so that q is a smooth function of the betas, which the
    derivatives below rely on.
    """
    _check_betas(b1, b2, b3)
    _, _, arg, wm, wn = _q_grid(b1, b2, b3, nodes)
    return float(wm @ np.asarray(model.f_L(arg)) @ wn) / (2.0 * _SQRT2 * math.pi)


def q_gradient(b1: float, b2: float, b3: float, model, nodes: int = Q_NODES):
    """``(q, (dq/db1, dq/db2, dq/db3))`` by differentiating under the integral."""
    _check_betas(b1, b2, b3)
    M, N, arg, wm, wn = _q_grid(b1, b2, b3, nodes)
    # one inversion serves both f_L and f_L' = 1/u0'(f_L)
    f = model._invert(arg, -1.0)
    fp = 1.0 / model.u0_prime(f)
    c = 1.0 / (2.0 * _SQRT2 * math.pi)
    q = float(wm @ f @ wn) * c
    dq1 = float(wm @ (fp * M * N) @ wn) * c
    dq2 = float(wm @ (fp * M * (1.0 - N)) @ wn) * c
    dq3 = float(wm @ (fp * (1.0 - M)) @ wn) * c
    return q, (dq1, dq2, dq3)


def q_gradient_richardson(b1, b2, b3, model, nodes: int = Q_NODES):
    """Partial derivatives of q by Richardson-extrapolated central differences."""
    betas = [b1, b2, b3]
    out = []
    for i in range(3):
        room = min(betas[i] + 1.0, -betas[i])
        h0 = min(1e-2, 0.25 * room)

        def qi(b, i=i):
            bb = list(betas)
            bb[i] = b
            return q_eval(*bb, model, nodes=nodes)

        out.append(derivative_richardson(qi, betas[i], h0)[0])
    return tuple(out)


# ---------------------------------------------------------------------------
# Whitham velocities and hodograph residuals


@dataclass(frozen=True)
class WhithamState:
    beta1: float
    beta2: float
    beta3: float
    x: float
    t: float
    residual: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def betas(self) -> tuple[float, float, float]:
        return (self.beta1, self.beta2, self.beta3)

    @property
    def modulus(self) -> float:
        return math.sqrt((self.beta2 - self.beta3) / (self.beta1 - self.beta3))


@dataclass(frozen=True)
class _Kinematics:
    """alpha-related quantities for one triple, evaluated without cancellation."""

    s: float
    sc: float
    K: float
    E: float
    alpha: float
    b1a: float  # beta_i + alpha
    b2a: float
    b3a: float


def _kinematics(b1, b2, b3) -> _Kinematics:
    if b1 - b2 < MIN_GAP or b2 - b3 < MIN_GAP:
        raise DegenerateGap(f"gaps {b1 - b2:.3e}, {b2 - b3:.3e} below {MIN_GAP}")
    span = b1 - b3
    s = math.sqrt((b2 - b3) / span)
    sc = math.sqrt((b1 - b2) / span)
    K, deficit = special.elliptic_deficit(s, sc)
    ratio = 1.0 - deficit
    E = K * ratio
    alpha = -b1 + span * ratio
    return _Kinematics(s=s, sc=sc, K=K, E=E, alpha=alpha, b1a=span * ratio,
                       b2a=-(b1 - b2) + span * ratio, b3a=-span * deficit)


def whitham_velocities(b1: float, b2: float, b3: float, model, dq: str = "analytic",
                       nodes: int = Q_NODES):
    """``(v1, v2, v3, w1, w2, w3)`` for an ordered triple.

    ``dq`` selects how the partial derivatives of q are formed:
    ``"analytic"`` (under the integral sign) or ``"richardson"``.
    """
    _check_betas(b1, b2, b3)
    kin = _kinematics(b1, b2, b3)
    sigma = b1 + b2 + b3
    v1 = 4.0 * (b1 - b2) * (b1 - b3) / kin.b1a + 2.0 * sigma
    v2 = 4.0 * (b2 - b1) * (b2 - b3) / kin.b2a + 2.0 * sigma
    v3 = 4.0 * (b3 - b1) * (b3 - b2) / kin.b3a + 2.0 * sigma
    if dq == "analytic":
        q, grad = q_gradient(b1, b2, b3, model, nodes)
    elif dq == "richardson":
        q = q_eval(b1, b2, b3, model, nodes)
        grad = q_gradient_richardson(b1, b2, b3, model, nodes)
    else:
        raise DomainError(f"unknown derivative mode {dq!r}")
    w = [0.5 * (v - 2.0 * sigma) * g + q for v, g in zip((v1, v2, v3), grad)]
    return v1, v2, v3, w[0], w[1], w[2]


def hodograph_residual(b1, b2, b3, x, t, model, nodes: int = Q_NODES) -> np.ndarray:
    """``v_i t + w_i - x`` for i = 1, 2, 3."""
    v1, v2, v3, w1, w2, w3 = whitham_velocities(b1, b2, b3, model, nodes=nodes)
    return np.array([v1 * t + w1 - x, v2 * t + w2 - x, v3 * t + w3 - x])


def _divided_residuals(b1, b2, b3, t, model, nodes=Q_NODES):
    """Normalised divided differences of the hodograph residuals, and x = v1 t + w1."""
    kin = _kinematics(b1, b2, b3)
    span = b1 - b3
    q, (q1, q2, q3) = q_gradient(b1, b2, b3, model, nodes)
    A = span / kin.b1a
    B = (b2 - b3) / kin.b2a
    C = (b2 - b1) / kin.b2a
    D = (b3 - b1) / kin.b3a
    F2 = (A * (2 * t + q1) + B * (2 * t + q2)) / (abs(A) + abs(B))
    F3 = (C * (2 * t + q2) + D * (2 * t + q3)) / (abs(C) + abs(D))
    sigma = b1 + b2 + b3
    v1 = 4.0 * (b1 - b2) * span / kin.b1a + 2.0 * sigma
    x = v1 * t + 0.5 * (v1 - 2.0 * sigma) * q1 + q
    return F2, F3, x


# ---------------------------------------------------------------------------
# theta(v; u)


def theta_vu(v: float, u: float, model, nodes: int = THETA_NODES) -> float:
    """Weighted average of ``f_L'`` over ``[u, v]`` against ``1/sqrt(v - xi)``."""
    if not (-1.0 < u < v < 0.0):
        raise DomainError(f"theta needs -1 < u < v < 0, got u={u}, v={v}")
    integral = quad_sqrt_singular(model.f_L_prime, u, v, QuadratureRule("chebyshev_sqrt_right", nodes))
    return integral / (2.0 * math.sqrt(v - u))


def theta_line(lam, u: float, model, nodes: int = THETA_NODES):
    """theta(lambda; u) for an array of lambda, on either side of ``u``.

    After ``xi = u + (lambda - u)(1 + mu)/2`` the integral is an average of
    f_L' against ``1/sqrt(1 - mu)``, valid for ``lambda < u`` as well.
    """
    lam = np.asarray(lam, dtype=float)
    mu, w = reference_rule("chebyshev_sqrt_right", nodes)
    xi = u + (lam[..., None] - u) * 0.5 * (1.0 + mu)
    vals = np.asarray(model.f_L_prime(xi)) @ w / (2.0 * _SQRT2)
    return float(vals) if lam.ndim == 0 else vals


def dtheta_dv(v: float, u: float, model, nodes: int = THETA_NODES) -> float:
    h0 = min(0.02 * (v - u), 0.25 * (-v))
    return derivative_richardson(lambda z: theta_line(z, u, model, nodes), v, h0)[0]


# ---------------------------------------------------------------------------
# trailing edge
#
# The edge system is solved in foot variables: u = u0(X), v = u0(Y) with
# Y < X <= x_M.  Substituting xi = u0(x) gives
#
#     theta(u0(y); u0(X)) = -1/(2 sqrt(lam - u)) * int_y^X dx / sqrt(lam - u0(x)),
#
# whose only singularity is an inverse square root at x = y.  Unlike the
# xi-form, nothing degrades as u approaches the hump floor, and no inverse
# branch has to be evaluated.


@dataclass(frozen=True)
class TrailingEdgePoint:
    t: float
    x_plus: float
    u: float
    v: float
    dtheta_dv: float
    gamma: float
    residuals: tuple[float, float, float] = (0.0, 0.0, 0.0)
    feet: tuple[float, float] = (math.nan, math.nan)


_INNER_TOL = ToleranceConfig(abs_tol=1e-15, rel_tol=1e-13)


_MV_NODES, _MV_WEIGHTS = np.polynomial.legendre.leggauss(12)


def u0_drop(model, y, offset):
    """``u0(y) - u0(y + offset)`` without cancellation for small offsets.

    For ``|offset| < 0.5`` this is ``-offset`` times the mean of u0' over the
    segment (12-point Gauss-Legendre); otherwise the plain difference.
    """
    y = np.asarray(y, dtype=float)
    d = np.asarray(offset, dtype=float)
    pts = (y + 0.5 * d)[..., None] + 0.5 * d[..., None] * _MV_NODES
    mean = 0.5 * (model.u0_prime(pts) @ _MV_WEIGHTS)
    return np.where(np.abs(d) < 0.5, -d * mean, model.u0(y) - model.u0(y + d))


def _theta_foot_span(y, L, model, nodes):
    # theta(u0(y); u0(y + L)) with the span L supplied exactly
    mu, w = reference_rule("chebyshev_sqrt_left", nodes)
    offs = L[..., None] * 0.5 * (1.0 + mu)
    gap = u0_drop(model, y[..., None], offs)
    integral = np.sqrt(0.5 * L) * (np.sqrt(offs / gap) @ w)
    return -integral / (2.0 * np.sqrt(u0_drop(model, y, L)))


def theta_foot(y, X: float, model, nodes: int = THETA_NODES):
    """theta(u0(y); u0(X)) for foot points ``y < X`` (scalar or array ``y``)."""
    y = np.asarray(y, dtype=float)
    out = _theta_foot_span(y, X - y, model, nodes)
    return float(out) if out.ndim == 0 else out


def _trailing_foot_residuals(X, Y, t, model, nodes):
    e1 = 6.0 * t + theta_foot(Y, X, model, nodes)
    L = X - Y

    def integrand(w):
        span = L * w * w
        y = X - span
        rise = np.maximum(u0_drop(model, y, span), 0.0)
        return (6.0 * t + _theta_foot_span(y, span, model, nodes)) * np.sqrt(rise) * (-model.u0_prime(y)) * 2.0 * L * w

    e2 = quad_adaptive(integrand, 0.0, 1.0, _INNER_TOL)
    return e1, e2


def trailing_residuals(u: float, v: float, t: float, model, nodes: int = THETA_NODES):
    """``(6t + theta(v;u), integral of (6t + theta(lam;u)) sqrt(lam - u) over [u, v])``."""
    if not (-1.0 <= u < v < 0.0):
        raise DomainError(f"trailing residuals need -1 <= u < v < 0, got u={u}, v={v}")
    X = float(model.f_L(u))
    Y = float(model.f_L(v))
    return _trailing_foot_residuals(X, Y, t, model, nodes)


def _cusp_seed(t, cp: CatastrophePoint):
    # local cubic model of f_L' at u_c: u = u_c - 4h/7, v = u_c + 3h/7
    h = math.sqrt(245.0 * (t - cp.t_c) / (2.0 * abs(cp.fL_third_at_uc)))
    return cp.u_c - 4.0 * h / 7.0, cp.u_c + 3.0 * h / 7.0


def _foot_system(t, model, nodes):
    def F(z):
        X, Y = z
        if not Y < X <= model.x_M:
            return np.array([np.nan, np.nan])
        v = float(model.u0(np.asarray(Y)))
        u = float(model.u0(np.asarray(X)))
        if not u < v < 0.0:
            return np.array([np.nan, np.nan])
        e1, e2 = _trailing_foot_residuals(X, Y, t, model, nodes)
        return np.array([e1, e2 / (v - u) ** 1.5])

    return F


_EDGE_NEWTON = ToleranceConfig(abs_tol=5e-14, rel_tol=1e-12, max_iter=60)


def _march_edge(t_end, model, cp, nodes, step=0.04):
    """Continue the edge solution in sqrt(t - t_c); returns (history, error)."""
    sig_target = math.sqrt(t_end - cp.t_c)
    n = max(3, int(math.ceil(sig_target / step)))
    history = []
    for sig in sig_target * np.arange(1, n + 1) / n:
        tj = cp.t_c + sig * sig
        if len(history) >= 2:
            (s0, t0, *z0), (s1, t1, *z1) = history[-2], history[-1]
            seed = np.array(z1) + (np.array(z1) - np.array(z0)) * (sig - s1) / (s1 - s0)
        else:
            us, vs = _cusp_seed(tj, cp)
            seed = np.array([float(model.f_L(max(us, -1.0))), float(model.f_L(vs))])
        seed[0] = min(seed[0], model.x_M)
        try:
            X, Y = newton_system(_foot_system(tj, model, nodes), seed, _EDGE_NEWTON)
        except KdVTrailError as exc:
            return history, EdgeSolveFailed(f"trailing-edge Newton failed at t={tj:.6g}: {exc}")
        history.append((sig, tj, float(X), float(Y)))
    return history, None


def _pinned_floor(model, seed_Y, seed_t, nodes):
    """Solve the edge system with u = -1 (foot at x_M) for (Y, t)."""
    X = model.x_M

    def F(z):
        Y, t = z
        if not Y < X:
            return np.array([np.nan, np.nan])
        v = float(model.u0(np.asarray(Y)))
        e1, e2 = _trailing_foot_residuals(X, Y, t, model, nodes)
        return np.array([e1, e2 / (v - model.u_min) ** 1.5])

    Y, t0 = newton_system(F, np.array([seed_Y, seed_t]), _EDGE_NEWTON)
    return float(t0), float(Y)


def trailing_edge(t: float, model: InitialDataModel, cp: CatastrophePoint | None = None,
                  nodes: int = THETA_NODES) -> TrailingEdgePoint:
    """Trailing-edge data ``(x+, u, v)`` at time ``t > t_c``.

    The 2x2 system is solved by damped Newton in the foot variables,
    continued in ``sqrt(t - t_c)`` from the cusp where ``u = v = u_c``.
    Raises HumpFloorReached when ``t`` lies beyond the time at which ``u``
    reaches the minimum of the profile.
    """
    cp = cp or catastrophe(model)
    if t <= cp.t_c:
        raise NotPastCatastrophe(f"t = {t} does not exceed t_c = {cp.t_c}")
    history, err = _march_edge(t, model, cp, nodes)
    if err is not None:
        if history:
            try:
                t0, _ = _pinned_floor(model, history[-1][3], history[-1][1], nodes)
            except KdVTrailError:
                t0 = math.inf
            if t0 <= t:
                raise HumpFloorReached(
                    f"u reaches the profile minimum at t0 = {t0:.10g} < t = {t}; "
                    "the decreasing-branch edge equations have no solution beyond t0") from err
        raise err
    _, _, X, Y = history[-1]
    return _edge_point(t, X, Y, model, nodes)


def _edge_point(t, X, Y, model, nodes):
    u = float(model.u0(np.asarray(X)))
    v = float(model.u0(np.asarray(Y)))
    x_plus = 6.0 * t * u + X
    e1, e2 = _trailing_foot_residuals(X, Y, t, model, nodes)
    r1 = x_plus - 6.0 * t * u - X
    h0 = 0.02 * (X - Y)
    dth_dY = derivative_richardson(lambda y: theta_foot(y, X, model, nodes), Y, h0)[0]
    dth = dth_dY / float(model.u0_prime(np.asarray(Y)))
    if dth >= 0:
        raise NonNegativeDthetaDv(f"d theta/dv = {dth:.3e} is not negative at t={t}")
    gamma = 4.0 * (v - u) ** 1.25 * math.sqrt(-dth)
    return TrailingEdgePoint(t=t, x_plus=x_plus, u=u, v=v, dtheta_dv=dth, gamma=gamma,
                             residuals=(r1, e1, e2), feet=(X, Y))


def hump_floor_time(model: InitialDataModel, cp: CatastrophePoint | None = None,
                    nodes: int = THETA_NODES, horizon: float = 5.0) -> tuple[float, float]:
    """``(t0, v)``: the time at which the trailing-edge value u reaches the minimum.

    Beyond ``t0`` the edge system built from f_L alone has no solution.
    """
    cp = cp or catastrophe(model)
    history, err = _march_edge(cp.t_c + horizon, model, cp, nodes, step=0.02)
    if err is None or not history:
        raise EdgeSolveFailed(f"no floor crossing found before t = {cp.t_c + horizon}")
    t0, Y = _pinned_floor(model, history[-1][3], history[-1][1], nodes)
    return t0, float(model.u0(np.asarray(Y)))


def theta_zero_count(t: float, edge: TrailingEdgePoint, model, n: int = 4000) -> int:
    """Sign changes of ``lam -> 6t + theta(lam; u)`` on an interior grid of (-1, 0)."""
    lam = -1.0 + (np.arange(n) + 0.5) / n
    vals = 6.0 * t + theta_line(lam, edge.u, model)
    return int(np.count_nonzero(np.sign(vals[:-1]) != np.sign(vals[1:])))


# ---------------------------------------------------------------------------
# independent trailing-edge oracle: nested bisection with Gauss-Legendre
#
# Same foot variables, but the square-root endpoints are removed by the
# substitutions x = y + (X - y) s^2 and y = X - (X - Y) w^2, after which a
# plain high-order Gauss-Legendre rule applies.


@lru_cache(maxsize=4)
def _oracle_rule(n):
    s, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (s + 1.0), 0.5 * w


@dataclass(frozen=True)
class _OracleQuad:
    nodes: int = 160

    def rule(self):
        return _oracle_rule(self.nodes)

    def theta(self, y, X, model, span=None):
        s, w = self.rule()
        y = np.asarray(y, dtype=float)
        L = (X - y if span is None else np.asarray(span, dtype=float))[..., None]
        # dx / sqrt(lam - u0(x)) = 2 L s ds / sqrt(lam - u0(x)),  x = y + L s^2
        vals = (2.0 * L * s / np.sqrt(u0_drop(model, y[..., None], L * s * s))) @ w
        return -vals / (2.0 * np.sqrt(u0_drop(model, y, L[..., 0])))

    def e2(self, X, Y, t, model):
        s, w = self.rule()
        L = X - Y
        span = L * s * s
        y = X - span
        rise = u0_drop(model, y, span)
        vals = (6.0 * t + self.theta(y, X, model, span)) * np.sqrt(rise) * (-model.u0_prime(y)) * 2.0 * L * s
        return float(vals @ w)


def _bisect(f, a, b, iters=200):
    fa = f(a)
    for _ in range(iters):
        c = 0.5 * (a + b)
        if c in (a, b):
            break
        fc = f(c)
        if (fc < 0) == (fa < 0):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


def trailing_edge_oracle(t: float, model: InitialDataModel, cp: CatastrophePoint | None = None,
                         scan: int = 120) -> tuple[float, float, float]:
    """``(x+, u, v)`` by nested bisection, sharing no solver or rule with the Newton path.

    Inner: v(u) is the largest zero of ``6t + theta(.; u)`` below 0, found by
    a scan and bisection in its foot.  Outer: bisection in the foot of u on
    the scaled integral condition.
    """
    cp = cp or catastrophe(model)
    if t <= cp.t_c:
        raise NotPastCatastrophe(f"t = {t} does not exceed t_c = {cp.t_c}")
    oq = _OracleQuad()
    far = float(model.f_L(-1e-12))

    def foot_v(X):
        # feet of lam in (u, 0) run from X down to -infinity; scan a stretched grid
        ys = X - (X - far) * (np.arange(1, scan) / scan) ** 2
        vals = 6.0 * t + oq.theta(ys, X, model)
        # lam increases as the foot moves left; v is where the sign goes + to -
        idx = np.flatnonzero((vals[:-1] > 0) & (vals[1:] <= 0))
        if idx.size == 0:
            return None
        i = idx[0]
        return _bisect(lambda y: 6.0 * t + float(oq.theta(y, X, model)), ys[i], ys[i + 1])

    def g(X):
        Y = foot_v(X)
        if Y is None:
            return None
        v = float(model.u0(np.asarray(Y)))
        u = float(model.u0(np.asarray(X)))
        return oq.e2(X, Y, t, model) / (v - u) ** 1.5

    Xs = np.linspace(cp.xi_c, model.x_M, 41)[1:]
    prev = None
    bracket = None
    for X in Xs:
        gx = g(X)
        if gx is None:
            prev = None
            continue
        if prev is not None and (gx < 0) != (prev[1] < 0):
            bracket = (prev[0], X)
            break
        prev = (X, gx)
    if bracket is None:
        raise EdgeSolveFailed("oracle found no sign change of the integral condition on the decreasing branch")

    def gsafe(X):
        val = g(X)
        if val is None:
            raise EdgeSolveFailed("oracle lost the inner root")
        return val

    X = _bisect(gsafe, *bracket)
    Y = foot_v(X)
    u = float(model.u0(np.asarray(X)))
    v = float(model.u0(np.asarray(Y)))
    return 6.0 * t * u + X, u, v


# ---------------------------------------------------------------------------
# modulation curve at fixed t, Whitham solve and the leading edge


@dataclass(frozen=True)
class WhithamCurve:
    """Solutions of the hodograph system at fixed t, parametrised by m = s^2."""

    t: float
    m: np.ndarray
    beta1: np.ndarray
    beta3: np.ndarray
    x: np.ndarray
    edge: TrailingEdgePoint

    @property
    def beta2(self) -> np.ndarray:
        return self.beta3 + self.m * (self.beta1 - self.beta3)

    def state(self, i: int) -> WhithamState:
        return WhithamState(float(self.beta1[i]), float(self.beta2[i]), float(self.beta3[i]),
                            float(self.x[i]), self.t)


def _solve_at_m(m, t, model, seed, nodes=Q_NODES):
    def F(z):
        b1, b3 = z
        b2 = b3 + m * (b1 - b3)
        if not (-1.0 < b3 < b2 < b1 < 0.0):
            return np.array([np.nan, np.nan])
        F2, F3, _ = _divided_residuals(b1, b2, b3, t, model, nodes)
        return np.array([F2, F3])

    z = newton_system(F, np.asarray(seed, dtype=float),
                      ToleranceConfig(abs_tol=1e-13, rel_tol=1e-12, max_iter=50), stall_tol=1e-10)
    b1, b3 = z
    b2 = b3 + m * (b1 - b3)
    _, _, x = _divided_residuals(b1, b2, b3, t, model, nodes)
    return b1, b3, x


def _default_m_path():
    upper = 1.0 - np.logspace(-10, math.log10(0.5), 36)
    lower = np.logspace(math.log10(0.5), -7, 33)[1:]
    return np.concatenate([upper, lower])


def whitham_curve(t: float, model: InitialDataModel, edge: TrailingEdgePoint | None = None,
                  m_path=None, nodes: int = Q_NODES) -> WhithamCurve:
    """March the hodograph solution from the trailing edge to the leading edge.

    Starts at m = 1 - 1e-10 seeded by ``(beta1, beta3) = (v, u)`` and
    continues in m with secant predictors; a failed step is retried with
    the interval halved.
    """
    edge = edge or trailing_edge(t, model)
    path = list(_default_m_path() if m_path is None else m_path)
    ms, b1s, b3s, xs = [], [], [], []
    seed = np.array([edge.v, edge.u])
    targets = path[::-1]
    m_prev = None
    while targets:
        m = targets.pop()
        if len(ms) >= 2:
            frac = (m - ms[-1]) / (ms[-1] - ms[-2])
            seed = np.array([b1s[-1] + frac * (b1s[-1] - b1s[-2]), b3s[-1] + frac * (b3s[-1] - b3s[-2])])
        elif ms:
            seed = np.array([b1s[-1], b3s[-1]])
        try:
            b1, b3, x = _solve_at_m(m, t, model, seed, nodes)
        except KdVTrailError as exc:
            if m < 1e-5 and len(ms) > 5:
                # the noise floor reached deep in the leading-edge tail; the
                # points gathered so far suffice for the extrapolation
                break
            if m_prev is None or abs(m - m_prev) < 1e-12:
                raise ContinuationFailed(f"hodograph continuation failed at m={m:.3e}: {exc}") from exc
            targets.append(m)
            targets.append(0.5 * (m + m_prev))
            continue
        ms.append(m)
        b1s.append(b1)
        b3s.append(b3)
        xs.append(x)
        m_prev = m
    return WhithamCurve(t=t, m=np.array(ms), beta1=np.array(b1s), beta3=np.array(b3s),
                        x=np.array(xs), edge=edge)


def _polish(x, t, model, b_seed, nodes=Q_NODES):
    def F(b):
        b1, b2, b3 = b
        if not (-1.0 < b3 < b2 < b1 < 0.0) or b1 - b2 < MIN_GAP or b2 - b3 < MIN_GAP:
            return np.array([np.nan] * 3)
        F2, F3, xx = _divided_residuals(b1, b2, b3, t, model, nodes)
        return np.array([xx - x, F2, F3])

    return newton_system(F, np.asarray(b_seed, dtype=float),
                         ToleranceConfig(abs_tol=1e-13, rel_tol=1e-12, max_iter=50), stall_tol=1e-10)


def whitham_solve(x: float, t: float, model: InitialDataModel, seed: WhithamState | None = None,
                  curve: WhithamCurve | None = None, nodes: int = Q_NODES) -> WhithamState:
    """Riemann invariants at ``(x, t)`` inside the oscillation zone.

    With ``seed`` the hodograph system is solved directly by damped Newton.
    Otherwise the modulation curve at ``t`` (from ``curve`` or a fresh march
    from the trailing edge) brackets ``x`` and supplies the seed.
    """
    if seed is not None:
        b_seed = seed.betas
    else:
        curve = curve or whitham_curve(t, model, nodes=nodes)
        xs = curve.x
        lo, hi = float(np.min(xs)), float(np.max(xs))
        if not (lo < x < hi):
            raise OutsideCusp(f"x = {x} is outside the computed zone [{lo:.6f}, {hi:.6f}]")
        order = np.argsort(xs)
        j = int(np.searchsorted(xs[order], x))
        i0, i1 = order[j - 1], order[j]
        try:
            b1, b3, m = _solve_at_m_for_x(x, t, model, curve, i0, i1, nodes)
            b_seed = (b1, b3 + m * (b1 - b3), b3)
        except KdVTrailError as exc:
            raise OutsideCusp(f"could not locate x = {x} on the modulation curve: {exc}") from exc
    try:
        b = _polish(x, t, model, b_seed, nodes)
    except KdVTrailError as exc:
        raise OutsideCusp(f"hodograph Newton failed at x={x}, t={t}: {exc}") from exc
    b1, b2, b3 = (float(v) for v in b)
    if not (-1.0 < b3 < b2 < b1 < 0.0):
        raise OutsideCusp("Newton converged to a degenerate ordering")
    res = hodograph_residual(b1, b2, b3, x, t, model, nodes)
    if np.max(np.abs(res)) > ACCEPT_RESIDUAL:
        raise OutsideCusp(f"hodograph residual {np.max(np.abs(res)):.2e} too large")
    return WhithamState(b1, b2, b3, float(x), float(t), tuple(float(r) for r in res))


def _solve_at_m_for_x(x, t, model, curve, i0, i1, nodes):
    """Brent in m between two curve nodes so that the curve passes through x."""
    m0, m1 = float(curve.m[i0]), float(curve.m[i1])
    store = {}

    def gap(m):
        w = (m - m0) / (m1 - m0)
        seed = (curve.beta1[i0] + w * (curve.beta1[i1] - curve.beta1[i0]),
                curve.beta3[i0] + w * (curve.beta3[i1] - curve.beta3[i0]))
        b1, b3, xx = _solve_at_m(m, t, model, seed, nodes)
        store[m] = (b1, b3)
        return xx - x

    m = find_root_bracketed(gap, min(m0, m1), max(m0, m1), ToleranceConfig(abs_tol=1e-14, rel_tol=1e-13))
    if m not in store:
        gap(m)
    b1, b3 = store[m]
    return b1, b3, m


@dataclass(frozen=True)
class LeadingEdge:
    x_minus: float
    u: float
    v: float
    gap: float


def leading_edge(t: float, model: InitialDataModel, curve: WhithamCurve | None = None,
                 gap_stop: float = 1e-7) -> LeadingEdge:
    """Left edge of the zone, extrapolated along the curve to ``beta2 = beta3``.

    The continuation is pushed until ``beta2 - beta3 < gap_stop`` and the
    edge location, ``beta1`` and ``beta3`` are extrapolated to m = 0 by a
    linear least-squares fit over the curve points with ``m <= 1e-3``.
    """
    curve = curve or whitham_curve(t, model)
    gaps = curve.beta2 - curve.beta3
    if gaps[-1] >= gap_stop:
        extra = np.logspace(math.log10(curve.m[-1]), math.log10(gap_stop / 10.0), 6)[1:]
        try:
            tail = whitham_curve(t, model, curve.edge, m_path=np.concatenate([curve.m[-3:], extra]))
        except KdVTrailError as exc:
            raise ContinuationFailed(str(exc)) from exc
        m = np.concatenate([curve.m, tail.m[3:]])
        b1 = np.concatenate([curve.beta1, tail.beta1[3:]])
        b3 = np.concatenate([curve.beta3, tail.beta3[3:]])
        xs = np.concatenate([curve.x, tail.x[3:]])
        gaps = b3 + m * (b1 - b3) - b3
    else:
        m, b1, b3, xs = curve.m, curve.beta1, curve.beta3, curve.x
    if gaps[-1] >= gap_stop:
        raise ContinuationFailed("continuation did not close the gap")
    # near m = 0 the betas are analytic in m but individually ill-conditioned,
    # so a low-order least-squares fit over the small-m tail is used
    sel = m <= 1e-3
    if np.count_nonzero(sel) < 3:
        sel = np.arange(m.size) >= m.size - 3
    mm = m[sel]
    x_minus = float(np.polyval(np.polyfit(mm, xs[sel], 1), 0.0))
    u = float(np.polyval(np.polyfit(mm, b1[sel], 1), 0.0))
    v = float(np.polyval(np.polyfit(mm, b3[sel], 1), 0.0))
    return LeadingEdge(x_minus=x_minus, u=u, v=v, gap=float(gaps[-1]))
