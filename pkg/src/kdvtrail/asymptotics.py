"""Scattering phases, trailing-edge phase functions and asymptotic formulas.

Integrals of ``f_L'`` are evaluated in the foot variable ``x = f_L(xi)``
(``f_L'(xi) dxi = dx``), which turns them into integrals of powers of
``lam - u0(x)``.  The remaining endpoint square roots are absorbed by Gauss
rules, and differences of u0 at nearby points go through ``u0_drop``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import special
from .errors import DomainError, NegativeRadicand
from .initial_data import InitialDataModel
from .modulation import (
    Q_NODES,
    TrailingEdgePoint,
    WhithamCurve,
    WhithamState,
    q_eval,
    theta_foot,
    u0_drop,
    whitham_solve,
)
from .numerics import ToleranceConfig, derivative_richardson, quad_adaptive, reference_rule

PHASE_NODES = 128
_QUAD_TOL = ToleranceConfig(abs_tol=1e-14, rel_tol=1e-12)
# retained soliton-sum terms: |X_k| <= 40 and sech^2(X_k) >= 1e-30
X_CUTOFF = 40.0
SECH2_FLOOR = 1e-30


# ---------------------------------------------------------------------------
# reflection-coefficient phases


def rho_eval(lam: float, model: InitialDataModel) -> float:
    """rho(lam) for ``-1 <= lam < 0`` (the left end is included as a limit).

    The integrand ``sqrt(u0 - lam) - sqrt(-lam)`` is rewritten as
    ``u0 / (sqrt(u0 - lam) + sqrt(-lam))`` so the tail carries no cancellation.
    """
    if not (-1.0 <= lam < 0.0):
        raise DomainError(f"rho is defined for -1 <= lambda < 0, got {lam}")
    xl = float(model.f_L(lam))
    root = math.sqrt(-lam)

    def integrand(x):
        # u0(x) - lam from u0_drop: near f_L(lam) the plain difference is noise
        rise = np.maximum(u0_drop(model, x, xl - x), 0.0)
        return model.u0(x) / (np.sqrt(rise) + root)

    # x = xl - s^2 next to the turning point, where the integrand has a sqrt cusp
    near = quad_adaptive(lambda s: integrand(xl - s * s) * 2.0 * s, 0.0, 1.0, _QUAD_TOL)
    return xl * root + near + quad_adaptive(integrand, -math.inf, xl - 1.0, _QUAD_TOL)


def _tau(lam: float, model: InitialDataModel) -> float:
    if lam == 0.0:
        return quad_adaptive(lambda x: np.sqrt(-model.u0(x)), -math.inf, math.inf, _QUAD_TOL)
    xl = float(model.f_L(lam))
    xr = float(model.f_R(lam))
    total = 0.0
    # x = x_end + L s^2 on each monotone half removes the square-root endpoint
    for x_end, L in ((xl, model.x_M - xl), (xr, model.x_M - xr)):
        def integrand(s, x_end=x_end, L=L):
            off = L * s * s
            # lam - u0(x_end + off) = u0(x_end) - u0(x_end + off)
            return np.sqrt(np.maximum(u0_drop(model, x_end, off), 0.0)) * 2.0 * abs(L) * s

        total += quad_adaptive(integrand, 0.0, 1.0, _QUAD_TOL)
    return total


def tau_eval(lam: float, model: InitialDataModel) -> float:
    """tau(lam): integral of ``sqrt(lam - u0)`` between the two inverse branches."""
    if not (-1.0 < lam < 0.0):
        raise DomainError(f"tau is defined for -1 < lambda < 0, got {lam}")
    return _tau(lam, model)


# ---------------------------------------------------------------------------
# phi, phi' and hat-phi


def _edge_foot(edge: TrailingEdgePoint, model) -> float:
    X = edge.feet[0]
    return float(model.f_L(edge.u)) if math.isnan(X) else X


def _sqrt_integral_above(lam, X, model, nodes=PHASE_NODES):
    """``int_{f_L(lam)}^{X} sqrt(lam - u0(x)) dx`` for ``lam > u0(X)``."""
    if lam == 0.0:
        return quad_adaptive(lambda x: np.sqrt(-model.u0(x)), -math.inf, X, _QUAD_TOL)
    xl = float(model.f_L(lam))
    L = X - xl
    mu, w = reference_rule("chebyshev_sqrt_left", nodes)
    offs = 0.5 * L * (1.0 + mu)
    gap = u0_drop(model, xl, offs)
    return math.sqrt(0.5 * L) * float(np.sqrt(offs * gap) @ w)


def _below_integrals(lam, X, model, nodes=PHASE_NODES):
    """``(int sqrt(u0 - lam) dx, int dx / sqrt(u0 - lam))`` over ``[X, f_L(lam)]``, lam < u0(X)."""
    xl = float(model.f_L(lam))
    L = xl - X
    mu, w = reference_rule("chebyshev_sqrt_right", nodes)
    offs = 0.5 * L * (1.0 - mu)          # distance to the singular end x = f_L(lam)
    gap = u0_drop(model, xl - offs, offs)
    scale = math.sqrt(0.5 * L)
    return scale * float(np.sqrt(offs * gap) @ w), scale * float(np.sqrt(offs / gap) @ w)


@dataclass(frozen=True)
class PhiValues:
    phi: float = math.nan
    phi_prime: float = math.nan
    hat_phi: float = math.nan
    hat_phi_prime: float = math.nan


def phi_eval(lam: float, x: float, t: float, edge: TrailingEdgePoint, model,
             branch: str | None = None) -> PhiValues:
    """phi and phi' (for ``lam < u``) or hat-phi and its derivative (``u < lam <= 0``).

    ``branch`` may force ``"phi"`` or ``"hat"``; asking for a branch on the
    wrong side of u raises DomainError.  At ``lam = -1`` the integral in
    phi' diverges logarithmically and ``phi_prime`` is returned as its limit.
    """
    u = edge.u
    X = _edge_foot(edge, model)
    dx = x - edge.x_plus
    side = "phi" if lam < u else "hat"
    if branch is None:
        branch = side
    if branch not in ("phi", "hat"):
        raise DomainError(f"unknown branch {branch!r}")
    if branch != side or lam == u or lam > 0.0 or lam < -1.0:
        raise DomainError(f"lambda = {lam} is not on the {branch} side of u = {u}")
    if branch == "phi":
        r = math.sqrt(u - lam)
        if lam == -1.0:
            I_sqrt = _below_integrals(-1.0, X, model)[0]
            phi = r * dx - I_sqrt + 4.0 * t * r**3
            # int dx / sqrt(u0 + 1) diverges at the minimum, so -r theta -> +inf
            return PhiValues(phi=phi, phi_prime=math.inf)
        I_sqrt, I_inv = _below_integrals(lam, X, model)
        # f_L' dxi = dx, and xi from lam to u maps x from f_L(lam) back to X
        phi = r * dx - I_sqrt + 4.0 * t * r**3
        theta = -I_inv / (2.0 * r)
        phi_prime = -dx / (2.0 * r) - r * (6.0 * t + theta)
        return PhiValues(phi=phi, phi_prime=phi_prime)
    r = math.sqrt(lam - u)
    J = _sqrt_integral_above(lam, X, model)
    hat = -r * dx - J + 4.0 * t * r**3
    if lam == 0.0:
        # int dx / sqrt(-u0) over the left half-line diverges for a decaying profile
        theta = -math.inf
    else:
        theta = theta_foot(float(model.f_L(lam)), X, model)
    hat_prime = -dx / (2.0 * r) + r * (6.0 * t + theta)
    return PhiValues(hat_phi=hat, hat_phi_prime=hat_prime)


def hat_phi_second(lam: float, t: float, edge: TrailingEdgePoint, model) -> float:
    """d^2 hat-phi / d lam^2 at ``x = x+``: ``(6t + theta)/(2 sqrt(lam-u)) + sqrt(lam-u) theta'``."""
    X = _edge_foot(edge, model)
    u = edge.u
    r = math.sqrt(lam - u)
    y = float(model.f_L(lam))
    theta = theta_foot(y, X, model)
    h0 = 0.02 * (X - y)
    dth = derivative_richardson(lambda z: theta_foot(z, X, model), y, h0)[0] / float(model.u0_prime(np.asarray(y)))
    return (6.0 * t + theta) / (2.0 * r) + r * dth


def hat_phi_second_fd(lam: float, t: float, edge: TrailingEdgePoint, model, h: float | None = None) -> float:
    """Second central difference of hat-phi at ``x = x+``, one Richardson step."""
    if h is None:
        h = 0.01 * min(lam - edge.u, -lam if lam < 0 else 1.0)

    def f(l):
        return phi_eval(l, edge.x_plus, t, edge, model).hat_phi

    f0 = f(lam)

    def d2(step):
        return (f(lam + step) - 2.0 * f0 + f(lam - step)) / (step * step)

    return (4.0 * d2(0.5 * h) - d2(h)) / 3.0


@dataclass(frozen=True)
class PhiInequalityReport:
    t: float
    grid_n: int
    passed: bool
    margins: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)


def check_phi_inequalities(t: float, edge: TrailingEdgePoint, model, grid_n: int = 200) -> PhiInequalityReport:
    """Check the three sign conditions on hat-phi, phi' and ``-tau - hat-phi`` at ``x = x+``.

    Margins are the worst values found: the maximum of hat-phi on (u, 0]
    without v, the minimum of phi' on [-1, u), the maximum of
    ``-tau - hat-phi`` on (u, 0].
    """
    u, v = edge.u, edge.v
    x = edge.x_plus
    upper = u + (0.0 - u) * np.arange(1, grid_n + 1) / grid_n
    upper[-1] = 0.0
    lower = -1.0 + (u + 1.0) * np.arange(grid_n) / grid_n
    hat = np.array([phi_eval(l, x, t, edge, model).hat_phi for l in upper])
    taus = np.array([_tau(l, model) for l in upper])
    away = np.abs(upper - v) > 1e-12 * max(1.0, abs(v))
    prime = np.array([phi_eval(l, x, t, edge, model).phi_prime for l in lower])
    m1 = float(np.max(hat[away]))
    m2 = float(np.min(prime))
    m3 = float(np.max(-taus - hat))
    checks = {"hat_phi_negative": m1 < 0, "phi_prime_positive": m2 > 0, "tau_bound": m3 < 0}
    return PhiInequalityReport(t=t, grid_n=grid_n, passed=all(checks.values()),
                               margins={"hat_phi_negative": m1, "phi_prime_positive": m2, "tau_bound": m3},
                               checks=checks)


# ---------------------------------------------------------------------------
# zeta and gamma


def zeta_eval(lam: float, t: float, edge: TrailingEdgePoint, model) -> float:
    """``sign(lam - v) sqrt(-2 hat-phi(lam; x+))``."""
    if not (edge.u < lam <= 0.0):
        raise NegativeRadicand(f"lambda = {lam} lies outside (u, 0]")
    hat = phi_eval(lam, edge.x_plus, t, edge, model).hat_phi
    if hat > 1e-13:
        raise NegativeRadicand(f"hat-phi = {hat:.3e} > 0 at lambda = {lam}")
    return math.copysign(math.sqrt(max(-2.0 * hat, 0.0)), lam - edge.v)


def zeta_prime_v(t: float, edge: TrailingEdgePoint, model) -> tuple[float, float]:
    """``(closed form, finite difference)`` for zeta'(v)."""
    closed = (edge.v - edge.u) ** 0.25 * math.sqrt(-edge.dtheta_dv)
    h0 = min(0.1 * (edge.v - edge.u), 0.4 * (-edge.v))
    fd = derivative_richardson(lambda l: zeta_eval(l, t, edge, model), edge.v, h0)[0]
    return closed, fd


def gamma_from_zeta(t: float, edge: TrailingEdgePoint, model) -> float:
    """gamma = 4 zeta'(v) (v - u), with zeta'(v) from differences of zeta."""
    return 4.0 * zeta_prime_v(t, edge, model)[1] * (edge.v - edge.u)


# ---------------------------------------------------------------------------
# elliptic approximation


@dataclass(frozen=True)
class EllipticApproxResult:
    state: WhithamState
    s: float
    K: float
    E: float
    alpha: float
    q: float
    Omega: float
    calT: complex
    u_theta: float
    u_dn: float


def elliptic_from_state(state: WhithamState, eps: float, model, q: float | None = None) -> EllipticApproxResult:
    b1, b2, b3 = state.betas
    span = b1 - b3
    s = math.sqrt((b2 - b3) / span)
    sc = math.sqrt((b1 - b2) / span)
    K, deficit = special.elliptic_deficit(s, sc)
    E = K * (1.0 - deficit)
    Kp = special.elliptic_KE(sc, s).K
    alpha = -b1 + span * (1.0 - deficit)
    if q is None:
        q = q_eval(b1, b2, b3, model, Q_NODES)
    Omega = math.sqrt(span) / (2.0 * eps * K) * (state.x - 2.0 * state.t * (b1 + b2 + b3) - q)
    # both forms are 1-periodic in Omega; reducing keeps the trig arguments small
    Om = Omega - math.floor(Omega)
    T = Kp / K
    u_theta = b1 + b2 + b3 + 2.0 * alpha + span / (2.0 * K * K) * special.log_theta_second(Om, T)
    u_dn = b2 + b3 - b1 + 2.0 * (b1 - b2) / special.jacobi_dn(2.0 * K * Om, s, sc) ** 2
    return EllipticApproxResult(state=state, s=s, K=K, E=E, alpha=alpha, q=q, Omega=Omega,
                                calT=complex(0.0, T), u_theta=float(u_theta), u_dn=float(u_dn))


def elliptic_approx(x: float, t: float, eps: float, model, curve: WhithamCurve | None = None,
                    seed: WhithamState | None = None) -> EllipticApproxResult:
    """Leading-order elliptic approximation at ``(x, t)`` in both theta and dn form.

    The second x-derivative of ln theta is taken with the betas frozen, so
    it reduces to ``(b1 - b3)/(2 K^2)`` times the second log-derivative in
    the theta argument.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    state = whitham_solve(x, t, model, seed=seed, curve=curve)
    return elliptic_from_state(state, eps, model)


# ---------------------------------------------------------------------------
# trailing-edge expansions


def formal_phase(x: float, eps: float, k: int, edge: TrailingEdgePoint, one_minus_s: float) -> float:
    return (x - edge.x_plus) * math.sqrt(edge.v - edge.u) / eps + (k + 0.5) * math.log(8.0 / one_minus_s)


def formal_trailing(x: float, t: float, eps: float, k: int, edge: TrailingEdgePoint,
                    state: WhithamState) -> float:
    """Formal s -> 1 limit of the dn form: one sech^2 pulse of height 2(v - u)."""
    b1, b2, b3 = state.betas
    m_c = (b1 - b2) / (b1 - b3)                 # 1 - s^2
    one_minus_s = m_c / (1.0 + math.sqrt(1.0 - m_c))
    X = formal_phase(x, eps, k, edge, one_minus_s)
    return edge.u + 2.0 * (edge.v - edge.u) / math.cosh(X) ** 2


def phase_constant(k: int, edge: TrailingEdgePoint) -> float:
    """``ln(sqrt(2 pi) h_k) + (k + 1/2) ln gamma``, the k-dependent shift in X_k."""
    return 0.5 * math.log(2.0 * math.pi) + special.hermite_norm(k)[1] + (k + 0.5) * math.log(edge.gamma)


def _check_eps(eps):
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps}")


def Xk_eval(y: float, k: int, eps: float, edge: TrailingEdgePoint) -> float:
    _check_eps(eps)
    return 0.5 * (0.5 - y + k) * math.log(eps) - phase_constant(k, edge)


def y_from_x(x: float, eps: float, edge: TrailingEdgePoint) -> float:
    return 2.0 * math.sqrt(edge.v - edge.u) * (x - edge.x_plus) / (eps * math.log(eps))


def x_from_y(y: float, eps: float, edge: TrailingEdgePoint) -> float:
    return edge.x_plus + eps * math.log(eps) * y / (2.0 * math.sqrt(edge.v - edge.u))


def peak_center(k: int, eps: float, edge: TrailingEdgePoint) -> float:
    """The y at which X_k vanishes."""
    _check_eps(eps)
    return k + 0.5 - 2.0 * phase_constant(k, edge) / math.log(eps)


def sqrt_eps_constant(k: int, edge: TrailingEdgePoint, side: int = -1) -> float:
    """Limit of ``sech^2(X_k)/sqrt(eps)`` at ``y = k`` (side -1) or ``y = k + 1`` (side +1)."""
    c = 2.0 * math.pi * special.hermite_norm(k)[0] ** 2 * edge.gamma ** (2 * k + 1)
    return 4.0 / c if side < 0 else 4.0 * c


@dataclass(frozen=True)
class SolitonSumResult:
    y: float
    k: int
    Delta_k: float
    X: dict
    u_value: float
    terms_used: int


def _sech2(X):
    a = abs(X)
    if a > 350.0:
        return 0.0
    return 1.0 / math.cosh(a) ** 2


def soliton_sum(y: float, t: float, eps: float, model, edge: TrailingEdgePoint | None = None,
                k_max: int = 500) -> SolitonSumResult:
    """Sum of trailing-edge pulses ``u + 2(v-u) sum_k sech^2(X_k)``.

    Terms are retained while ``|X_k| <= 40`` and ``sech^2(X_k) >= 1e-30``.
    X_k decreases through the window with k and only turns back up (through
    the growth of ``-ln h_k``) at k of order ``gamma^2/eps``, far outside the
    bounded-y regime; the scan stops once X_k has fallen below the window
    past ``k = y``.
    """
    _check_eps(eps)
    if edge is None:
        from .modulation import trailing_edge

        edge = trailing_edge(t, model)
    kept = {}
    total = 0.0
    for k in range(0, k_max + 1):
        X = Xk_eval(y, k, eps, edge)
        term = _sech2(X)
        if abs(X) <= X_CUTOFF and term >= SECH2_FLOOR:
            kept[k] = X
            total += term
        elif X < -X_CUTOFF and k > y:
            break
    kn = max(0, int(math.floor(y + 0.5)))
    return SolitonSumResult(y=y, k=kn, Delta_k=y - kn, X=kept,
                            u_value=edge.u + 2.0 * (edge.v - edge.u) * total, terms_used=len(kept))
