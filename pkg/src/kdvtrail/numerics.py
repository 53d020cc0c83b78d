"""Shared numerical kernels.

Root finding, damped Newton for small systems, vectorised adaptive
Gauss-Kronrod quadrature, Gauss rules for inverse-square-root endpoint
weights and Richardson-extrapolated finite differences.  Every routine is a
pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np
from scipy import optimize, special

from .errors import (
    DomainError,
    InvalidRule,
    MaxIterExceeded,
    NoiseDominated,
    NonConvergent,
    NoSignChange,
    SingularJacobian,
)

EPS = np.finfo(float).eps

RuleKind = Literal["adaptive", "chebyshev_sqrt_left", "chebyshev_sqrt_right", "chebyshev_both"]
_SINGULAR_KINDS = ("chebyshev_sqrt_left", "chebyshev_sqrt_right", "chebyshev_both")


@dataclass(frozen=True)
class ToleranceConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be strictly positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class QuadratureRule:
    """Which weight a Gauss rule absorbs, and how many nodes it uses.

    ``chebyshev_sqrt_right`` integrates ``f(x)/sqrt(b-x)``,
    ``chebyshev_sqrt_left`` integrates ``f(x)/sqrt(x-a)`` and
    ``chebyshev_both`` integrates ``f(x)/sqrt((x-a)(b-x))``.
    """

    kind: RuleKind = "chebyshev_both"
    nodes: int = 200

    def __post_init__(self):
        if self.kind not in ("adaptive",) + _SINGULAR_KINDS:
            raise InvalidRule(f"unknown rule kind {self.kind!r}")
        if self.nodes < 2:
            raise InvalidRule("a rule needs at least two nodes")


# --------------------------------------------------------------------------
# root finding


def find_root_bracketed(f: Callable[[float], float], a: float, b: float,
                        cfg: ToleranceConfig = DEFAULT_TOL) -> float:
    """Brent's method on ``[a, b]``; requires ``f(a) * f(b) <= 0``."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return float(a)
    if fb == 0.0:
        return float(b)
    if np.sign(fa) == np.sign(fb):
        raise NoSignChange(f"f({a})={fa:.3e} and f({b})={fb:.3e} have the same sign")
    try:
        x = optimize.brentq(f, a, b, xtol=cfg.abs_tol, rtol=max(cfg.rel_tol, 4 * EPS),
                            maxiter=cfg.max_iter)
    except RuntimeError as exc:
        raise MaxIterExceeded(str(exc)) from exc
    return float(x)


def _fd_jacobian(F, x, fx):
    n = x.size
    J = np.empty((fx.size, n))
    for i in range(n):
        h = np.sqrt(EPS) * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fp, fm = np.atleast_1d(F(xp)), np.atleast_1d(F(xm))
        # next to the edge of F's domain fall back to a one-sided difference
        if not np.all(np.isfinite(fp)):
            J[:, i] = (fx - fm) / h
        elif not np.all(np.isfinite(fm)):
            J[:, i] = (fp - fx) / h
        else:
            J[:, i] = (fp - fm) / (2 * h)
    return J


def newton_system(F: Callable[[np.ndarray], np.ndarray], x0, cfg: ToleranceConfig = DEFAULT_TOL,
                  jac: Callable[[np.ndarray], np.ndarray] | None = None,
                  max_halvings: int = 30, stall_tol: float | None = None) -> np.ndarray:
    """Damped Newton iteration until ``max|F(x)| <= cfg.abs_tol``.

    The step is halved (at most ``max_halvings`` times) until the residual
    norm decreases.  Without ``jac`` the Jacobian is formed by central
    differences with step ``sqrt(eps) * max(1, |x_i|)``.  If the line
    search stalls on the noise floor of ``F`` with the residual already
    below ``stall_tol``, the current iterate is returned.
    """
    x = np.array(np.atleast_1d(x0), dtype=float)
    fx = np.atleast_1d(np.asarray(F(x), dtype=float))
    norm = np.max(np.abs(fx))
    for _ in range(cfg.max_iter):
        if norm <= cfg.abs_tol:
            return x
        J = np.atleast_2d(jac(x)) if jac is not None else _fd_jacobian(F, x, fx)
        if not np.all(np.isfinite(J)):
            raise SingularJacobian("non-finite Jacobian")
        try:
            if np.linalg.cond(J) > 1e14:
                raise SingularJacobian(f"Jacobian condition number {np.linalg.cond(J):.2e}")
            dx = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        lam = 1.0
        # on the noise floor, a step that does not help is not worth chasing
        halvings = 2 if stall_tol is not None and norm <= stall_tol else max_halvings
        for _ in range(halvings + 1):
            x_new = x + lam * dx
            f_new = np.atleast_1d(np.asarray(F(x_new), dtype=float))
            n_new = np.max(np.abs(f_new))
            if np.isfinite(n_new) and n_new < norm:
                break
            lam *= 0.5
        else:
            if stall_tol is not None and norm <= stall_tol:
                return x
            raise MaxIterExceeded(f"line search failed at residual {norm:.3e}")
        x, fx, norm = x_new, f_new, n_new
    if norm <= cfg.abs_tol or (stall_tol is not None and norm <= stall_tol):
        return x
    raise MaxIterExceeded(f"Newton did not converge, residual {norm:.3e}")


# --------------------------------------------------------------------------
# adaptive Gauss-Kronrod (7/15) quadrature

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]


_MAX_ACTIVE = 2000


def _call_vectorised(f, x):
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([float(f(xi)) for xi in x.ravel()]).reshape(x.shape)


def _gk_finite(g, a, b, cfg, max_depth):
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    width = b - a
    total = 0.0
    total_err = 0.0
    est = None
    for depth in range(max_depth + 1):
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        x = c[:, None] + h[:, None] * _NODES[None, :]
        y = _call_vectorised(g, x)
        if not np.all(np.isfinite(y)):
            raise NonConvergent("integrand is not finite at a quadrature node")
        k15 = h * (y @ _WK)
        g7 = h * (y @ _WG15)
        err = np.abs(k15 - g7)
        if est is None:
            # tolerance is relative to the integral of |f|, so integrals that
            # cancel to zero still terminate
            est = float((h * (np.abs(y) @ _WK)).sum())
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(est))
        ok = err <= tol * (hi - lo) / width
        # intervals that cannot be split further in floating point are accepted
        ok |= (hi - lo) <= 64 * EPS * np.maximum(np.abs(lo), np.abs(hi))
        total += float(k15[ok].sum())
        total_err += float(err[ok].sum())
        if ok.all():
            return total, total_err
        lo, hi, c = lo[~ok], hi[~ok], c[~ok]
        if lo.size > _MAX_ACTIVE:
            raise NonConvergent("adaptive quadrature needs too many subintervals")
        lo, hi = np.concatenate([lo, c]), np.concatenate([c, hi])
    raise NonConvergent(f"adaptive quadrature exceeded depth {max_depth}")


def quad_adaptive(f: Callable, a: float, b: float, cfg: ToleranceConfig = DEFAULT_TOL,
                  max_depth: int = 50, return_error: bool = False):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    ``f`` should accept numpy arrays (scalar callables are looped over).
    Infinite limits are handled by the rational map ``x = a + s/(1-s)``
    rather than by truncation.
    """
    if a == b:
        return (0.0, 0.0) if return_error else 0.0
    if a > b:
        val, err = quad_adaptive(f, b, a, cfg, max_depth, True)
        return (-val, err) if return_error else -val
    a_inf, b_inf = np.isinf(a), np.isinf(b)
    if a_inf and b_inf:
        v1, e1 = quad_adaptive(f, -np.inf, 0.0, cfg, max_depth, True)
        v2, e2 = quad_adaptive(f, 0.0, np.inf, cfg, max_depth, True)
        val, err = v1 + v2, e1 + e2
    elif b_inf:
        def g(s):
            return _call_vectorised(f, a + s / (1 - s)) / (1 - s) ** 2
        val, err = _gk_finite(g, 0.0, 1.0, cfg, max_depth)
    elif a_inf:
        def g(s):
            return _call_vectorised(f, b - s / (1 - s)) / (1 - s) ** 2
        val, err = _gk_finite(g, 0.0, 1.0, cfg, max_depth)
    else:
        val, err = _gk_finite(lambda x: _call_vectorised(f, x), float(a), float(b), cfg, max_depth)
    return (val, err) if return_error else val


# --------------------------------------------------------------------------
# Gauss rules absorbing inverse-square-root endpoint weights


@lru_cache(maxsize=64)
def _reference_rule(kind: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    if kind == "chebyshev_both":
        j = np.arange(1, n + 1)
        x = np.cos((2 * j - 1) * np.pi / (2 * n))[::-1].copy()
        w = np.full(n, np.pi / n)
    elif kind == "chebyshev_sqrt_right":
        x, w = special.roots_jacobi(n, -0.5, 0.0)
    elif kind == "chebyshev_sqrt_left":
        x, w = special.roots_jacobi(n, 0.0, -0.5)
    else:
        raise InvalidRule(f"rule kind {kind!r} carries no singular weight")
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def reference_rule(kind: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[-1, 1]`` for the weight named by ``kind``.

    ``chebyshev_sqrt_right`` -> ``1/sqrt(1-x)``, ``chebyshev_sqrt_left`` ->
    ``1/sqrt(1+x)``, ``chebyshev_both`` -> ``1/sqrt(1-x^2)``.
    """
    return _reference_rule(kind, int(n))


def _mapped_rule(kind, n, a, b):
    x, w = reference_rule(kind, n)
    half = 0.5 * (b - a)
    nodes = a + half * (1 + x)
    if kind == "chebyshev_both":
        scale = 1.0
    else:
        scale = np.sqrt(half)
    return nodes, w * scale


def quad_sqrt_singular(f: Callable, a: float, b: float, rule: QuadratureRule,
                       cfg: ToleranceConfig | None = None, max_nodes: int = 3200) -> float:
    """Integrate ``f`` against the endpoint weight selected by ``rule.kind``.

    With ``cfg`` given the node count starts at ``rule.nodes`` and doubles
    until two successive results agree to ``cfg.rel_tol`` (or ``abs_tol``),
    capped at ``max_nodes``.  Without it the rule is applied once.
    """
    if rule.kind not in _SINGULAR_KINDS:
        raise InvalidRule(f"rule {rule.kind!r} does not absorb a square-root weight")
    if not b > a:
        raise DomainError("quad_sqrt_singular needs a < b")

    def apply(n):
        nodes, w = _mapped_rule(rule.kind, n, a, b)
        return float(_call_vectorised(f, nodes) @ w)

    n = rule.nodes
    value = apply(n)
    if cfg is None:
        return value
    while True:
        if 2 * n > max_nodes:
            raise NonConvergent(f"node doubling did not converge by {max_nodes} nodes")
        n *= 2
        new = apply(n)
        if abs(new - value) <= max(cfg.abs_tol, cfg.rel_tol * abs(new)):
            return new
        value = new


# --------------------------------------------------------------------------
# differentiation


def derivative_richardson(f: Callable[[float], float], x: float, h0: float,
                          order: int = 1, levels: int = 4) -> tuple[float, float]:
    """Central difference of order 1 or 2, Richardson-extrapolated.

    Returns ``(estimate, error_indicator)``; the indicator is the change
    between the last two diagonal extrapolants, floored at the rounding
    level of the differences.
    """
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    if levels < 3:
        raise DomainError("at least three step halvings are required")
    table = []
    fmax = abs(f(x)) if order == 2 else 0.0
    fx = f(x) if order == 2 else 0.0
    h = h0
    for _ in range(levels):
        fp, fm = f(x + h), f(x - h)
        fmax = max(fmax, abs(fp), abs(fm))
        if order == 1:
            table.append([(fp - fm) / (2 * h)])
        else:
            table.append([(fp - 2 * fx + fm) / h**2])
        h *= 0.5
    for i in range(1, levels):
        for k in range(1, i + 1):
            prev = table[i][k - 1]
            table[i].append(prev + (prev - table[i - 1][k - 1]) / (4**k - 1))
    diag = [table[i][i] for i in range(levels)]
    deltas = [abs(diag[i] - diag[i - 1]) for i in range(1, levels)]
    h_min = h0 / 2 ** (levels - 1)
    noise = 10 * EPS * max(fmax, 1e-300) / h_min**order
    if deltas[-1] > deltas[-2] and deltas[-1] > 1e3 * noise:
        raise NoiseDominated(
            f"extrapolants diverge ({deltas[-2]:.2e} -> {deltas[-1]:.2e}); reduce noise or h0")
    return float(diag[-1]), float(max(deltas[-1], noise))
