"""Single-hump initial profiles, their inverse branches and catastrophe data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidProfile, NonGeneric
from .numerics import ToleranceConfig, find_root_bracketed

Array = np.ndarray
_INV_TOL = 1e-14  # noise floor of Newton steps near the minimum, where u0' is small


@dataclass(frozen=True)
class InitialDataModel:
    """A negative profile with one minimum ``u0(x_M) = -1``.

    The four callables must accept numpy arrays.  ``decay_exponent`` is the
    power ``p > 3`` in ``u0(x) = O(|x|^-p)``; exponentially decaying profiles
    may use ``math.inf``.
    """

    u0: Callable[[Array], Array]
    u0_prime: Callable[[Array], Array]
    u0_second: Callable[[Array], Array]
    u0_third: Callable[[Array], Array]
    x_M: float = 0.0
    u_min: float = -1.0
    decay_exponent: float = math.inf
    name: str = "custom"
    # x-scale of the tails, used to seed brackets for the inverse branches
    scale: float = field(default=1.0, repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    # -- inverse branches -------------------------------------------------
    def f_L(self, y):
        """Inverse of the decreasing part (``x <= x_M``)."""
        return _scalar_or_array(self._invert(y, -1.0), y)

    def f_R(self, y):
        """Inverse of the increasing part (``x >= x_M``)."""
        return _scalar_or_array(self._invert(y, +1.0), y)

    def f_L_derivs(self, y, order: int = 1):
        """``f_L'(y)`` .. ``f_L^(order)(y)`` by the inverse-function rule."""
        x = self._invert(y, -1.0)
        return tuple(_scalar_or_array(d, y) for d in _inverse_derivs(self, x, order))

    def f_R_derivs(self, y, order: int = 1):
        x = self._invert(y, +1.0)
        return tuple(_scalar_or_array(d, y) for d in _inverse_derivs(self, x, order))

    def f_L_prime(self, y):
        return self.f_L_derivs(y, 1)[0]

    def f_R_prime(self, y):
        return self.f_R_derivs(y, 1)[0]

    def _invert(self, y, side: float) -> Array:
        y = np.asarray(y, dtype=float)
        if np.any(y < -1.0) or np.any(y >= 0.0):
            raise DomainError("inverse branches are defined for -1 <= y < 0")
        return _invert_branch(self, y, side)


def _scalar_or_array(v, like):
    return float(v) if np.ndim(like) == 0 else v


def _inverse_derivs(model, x, order):
    d1 = model.u0_prime(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = [1.0 / d1]
        if order >= 2:
            d2 = model.u0_second(x)
            out.append(-d2 / d1**3)
        if order >= 3:
            d3 = model.u0_third(x)
            out.append((3.0 * d2**2 - d1 * d3) / d1**5)
    return out


_TABLE_SIZE = 4097


def _branch_table(model: InitialDataModel, side: float):
    """Monotone sample ``(x, u0(x))`` of one branch, cached on the model.

    Points are spaced like ``x_M + side * W * s**2`` so that the square-root
    behaviour of the inverse near the minimum is resolved.
    """
    key = ("table", side)
    cache = model._cache
    if key not in cache:
        xM = model.x_M
        W = 2.0 * model.scale
        for _ in range(200):
            if float(model.u0(np.array(xM + side * W))) > -1e-14:
                break
            W *= 1.5
        s = np.linspace(0.0, 1.0, _TABLE_SIZE)
        xs = xM + side * W * s * s
        us = model.u0(xs)
        # enforce strict monotonicity for interpolation (tails may flatten)
        keep = np.concatenate([[True], np.diff(us) > 0])
        cache[key] = (xs[keep], us[keep])
    return cache[key]


def _invert_branch(model: InitialDataModel, y: Array, side: float) -> Array:
    """Solve ``u0(x) = y`` on one monotone branch by safeguarded Newton.

    A cached table of the branch supplies, for each target, a bracket and
    an interpolated seed; Newton steps that would leave the bracket are
    replaced by bisection.  Targets beyond the table's reach get a bracket
    by marching outward.
    """
    shape = y.shape
    y = y.ravel().copy()
    out = np.full(y.shape, model.x_M)
    active = y > model.u_min
    if not active.any():
        return out.reshape(shape)
    ya = y[active]
    xM = model.x_M
    xs, us = _branch_table(model, side)
    j = np.clip(np.searchsorted(us, ya), 1, us.size - 1)
    lo = xs[j - 1].copy()   # u0 - y <= 0 here
    hi = xs[j].copy()       # u0 - y >= 0 here, unless beyond the table
    beyond = ya > us[-1]
    if beyond.any():
        far = hi[beyond]
        for _ in range(200):
            short = model.u0(far) < ya[beyond]
            if not short.any():
                break
            far[short] = xM + 2.0 * (far[short] - xM)
        else:
            raise DomainError("could not bracket the inverse branch")
        lo[beyond] = xs[-1]
        hi[beyond] = far
    w = np.clip((ya - us[j - 1]) / np.where(us[j] > us[j - 1], us[j] - us[j - 1], 1.0), 0.0, 1.0)
    x = lo + w * (hi - lo)
    for _ in range(100):
        r = model.u0(x) - ya
        neg = r < 0
        lo = np.where(neg, x, lo)
        hi = np.where(neg, hi, x)
        d = model.u0_prime(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - r / d
        inside = np.isfinite(xn) & ((xn - lo) * (xn - hi) <= 0)
        xn = np.where(inside, xn, 0.5 * (lo + hi))
        step = np.abs(xn - x)
        x = xn
        if np.all(step <= _INV_TOL * np.maximum(1.0, np.abs(x))):
            break
    out[active] = x
    return out.reshape(shape)


# ----------------------------------------------------------------------------
# built-in and user profiles


def make_sech2_profile() -> InitialDataModel:
    """u0(x) = -sech^2(x)."""

    def sech2(x):
        # cosh overflows past |x| ~ 710; sech^2 underflows well before that
        return 1.0 / np.cosh(np.minimum(np.abs(x), 350.0)) ** 2

    def u0(x):
        return -sech2(x)

    def u0p(x):
        return 2.0 * np.tanh(x) * sech2(x)

    def u0pp(x):
        t = np.tanh(x)
        return 2.0 * (1.0 - 3.0 * t * t) * sech2(x)

    def u0ppp(x):
        t = np.tanh(x)
        return 8.0 * t * (3.0 * t * t - 2.0) * sech2(x)

    return InitialDataModel(u0=u0, u0_prime=u0p, u0_second=u0pp, u0_third=u0ppp,
                            x_M=0.0, u_min=-1.0, decay_exponent=math.inf, name="sech2")


def check_profile(model: InitialDataModel, half_width: float = 30.0, n: int = 4001) -> dict:
    """Sample-based check of the single-hump invariants; raises InvalidProfile."""
    xM = model.x_M
    problems = []
    uM = float(model.u0(np.array(xM)))
    if abs(uM - model.u_min) > 1e-12 or abs(model.u_min + 1.0) > 1e-12:
        problems.append(f"u0(x_M) = {uM}, expected -1")
    if abs(float(model.u0_prime(np.array(xM)))) > 1e-10:
        problems.append("u0'(x_M) != 0")
    if float(model.u0_second(np.array(xM))) <= 0:
        problems.append("u0''(x_M) must be positive")
    left = np.linspace(xM - half_width, xM, n)[:-1]
    right = np.linspace(xM, xM + half_width, n)[1:]
    ul, ur = model.u0(left), model.u0(right)
    if np.any(ul >= 0) or np.any(ur >= 0):
        problems.append("u0 must be negative")
    if np.any(np.diff(ul) >= 0):
        problems.append("u0 not strictly decreasing left of x_M")
    if np.any(np.diff(ur) <= 0):
        problems.append("u0 not strictly increasing right of x_M")
    if not model.decay_exponent > 3:
        problems.append("decay exponent must exceed 3")
    if problems:
        raise InvalidProfile("; ".join(problems))
    return {"ok": True, "u_at_minimum": uM}


def load_profile_file(path: str) -> InitialDataModel:
    """Build a profile from a ``key = expression`` file.

    Required keys: ``u0``, ``u0_prime``, ``u0_second``, ``u0_third`` (numpy
    expressions in ``x``).  Optional: ``x_M``, ``decay_exponent``, ``name``.
    """
    entries = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InvalidProfile(f"malformed line: {raw.rstrip()}")
            entries[key.strip()] = value.strip()
    missing = {"u0", "u0_prime", "u0_second", "u0_third"} - entries.keys()
    if missing:
        raise InvalidProfile(f"profile file lacks {sorted(missing)}")
    namespace = {name: getattr(np, name) for name in (
        "sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "pi", "abs", "arctan")}

    def compile_expr(src):
        code = compile(src, path, "eval")
        return lambda x: eval(code, {"__builtins__": {}}, {**namespace, "x": np.asarray(x, float)})

    model = InitialDataModel(
        u0=compile_expr(entries["u0"]),
        u0_prime=compile_expr(entries["u0_prime"]),
        u0_second=compile_expr(entries["u0_second"]),
        u0_third=compile_expr(entries["u0_third"]),
        x_M=float(entries.get("x_M", 0.0)),
        decay_exponent=float(entries.get("decay_exponent", math.inf)),
        name=entries.get("name", "custom"),
    )
    check_profile(model)
    return model


# ----------------------------------------------------------------------------
# gradient catastrophe


@dataclass(frozen=True)
class CatastrophePoint:
    t_c: float
    xi_c: float
    u_c: float
    x_c: float
    fL_third_at_uc: float
    generic: bool = True


def catastrophe(model: InitialDataModel, search_width: float = 40.0) -> CatastrophePoint:
    """Breaking time and point of the Hopf solution.

    The steepest point of the decreasing branch is located on a grid and
    refined as a root of u0''.
    """
    xM = model.x_M
    grid = np.linspace(xM - search_width * model.scale, xM, 40001)
    slope = -model.u0_prime(grid)
    i = int(np.argmax(slope))
    i = min(max(i, 1), grid.size - 2)
    a, b = grid[i - 1], grid[i + 1]
    cfg = ToleranceConfig(abs_tol=1e-15, rel_tol=1e-15)

    def second(x):
        return float(model.u0_second(np.array(x)))

    if second(a) * second(b) <= 0:
        xi_c = find_root_bracketed(second, a, b, cfg)
    else:
        xi_c = float(grid[i])
    max_slope = -6.0 * float(model.u0_prime(np.array(xi_c)))
    t_c = 1.0 / max_slope
    u_c = float(model.u0(np.array(xi_c)))
    x_c = xi_c + 6.0 * u_c * t_c
    d1 = float(model.u0_prime(np.array(xi_c)))
    d2 = float(model.u0_second(np.array(xi_c)))
    d3 = float(model.u0_third(np.array(xi_c)))
    f3 = (3.0 * d2**2 - d1 * d3) / d1**5
    if abs(f3) <= 1e-8:
        raise NonGeneric(f"f_L'''(u_c) = {f3:.3e} vanishes; the catastrophe is not generic")
    return CatastrophePoint(t_c=t_c, xi_c=xi_c, u_c=u_c, x_c=x_c, fL_third_at_uc=f3, generic=True)
