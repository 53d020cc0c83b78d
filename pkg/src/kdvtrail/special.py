"""Complete elliptic integrals, Jacobi dn, the theta series and h_k.

Everything here uses the *modulus* ``s`` (not the parameter ``m = s**2``).
Where ``s`` is close to one, callers that know the complementary modulus
``sqrt(1 - s**2)`` more accurately than ``s`` itself may pass it as ``sc``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFloor, DomainError

_AGM_TOL = 1e-16
THETA_IM_FLOOR = 0.05


@dataclass(frozen=True)
class EllipticPair:
    K: float
    E: float
    s: float


def _complement(s, sc):
    if sc is None:
        return math.sqrt((1.0 - s) * (1.0 + s))
    return float(sc)


def _agm_sequence(s, sc):
    """Arithmetic-geometric mean table ``(a_n, b_n, c_n)`` starting at (1, sc, s)."""
    a, b, c = [1.0], [sc], [s]
    while abs(c[-1]) > _AGM_TOL * a[-1] and len(a) < 40:
        an, bn = a[-1], b[-1]
        a.append(0.5 * (an + bn))
        b.append(math.sqrt(an * bn))
        c.append(0.5 * (an - bn))
    return a, b, c


def elliptic_KE(s: float, sc: float | None = None) -> EllipticPair:
    """Complete elliptic integrals K(s), E(s) by the AGM.

    >>> round(elliptic_KE(0.0).K, 12) == round(math.pi / 2, 12)
    True
    """
    s = float(s)
    if not (0.0 <= s < 1.0) or (sc is not None and not 0.0 < sc <= 1.0):
        raise DomainError(f"modulus must lie in [0, 1), got {s}")
    sc = _complement(s, sc)
    a, _, c = _agm_sequence(s, sc)
    K = math.pi / (2.0 * a[-1])
    acc = 0.0
    for n, cn in enumerate(c):
        acc += 2.0 ** (n - 1) * cn * cn
    E = K * (1.0 - acc)
    return EllipticPair(K=K, E=E, s=s)


def elliptic_deficit(s: float, sc: float | None = None) -> tuple[float, float]:
    """``(K, 1 - E/K)`` with the deficit summed directly from the AGM table.

    Forming ``1 - E/K`` by subtraction loses all precision as ``s -> 0``.
    """
    s = float(s)
    if not (0.0 <= s < 1.0):
        raise DomainError(f"modulus must lie in [0, 1), got {s}")
    a, _, c = _agm_sequence(s, _complement(s, sc))
    return math.pi / (2.0 * a[-1]), sum(2.0 ** (n - 1) * cn * cn for n, cn in enumerate(c))


def jacobi_dn(w, s: float, sc: float | None = None):
    """Jacobi dn(w; s) by the descending Landen (Gauss) transformation.

    Accepts scalar or array ``w``.  At ``s == 1`` the exact limit sech(w)
    is returned.
    """
    w_arr = np.asarray(w, dtype=float)
    if not (0.0 <= s <= 1.0):
        raise DomainError(f"modulus must lie in [0, 1], got {s}")
    if s == 1.0 and sc is None or sc == 0.0:
        out = 1.0 / np.cosh(w_arr)
        return out if out.ndim else float(out)
    if s == 0.0:
        out = np.ones_like(w_arr)
        return out if out.ndim else float(out)
    sc = _complement(s, sc)
    a, _, c = _agm_sequence(s, sc)
    K = math.pi / (2.0 * a[-1])
    # fold into [0, K/2]: dn is even with period 2K, and dn(K - w) = s'/dn(w);
    # the Landen recursion below is 0/0 at w = K otherwise
    wr = np.abs(w_arr - 2.0 * K * np.round(w_arr / (2.0 * K)))
    upper = wr > 0.5 * K
    wr = np.where(upper, K - wr, wr)
    out = _dn_landen(wr, a, c)
    out = np.where(upper, sc / out, out)
    return out if out.ndim else float(out)


def _dn_landen(w, a, c):
    N = len(a) - 1
    if N == 0:
        return np.ones_like(w)
    phi = (2.0**N) * a[N] * w
    phi_next = phi
    for n in range(N, 0, -1):
        phi_next = phi
        phi = 0.5 * (phi + np.arcsin(np.clip(c[n] / a[n] * np.sin(phi), -1.0, 1.0)))
    return np.cos(phi) / np.cos(phi_next - phi)


def _theta_imag(T) -> float:
    T = complex(T) if not isinstance(T, (int, float)) else complex(0.0, T)
    if abs(T.real) > 1e-14:
        raise DomainError("only purely imaginary T is supported")
    return T.imag


def theta3(z, T):
    """Theta series sum_n exp(pi i n^2 T + 2 pi i n z) for purely imaginary T.

    ``T`` may be given as a complex number or as its (positive) imaginary
    part.  Returns ``(theta, d theta/dz, d^2 theta/dz^2)``; terms are summed
    until their magnitude, derivative factors included, drops below 1e-16.
    """
    tau = _theta_imag(T)
    if tau < THETA_IM_FLOOR:
        raise ConvergenceFloor(f"Im T = {tau:.3g} is below the series floor {THETA_IM_FLOOR}")
    z = np.asarray(z, dtype=float)
    th = np.ones_like(z)
    d1 = np.zeros_like(z)
    d2 = np.zeros_like(z)
    n = 1
    while True:
        qn = math.exp(-math.pi * n * n * tau)
        k = 2.0 * math.pi * n
        if qn * max(1.0, k * k) < 1e-16 * 0.5:
            break
        arg = k * z
        cs, sn = np.cos(arg), np.sin(arg)
        th = th + 2.0 * qn * cs
        d1 = d1 - 2.0 * qn * k * sn
        d2 = d2 - 2.0 * qn * k * k * cs
        n += 1
    if z.ndim == 0:
        return float(th), float(d1), float(d2)
    return th, d1, d2


def log_theta_second(z, T):
    """Second z-derivative of ln theta3(z; T)."""
    th, d1, d2 = theta3(z, T)
    return d2 / th - (d1 / th) ** 2


def hermite_norm(k: int) -> tuple[float, float]:
    """Leading coefficient h_k = 2^(k/2) / (pi^(1/4) sqrt(k!)) and its log.

    Evaluated in log space so large ``k`` neither overflows nor underflows
    prematurely.
    """
    if k < 0 or int(k) != k:
        raise DomainError("k must be a non-negative integer")
    if k > 500:
        raise DomainError("k above 500 is outside the supported range")
    k = int(k)
    log_h = 0.5 * k * math.log(2.0) - 0.25 * math.log(math.pi) - 0.5 * math.lgamma(k + 1)
    return math.exp(log_h), log_h
