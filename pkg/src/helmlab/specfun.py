"""Cylinder and spherical Bessel/Hankel functions of integer order.

Real arguments only.  Orders 0 and 1 come from a power series (small x), a
Miller backward recurrence with Neumann-series Y (moderate x) or the Hankel
asymptotic expansion (large x).  Higher orders use a continued fraction for
J_n/J_{n-1} and upward recurrence for Y_n.  Logarithmic derivatives of the
Hankel functions are produced by a ratio recurrence that never forms H_n
itself, so large orders do not overflow.
"""
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

MAX_ORDER = 200


class DomainError(ValueError):
    """Argument or order outside the supported domain."""


@dataclass(frozen=True)
class BesselPair:
    """Values of J_n, Y_n and their derivatives at one argument."""

    j: float
    y: float
    jp: float
    yp: float

    def wronskian(self):
        return self.j * self.yp - self.jp * self.y


def _check_order(n):
    if int(n) != n or n < 0:
        raise DomainError(f"order must be a non-negative integer, got {n!r}")
    if n > MAX_ORDER:
        raise DomainError(f"order {n} exceeds the supported maximum {MAX_ORDER}")
    return int(n)


def _check_positive(x):
    x = float(x)
    if not np.isfinite(x) or x <= 0.0:
        raise DomainError(f"argument must be finite and > 0, got {x!r}")
    return x


def bessel_j(n, x):
    """J_n(x) for integer 0 <= n <= 200 and real x >= 0."""
    n = _check_order(n)
    x = float(x)
    if not np.isfinite(x) or x < 0.0:
        raise DomainError(f"argument must be finite and >= 0, got {x!r}")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    return float(kernels.jyn(n, np.array([x]))[0][0])


def bessel_y(n, x):
    """Y_n(x) for integer 0 <= n <= 200 and real x > 0 (may overflow to -inf)."""
    n = _check_order(n)
    x = _check_positive(x)
    return float(kernels.jyn(n, np.array([x]))[1][0])


def bessel_pair(n, x):
    """:class:`BesselPair` of J_n, Y_n, J_n', Y_n' at x > 0."""
    n = _check_order(n)
    x = _check_positive(x)
    j, y, jp, yp = (float(v[0]) for v in kernels.jyn(n, np.array([x])))
    return BesselPair(j, y, jp, yp)


def bessel_jy(n, x):
    """Vectorised J_n, Y_n, J_n', Y_n' on an array of positive arguments."""
    n = _check_order(n)
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("all arguments must be finite and > 0")
    return kernels.jyn(n, x)


def bessel_jy01(x):
    """Vectorised (J0, J1, Y0, Y1); the hot path for exact-solution evaluation."""
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError("all arguments must be finite and > 0")
    return kernels.jy01(x)


def hankel1_log_derivs(nmax, x):
    """Array of x H_n'(x)/H_n(x) for n = 0..nmax."""
    if nmax < 0 or int(nmax) != nmax:
        raise DomainError(f"nmax must be a non-negative integer, got {nmax!r}")
    x = _check_positive(x)
    return kernels.hankel1_ratio_logderiv(int(nmax), x)


def hankel1_log_deriv(n, x):
    """x H_n^{(1)'}(x) / H_n^{(1)}(x) with H^{(1)} = J + iY."""
    n = _check_order(n)
    return complex(hankel1_log_derivs(n, x)[n])


def sph_hankel1_log_derivs(lmax, x):
    """Array of x h_l'(x)/h_l(x) for l = 0..lmax."""
    if lmax < 0 or int(lmax) != lmax:
        raise DomainError(f"lmax must be a non-negative integer, got {lmax!r}")
    x = _check_positive(x)
    return kernels.sph_hankel1_ratio_logderiv(int(lmax), x)


def sph_hankel1_log_deriv(ell, x):
    """x h_l^{(1)'}(x) / h_l^{(1)}(x) for the spherical Hankel function."""
    ell = _check_order(ell)
    return complex(sph_hankel1_log_derivs(ell, x)[ell])
