"""Reference solutions on the unit disk with a refraction jump at r = r_if."""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .specfun import bessel_jy01, hankel1_log_deriv

RESONANCE_TOL = 1e-12
ON_CIRCLE_TOL = 1e-10


class NearResonance(ArithmeticError):
    pass


@dataclass(frozen=True)
class ExactSolution:
    """Pointwise evaluators plus the data (f, g) they induce.

    ``u(x, y)`` returns complex values, ``grad(x, y)`` an array with a
    trailing axis of length 2, ``f(x, y)`` the volume source and ``g(theta)``
    the boundary source on r = 1.  ``t`` selects the energy norm variant.
    """

    u: Callable
    grad: Callable
    f: Callable
    g: Callable
    t: float = 0.5
    metadata: dict = field(default_factory=dict)

    def surface_derivative_at(self, points):
        """(-y, x) . grad u at points (..., 2); no on-circle check (discrete boundary)."""
        points = np.asarray(points, dtype=float)
        gu = self.grad(points[..., 0], points[..., 1])
        return -points[..., 1] * gu[..., 0] + points[..., 0] * gu[..., 1]


def surface_derivative(grad, point):
    """Tangential derivative (-y, x) . grad at a point of the unit circle."""
    x, y = (float(v) for v in point)
    if abs(np.hypot(x, y) - 1.0) > ON_CIRCLE_TOL:
        raise ValueError(f"point ({x}, {y}) is not on the unit circle")
    gx, gy = grad
    return -y * gx + x * gy


def _jy0(x):
    """J0, Y0 and their derivatives -J1, -Y1 on positive arguments."""
    j0, j1, y0, y1 = bessel_jy01(x)
    return j0, y0, -j1, -y1


def disk_robin_exact(k, n1=1.0, n2=2.0, r_if=0.5, impedance=None):
    """Radial solution of -Lap u - k^2 n^2 u = 1 with du/dr - gamma u = 0 on r = 1.

    ``impedance`` defaults to gamma = ik.  Inside r < r_if
    u = c1 J0(k n1 r) - 1/(k n1)^2, outside u = c2 J0(k n2 r) + c3 Y0(k n2 r) - 1/(k n2)^2.
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    if not 0 < r_if < 1:
        raise ValueError("interface radius must lie in (0, 1)")
    n1, n2 = float(n1), float(n2)
    if n1 <= 0 or n2 <= 0:
        raise ValueError("refraction values must be real and positive")
    gamma = 1j * k if impedance is None else complex(impedance)
    a, b = k * n1, k * n2
    ja, _, dja, _ = (float(v[0]) for v in _jy0(np.array([a * r_if])))
    jb, yb, djb, dyb = (float(v[0]) for v in _jy0(np.array([b * r_if])))
    j1, y1, dj1, dy1 = (float(v[0]) for v in _jy0(np.array([b])))
    mat = np.array([
        [ja, -jb, -yb],
        [a * dja, -b * djb, -b * dyb],
        [0.0, b * dj1 - gamma * j1, b * dy1 - gamma * y1],
    ], dtype=complex)
    rhs = np.array([1.0 / a ** 2 - 1.0 / b ** 2, 0.0, -gamma / b ** 2], dtype=complex)
    scale = np.abs(mat).max(axis=1)
    mat /= scale[:, None]
    rhs /= scale
    det = np.linalg.det(mat)
    if abs(det) < RESONANCE_TOL:
        raise NearResonance(f"scaled determinant {abs(det):.3e} at k={k}")
    c1, c2, c3 = np.linalg.solve(mat, rhs)

    def radial(r):
        r = np.asarray(r, dtype=float)
        val = np.empty(r.shape, dtype=complex)
        dval_over_r = np.empty(r.shape, dtype=complex)
        inner = r <= r_if
        ri = r[inner]
        if ri.size:
            safe = np.maximum(ri, 1e-300)
            j0, j1, _, _ = bessel_jy01(a * safe)
            val[inner] = c1 * j0 - 1.0 / a ** 2
            # J1(ar)/r -> a/2 at the origin
            ratio = np.where(ri > 1e-8, j1 / safe, 0.5 * a)
            dval_over_r[inner] = -c1 * a * ratio
        ro = r[~inner]
        if ro.size:
            j0, y0, dj0, dy0 = _jy0(b * ro)
            val[~inner] = c2 * j0 + c3 * y0 - 1.0 / b ** 2
            dval_over_r[~inner] = b * (c2 * dj0 + c3 * dy0) / ro
        return val, dval_over_r

    def u(x, y):
        return radial(np.hypot(x, y))[0]

    def grad(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        _, dr = radial(np.hypot(x, y))
        return np.stack([dr * x, dr * y], axis=-1)

    def f(x, y):
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=complex)

    def g(theta):
        return np.zeros(np.shape(theta), dtype=complex)

    def du_dr(r):
        val, dr = radial(np.atleast_1d(r))
        return dr * np.atleast_1d(r)

    meta = {"k": float(k), "n1": n1, "n2": n2, "r_if": float(r_if), "gamma": gamma, "bc": "robin",
            "coefficients": (complex(c1), complex(c2), complex(c3)), "scaled_det": abs(det),
            "radial": lambda r: radial(np.atleast_1d(r))[0], "du_dr": du_dr}
    return ExactSolution(u, grad, f, g, 0.5, meta)


def disk_dtn_exact(k, n1=1.0, n2=2.0, r_if=0.5):
    """Radial solution with the exact exterior radiation condition.

    Only the zeroth circular mode is excited, so the DtN condition reduces to
    du/dr = z_0(k) u on r = 1 and any truncation L >= 0 reproduces it.
    """
    sol = disk_robin_exact(k, n1, n2, r_if, impedance=hankel1_log_deriv(0, k))
    sol.metadata["bc"] = "dtn"
    return sol


def abc2_manufactured(k, n1=1.0, n2=2.0, alpha=None, beta=None, r_if=0.5):
    """u = sin(k(x+y)) with data for du/dn - alpha Lap_Gamma u - beta u = g.

    The surface Laplacian is t^T H t - x . grad u with t = (-y, x), the second
    arc-length derivative on the unit circle.  On r = 1 the outer index n2
    applies.
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    if alpha is None or beta is None:
        from .boundary import abc2_params

        alpha, beta = abc2_params("feng", k)
    alpha, beta = complex(alpha), complex(beta)
    n1sq, n2sq = complex(n1) ** 2, complex(n2) ** 2

    def u(x, y):
        return np.sin(k * (np.asarray(x) + np.asarray(y))).astype(complex)

    def grad(x, y):
        c = k * np.cos(k * (np.asarray(x) + np.asarray(y)))
        return np.stack([c, c], axis=-1).astype(complex)

    def f(x, y, region=None):
        x, y = np.asarray(x, float), np.asarray(y, float)
        inner = np.hypot(x, y) <= r_if if region is None else np.asarray(region) == 0
        nsq = np.where(inner, n1sq, n2sq)
        return k * k * (2.0 - nsq) * np.sin(k * (x + y))

    # mesh regions beat the radius test near the discretised interface
    f.region_aware = True

    def surface_laplacian(x, y):
        s = np.sin(k * (x + y))
        c = np.cos(k * (x + y))
        return -k * k * s * (x - y) ** 2 - k * c * (x + y)

    def g(theta):
        x, y = np.cos(theta), np.sin(theta)
        dn = k * np.cos(k * (x + y)) * (x + y)
        return dn - alpha * surface_laplacian(x, y) - beta * np.sin(k * (x + y))

    meta = {"k": float(k), "n1": complex(n1), "n2": complex(n2), "alpha": alpha, "beta": beta,
            "bc": "abc2", "surface_laplacian": surface_laplacian}
    return ExactSolution(u, grad, f, g, 1.0, meta)
