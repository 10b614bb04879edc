"""Quadrature on the reference triangle and the unit interval."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_ORDER = 25


@dataclass(frozen=True)
class QuadratureRule:
    """Positive-weight rule on the reference triangle (0,0), (1,0), (0,1).

    ``points`` holds barycentric coordinates (l0, l1, l2) with l1 = x, l2 = y.
    """

    points: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def xy(self):
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def quadrature_triangle(order):
    """Collapsed Gauss rule exact for polynomials of total degree ``order``."""
    if int(order) != order or not 1 <= order <= MAX_ORDER:
        raise ValueError(f"unsupported quadrature order {order!r} (1..{MAX_ORDER})")
    n = (int(order) + 2) // 2
    tu, wu = np.polynomial.legendre.leggauss(n)
    tv, wv = roots_jacobi(n, 1.0, 0.0)
    u = 0.5 * (tu + 1.0)
    v = 0.5 * (tv + 1.0)
    wu = 0.5 * wu
    wv = 0.25 * wv
    uu, vv = np.meshgrid(u, v, indexing="ij")
    x = (uu * (1.0 - vv)).ravel()
    y = vv.ravel()
    w = np.outer(wu, wv).ravel()
    pts = np.column_stack([1.0 - x - y, x, y])
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(pts, w, int(order))


@lru_cache(maxsize=None)
def gauss_interval(order):
    """Gauss-Legendre rule on [0, 1] exact to degree ``order``; returns (t, w)."""
    n = max(1, (int(order) + 2) // 2)
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w
