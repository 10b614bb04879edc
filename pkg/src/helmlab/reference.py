"""Nodal Lagrange basis on the reference triangle.

Nodes are the warp-and-blend family (Gauss-Lobatto distribution along
every edge); the basis is obtained by inverting a Vandermonde matrix of a
collapsed-coordinate orthogonal (Dubiner) basis.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import BarycentricInterpolator
from scipy.special import eval_jacobi, roots_jacobi

MAX_DEGREE = 8

# blending parameters of the warp-and-blend construction, indexed by degree - 1
_ALPHA_OPT = (0.0, 0.0, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832,
              1.3648, 1.4773, 1.4959, 1.5743, 1.5770, 1.6223, 1.6258)

# local edge e joins local vertices EDGE_VERTS[e]
EDGE_VERTS = ((0, 1), (1, 2), (2, 0))


def gauss_lobatto(n):
    """n+1 Gauss-Lobatto-Legendre points on [-1, 1]."""
    if n == 1:
        return np.array([-1.0, 1.0])
    inner = roots_jacobi(n - 1, 1.0, 1.0)[0]
    return np.concatenate([[-1.0], np.sort(inner), [1.0]])


def _warp(n, r):
    req = np.linspace(-1.0, 1.0, n + 1)
    warp = BarycentricInterpolator(req, gauss_lobatto(n) - req)(r)
    inner = np.abs(r) < 1.0 - 1e-10
    sf = 1.0 - (inner * r) ** 2
    return np.where(inner, warp / np.where(inner, sf, 1.0), 0.0)


@lru_cache(maxsize=None)
def lattice_nodes(n):
    """Barycentric coordinates (npts, 3) of the degree-n warp-and-blend nodes."""
    if n == 0:
        return np.array([[1.0 / 3, 1.0 / 3, 1.0 / 3]])
    alpha = _ALPHA_OPT[n - 1] if n <= len(_ALPHA_OPT) else 5.0 / 3.0
    l1, l3 = [], []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            l1.append(i / n)
            l3.append(j / n)
    l1 = np.array(l1)
    l3 = np.array(l3)
    l2 = 1.0 - l1 - l3
    x = -l2 + l3
    y = (-l2 - l3 + 2.0 * l1) / np.sqrt(3.0)
    b1, b2, b3 = 4.0 * l2 * l3, 4.0 * l1 * l3, 4.0 * l1 * l2
    w1 = b1 * _warp(n, l3 - l2) * (1.0 + (alpha * l1) ** 2)
    w2 = b2 * _warp(n, l1 - l3) * (1.0 + (alpha * l2) ** 2)
    w3 = b3 * _warp(n, l2 - l1) * (1.0 + (alpha * l3) ** 2)
    x = x + w1 + np.cos(2 * np.pi / 3) * w2 + np.cos(4 * np.pi / 3) * w3
    y = y + np.sin(2 * np.pi / 3) * w2 + np.sin(4 * np.pi / 3) * w3
    # equilateral vertices: l2 -> (-1, -1/sqrt3), l3 -> (1, -1/sqrt3), l1 -> (0, 2/sqrt3)
    verts = np.array([[-1.0, 1.0, 0.0], [-1.0 / np.sqrt(3), -1.0 / np.sqrt(3), 2.0 / np.sqrt(3)]])
    mat = np.vstack([verts, np.ones(3)])
    bary = np.linalg.solve(mat, np.vstack([x, y, np.ones_like(x)])).T
    bary[np.abs(bary) < 1e-14] = 0.0
    # reference vertex 0 <- l2, vertex 1 <- l3, vertex 2 <- l1
    out = bary / bary.sum(axis=1, keepdims=True)
    out.setflags(write=False)
    return out


def _dubiner(n, x, y):
    """Orthogonal basis values and reference gradients at points (x, y)."""
    r = 2.0 * x - 1.0
    s = 2.0 * y - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(s - 1.0) > 1e-14, 2.0 * (1.0 + r) / (1.0 - s) - 1.0, -1.0)
    b = s
    vals, dxs, dys = [], [], []
    for i in range(n + 1):
        fa = eval_jacobi(i, 0, 0, a)
        dfa = 0.5 * (i + 1) * eval_jacobi(i - 1, 1, 1, a) if i > 0 else np.zeros_like(a)
        for j in range(n + 1 - i):
            gb = eval_jacobi(j, 2 * i + 1, 0, b)
            dgb = 0.5 * (j + 2 * i + 2) * eval_jacobi(j - 1, 2 * i + 2, 1, b) if j > 0 else np.zeros_like(b)
            half = 0.5 * (1.0 - b)
            scale = 2.0 ** (i + 0.5)
            vals.append(scale * fa * gb * half ** i)
            dr = dfa * gb
            ds = dfa * gb * 0.5 * (1.0 + a)
            if i > 0:
                dr = dr * half ** (i - 1)
                ds = ds * half ** (i - 1)
            tmp = dgb * half ** i
            if i > 0:
                tmp = tmp - 0.5 * i * gb * half ** (i - 1)
            ds = ds + fa * tmp
            # chain rule: r = 2x - 1, s = 2y - 1
            dxs.append(2.0 * scale * dr)
            dys.append(2.0 * scale * ds)
    return np.array(vals).T, np.array(dxs).T, np.array(dys).T


@dataclass(frozen=True)
class LagrangeBasis:
    """Degree-p nodal basis with node classification for dof numbering."""

    degree: int
    nodes: np.ndarray  # barycentric (nb, 3)
    vertex_nodes: tuple  # local node of each vertex
    edge_nodes: tuple  # per local edge, interior edge nodes ordered from EDGE_VERTS[e][0]
    interior_nodes: tuple
    _vinv: np.ndarray

    @property
    def size(self):
        return len(self.nodes)

    def eval(self, xy):
        """Values (npts, nb) and gradients (npts, nb, 2) at reference points xy."""
        xy = np.atleast_2d(xy)
        v, dx, dy = _dubiner(self.degree, xy[:, 0], xy[:, 1])
        phi = v @ self._vinv
        grad = np.stack([dx @ self._vinv, dy @ self._vinv], axis=-1)
        return phi, grad


@lru_cache(maxsize=None)
def lagrange_basis(p):
    if int(p) != p or not 1 <= p <= MAX_DEGREE:
        raise ValueError(f"polynomial degree {p!r} outside 1..{MAX_DEGREE}")
    p = int(p)
    nodes = lattice_nodes(p)
    vand, _, _ = _dubiner(p, nodes[:, 1], nodes[:, 2])
    vinv = np.linalg.inv(vand)
    tol = 1e-10
    vertex_nodes = tuple(int(np.argmax(nodes[:, i])) for i in range(3))
    edge_nodes = []
    for a, b in EDGE_VERTS:
        opp = 3 - a - b
        on = [i for i in range(len(nodes))
              if abs(nodes[i, opp]) < tol and nodes[i, a] < 1 - tol and nodes[i, b] < 1 - tol]
        on.sort(key=lambda i: nodes[i, b])
        edge_nodes.append(tuple(on))
    used = set(vertex_nodes).union(*edge_nodes)
    interior = tuple(i for i in range(len(nodes)) if i not in used)
    return LagrangeBasis(p, nodes, vertex_nodes, tuple(edge_nodes), interior, vinv)
