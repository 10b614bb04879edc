"""H^1-conforming Lagrange spaces, Helmholtz assembly and error norms.

The discrete sesquilinear form is

    b(u, v) = (grad u, grad v) - k^2 (n^2 u, v) - <boundary term>

with matrix entries A[i, j] = b(phi_j, phi_i) and load F[i] = (f, phi_i) + <g, phi_i>.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps

from . import boundary
from ._backend import kernels
from .linsolve import ComplexSparseMatrix, solve_sparse
from .mesh import ANNULUS, INNER, Mesh
from .quadrature import gauss_interval, quadrature_triangle
from .reference import EDGE_VERTS, lagrange_basis

_CHUNK = 4096
_REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class MeshMismatch(ValueError):
    pass


@dataclass(eq=False)
class FeSpace:
    """Continuous piecewise mapped polynomials of degree ``p`` on ``mesh``."""

    mesh: Mesh
    p: int
    dof_map: np.ndarray
    n_dof: int
    boundary_dofs: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def basis(self):
        return lagrange_basis(self.p)

    def quadrature(self):
        return quadrature_triangle(min(2 * self.p + 3, 25))

    def dof_coordinates(self):
        """Physical position of every nodal degree of freedom."""
        if "coords" not in self._cache:
            pts, _, _ = self.mesh.geometric_map(self.basis.nodes[:, 1:])
            coords = np.empty((self.n_dof, 2))
            coords[self.dof_map.ravel()] = pts.reshape(-1, 2)
            self._cache["coords"] = coords
        return self._cache["coords"]

    def boundary_trace(self, order=None):
        """Quadrature data on r = 1.

        Returns a dict with per-point arrays ``points`` (nb_q, 2), ``theta``,
        ``ds`` (quadrature weight times arc-length element), ``phi`` (nb_q, nb),
        ``dphi_s`` (tangential derivatives (-y, x) . grad phi) and ``dofs``
        (nb_q, nb) global indices of the supporting element.
        """
        order = order or 2 * self.p + 3
        key = ("trace", order)
        if key not in self._cache:
            self._cache[key] = _boundary_trace(self, order)
        return self._cache[key]


def build_space(mesh, p):
    """Lagrange space of degree ``p`` with globally consistent edge orientation."""
    basis = lagrange_basis(p)  # validates p
    p = basis.degree
    nv = mesh.n_vert
    edges, tri_edges = mesh.edges
    ne = len(edges)
    nt = mesh.n_tri
    per_edge = p - 1
    per_int = (p - 1) * (p - 2) // 2
    dof_map = np.empty((nt, basis.size), dtype=np.int64)
    for lv, node in enumerate(basis.vertex_nodes):
        dof_map[:, node] = mesh.triangles[:, lv]
    if per_edge:
        for le, (a, b) in enumerate(EDGE_VERTS):
            gid = tri_edges[:, le]
            forward = mesh.triangles[:, a] < mesh.triangles[:, b]
            for kpos, node in enumerate(basis.edge_nodes[le]):
                pos = np.where(forward, kpos, per_edge - 1 - kpos)
                dof_map[:, node] = nv + gid * per_edge + pos
    if per_int:
        base = nv + ne * per_edge
        for kpos, node in enumerate(basis.interior_nodes):
            dof_map[:, node] = base + np.arange(nt) * per_int + kpos
    n_dof = nv + ne * per_edge + nt * per_int
    bnd = mesh.boundary_edges()
    local = []
    for elem, le in bnd:
        a, b = EDGE_VERTS[le]
        nodes = [basis.vertex_nodes[a], *basis.edge_nodes[le], basis.vertex_nodes[b]]
        local.extend(dof_map[elem, nodes])
    boundary_dofs = np.unique(np.array(local, dtype=np.int64))
    dof_map.setflags(write=False)
    return FeSpace(mesh, p, dof_map, int(n_dof), boundary_dofs)


@dataclass
class HelmholtzProblem:
    """-div grad u - k^2 n^2 u = f in the disk, boundary operator ``bc`` on r = 1.

    ``rhs_volume(x, y)`` and ``rhs_boundary(theta)`` act on arrays; ``None``
    means zero data.
    """

    k: float
    n_inner: complex
    n_outer: complex
    bc: object
    rhs_volume: Optional[Callable] = None
    rhs_boundary: Optional[Callable] = None
    mesh: Optional[Mesh] = None  # when set, must be the mesh of the space

    def __post_init__(self):
        if not self.k >= 0.5:
            raise ValueError(f"wavenumber must satisfy k >= 0.5, got {self.k}")
        for n in (self.n_inner, self.n_outer):
            if not 0 < abs(n) < 100:
                raise ValueError(f"refraction index magnitude must lie in (0, 100), got {n}")

    def n_squared(self, region):
        return np.where(region == INNER, complex(self.n_inner) ** 2, complex(self.n_outer) ** 2)


def _ref_edge_points(le, t):
    a, b = EDGE_VERTS[le]
    return (1.0 - t)[:, None] * _REF_VERTS[a] + t[:, None] * _REF_VERTS[b], _REF_VERTS[b] - _REF_VERTS[a]


def _physical_gradients(jac, dref):
    """J^{-T} applied to reference gradients; jac (..., 2, 2), dref (..., nb, 2)."""
    a, b = jac[..., 0, 0], jac[..., 0, 1]
    c, d = jac[..., 1, 0], jac[..., 1, 1]
    det = a * d - b * c
    gx = (d[..., None] * dref[..., 0] - c[..., None] * dref[..., 1]) / det[..., None]
    gy = (-b[..., None] * dref[..., 0] + a[..., None] * dref[..., 1]) / det[..., None]
    return np.stack([gx, gy], axis=-1)


def _boundary_trace(space, order):
    mesh = space.mesh
    t, w = gauss_interval(order)
    rows = mesh.boundary_edges()
    out = {k: [] for k in ("points", "theta", "ds", "phi", "dphi_s", "dofs")}
    for le in range(3):
        elems = rows[rows[:, 1] == le, 0]
        if len(elems) == 0:
            continue
        ref, tangent = _ref_edge_points(le, t)
        phi, dref = space.basis.eval(ref)
        pts, jac, _ = mesh.geometric_map(ref, elems)
        speed = np.linalg.norm(jac @ tangent, axis=-1)  # (ne, nq)
        grads = _physical_gradients(jac, dref[None])
        rot = np.stack([-pts[..., 1], pts[..., 0]], axis=-1)
        dphi_s = np.einsum("eqd,eqbd->eqb", rot, grads)
        out["points"].append(pts.reshape(-1, 2))
        out["theta"].append(np.arctan2(pts[..., 1], pts[..., 0]).ravel())
        out["ds"].append((speed * w[None, :]).ravel())
        out["phi"].append(np.broadcast_to(phi, (len(elems),) + phi.shape).reshape(-1, phi.shape[1]))
        out["dphi_s"].append(dphi_s.reshape(-1, phi.shape[1]))
        out["dofs"].append(np.repeat(space.dof_map[elems], len(t), axis=0))
    return {k: np.concatenate(v) for k, v in out.items()}


def _scatter(space, local, elems=None):
    dm = space.dof_map if elems is None else space.dof_map[elems]
    nb = dm.shape[1]
    rows = np.repeat(dm, nb, axis=1).ravel()
    cols = np.tile(dm, (1, nb)).ravel()
    return sps.coo_matrix((local.ravel(), (rows, cols)), shape=(space.n_dof, space.n_dof)).tocsr()


def volume_matrices(space):
    """Global stiffness K and unweighted mass M, plus per-region mass blocks.

    Returns (K, M_inner, M_annulus) as real CSR matrices; the weighted mass is
    n_inner^2 M_inner + n_outer^2 M_annulus.
    """
    if "volume" in space._cache:
        return space._cache["volume"]
    q = space.quadrature()
    phi, dphi = space.basis.eval(q.xy)
    mesh = space.mesh
    ks, ms = [], []
    for lo in range(0, mesh.n_tri, _CHUNK):
        sel = np.arange(lo, min(lo + _CHUNK, mesh.n_tri))
        _, jac, det = mesh.geometric_map(q.xy, sel)
        if np.any(det <= 0):
            raise ValueError("non-positive Jacobian determinant in the geometric map")
        k_e, m_e = kernels.element_matrices(dphi, phi, q.weights, jac)
        ks.append(k_e)
        ms.append(m_e)
    k_all = np.concatenate(ks)
    m_all = np.concatenate(ms)
    stiff = _scatter(space, k_all)
    inner = mesh.region == INNER
    m_in = _scatter(space, m_all[inner], np.flatnonzero(inner))
    m_out = _scatter(space, m_all[~inner], np.flatnonzero(~inner))
    space._cache["volume"] = (stiff, m_in, m_out)
    return space._cache["volume"]


def boundary_matrices(space):
    """Boundary mass <u, v>_Gamma and surface stiffness <d_s u, d_s v>_Gamma."""
    if "bmats" in space._cache:
        return space._cache["bmats"]
    tr = space.boundary_trace()
    nb = tr["phi"].shape[1]
    ds = tr["ds"]
    mloc = ds[:, None, None] * tr["phi"][:, :, None] * tr["phi"][:, None, :]
    sloc = ds[:, None, None] * tr["dphi_s"][:, :, None] * tr["dphi_s"][:, None, :]
    rows = np.repeat(tr["dofs"], nb, axis=1).ravel()
    cols = np.tile(tr["dofs"], (1, nb)).ravel()
    shape = (space.n_dof, space.n_dof)
    mass = sps.coo_matrix((mloc.ravel(), (rows, cols)), shape=shape).tocsr()
    surf = sps.coo_matrix((sloc.ravel(), (rows, cols)), shape=shape).tocsr()
    space._cache["bmats"] = (mass, surf)
    return mass, surf


def load_vector(space, problem):
    """(f, phi_i) + <g, phi_i>_Gamma."""
    b = np.zeros(space.n_dof, dtype=complex)
    mesh = space.mesh
    if problem.rhs_volume is not None:
        q = space.quadrature()
        phi, _ = space.basis.eval(q.xy)
        pts, _, det = mesh.geometric_map(q.xy)
        if getattr(problem.rhs_volume, "region_aware", False):
            reg = np.broadcast_to(mesh.region[:, None], det.shape)
            fvals = problem.rhs_volume(pts[..., 0], pts[..., 1], region=reg)
        else:
            fvals = problem.rhs_volume(pts[..., 0], pts[..., 1])
        fvals = np.asarray(fvals, dtype=complex)
        fvals = np.broadcast_to(fvals, det.shape)
        if not np.all(np.isfinite(fvals)):
            raise ValueError("non-finite volume data")
        loc = np.einsum("eq,qa->ea", fvals * det * q.weights[None, :], phi)
        np.add.at(b, space.dof_map, loc)
    if problem.rhs_boundary is not None:
        tr = space.boundary_trace()
        g = np.broadcast_to(np.asarray(problem.rhs_boundary(tr["theta"]), dtype=complex), tr["ds"].shape)
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite boundary data")
        np.add.at(b, tr["dofs"], (g * tr["ds"])[:, None] * tr["phi"])
    return b


def assemble(space, problem, volume_only=False):
    """System matrix (CSR, complex) and load vector for ``problem`` on ``space``."""
    if getattr(problem, "mesh", None) is not None and problem.mesh is not space.mesh:
        raise MeshMismatch("problem and space refer to different meshes")
    k = float(problem.k)
    coeffs = [complex(problem.n_inner) ** 2, complex(problem.n_outer) ** 2]
    if not all(np.isfinite(c) for c in coeffs) or not np.isfinite(k):
        raise ValueError("non-finite coefficient values")
    stiff, m_in, m_out = volume_matrices(space)
    a = (stiff - k * k * (coeffs[0] * m_in + coeffs[1] * m_out)).astype(complex)
    rhs = load_vector(space, problem)
    if volume_only:
        return a.tocsr(), rhs
    bc = problem.bc
    if isinstance(bc, boundary.Robin):
        bmass, _ = boundary_matrices(space)
        a = a - complex(bc.gamma) * bmass
    elif isinstance(bc, boundary.SecondOrderAbc):
        bmass, surf = boundary_matrices(space)
        a = a + complex(bc.alpha) * surf - complex(bc.beta) * bmass
    elif isinstance(bc, boundary.TruncatedDtN):
        dofs, block = boundary.assemble_dtn_block(space, k, bc.cutoff)
        rr, cc = np.meshgrid(dofs, dofs, indexing="ij")
        a = a - sps.coo_matrix((block.ravel(), (rr.ravel(), cc.ravel())), shape=a.shape).tocsr()
    elif bc is not None:
        raise TypeError(f"unsupported boundary condition {bc!r}")
    a = a.tocsr()
    a.sum_duplicates()
    a.eliminate_zeros()
    return a, rhs


def evaluate(space, coeffs, xy=None):
    """u_h and grad u_h at reference points of every element.

    Returns (points, values, gradients, jacobian determinants).
    """
    xy = space.quadrature().xy if xy is None else xy
    phi, dphi = space.basis.eval(xy)
    pts, jac, det = space.mesh.geometric_map(xy)
    loc = np.asarray(coeffs)[space.dof_map]  # (ne, nb)
    vals = loc @ phi.T
    gref = np.einsum("ea,qad->eqd", loc, dphi)
    grads = _physical_gradients(jac, gref[:, :, None, :])[:, :, 0, :]
    return pts, vals, grads, det


def interpolate(space, func):
    """Nodal interpolant of ``func(x, y)`` (complex arrays)."""
    c = space.dof_coordinates()
    return np.asarray(func(c[:, 0], c[:, 1]), dtype=complex)


@dataclass(frozen=True)
class ErrorNorms:
    l2_rel: float
    energy_rel: float
    l2_abs: float
    energy_abs: float


def _norm_parts(space, coeffs, exact):
    q = space.quadrature()
    pts, vals, grads, det = evaluate(space, coeffs, q.xy)
    w = det * q.weights[None, :]
    u = exact.u(pts[..., 0], pts[..., 1])
    gu = exact.grad(pts[..., 0], pts[..., 1])
    e = u - vals
    ge = gu - grads
    parts = {
        "l2_err": float(np.sum(w * np.abs(e) ** 2)),
        "h1_err": float(np.sum(w[..., None] * np.abs(ge) ** 2)),
        "l2_ref": float(np.sum(w * np.abs(u) ** 2)),
        "h1_ref": float(np.sum(w[..., None] * np.abs(gu) ** 2)),
    }
    tr = space.boundary_trace()
    uh_s = np.sum(np.asarray(coeffs)[tr["dofs"]] * tr["dphi_s"], axis=1)
    ex_s = exact.surface_derivative_at(tr["points"])
    parts["surf_err"] = float(np.sum(tr["ds"] * np.abs(ex_s - uh_s) ** 2))
    parts["surf_ref"] = float(np.sum(tr["ds"] * np.abs(ex_s) ** 2))
    return parts


def error_norms(space, uh, exact, k, t=0.5):
    """Relative L2 and k-weighted energy errors of ``uh`` against ``exact``.

    The energy norm is |v|_1^2 + k^2 ||v||_0^2, plus k^{-1} |v|_{1,Gamma}^2
    when ``t == 1``.  For t = 1/2 no boundary seminorm is included.
    """
    if t not in (0.5, 1, 1.0):
        raise ValueError("t must be 1/2 or 1")
    parts = _norm_parts(space, uh, exact)
    if parts["l2_ref"] == 0.0:
        raise ValueError("exact solution has zero norm")
    en_err = parts["h1_err"] + k * k * parts["l2_err"]
    en_ref = parts["h1_ref"] + k * k * parts["l2_ref"]
    if t == 1:
        en_err += parts["surf_err"] / k
        en_ref += parts["surf_ref"] / k
    return ErrorNorms(
        l2_rel=float(np.sqrt(parts["l2_err"] / parts["l2_ref"])),
        energy_rel=float(np.sqrt(en_err / en_ref)),
        l2_abs=float(np.sqrt(parts["l2_err"])),
        energy_abs=float(np.sqrt(en_err)),
    )


def energy_projection(space, exact, k, t=0.5):
    """Best approximation of ``exact`` in the discrete energy inner product."""
    stiff, m_in, m_out = volume_matrices(space)
    gram = stiff + k * k * (m_in + m_out)
    q = space.quadrature()
    phi, dphi = space.basis.eval(q.xy)
    pts, jac, det = space.mesh.geometric_map(q.xy)
    w = det * q.weights[None, :]
    u = exact.u(pts[..., 0], pts[..., 1])
    gu = exact.grad(pts[..., 0], pts[..., 1])
    rhs = np.zeros(space.n_dof, dtype=complex)
    loc = k * k * np.einsum("eq,qa->ea", w * u, phi)
    for lo in range(0, space.mesh.n_tri, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        g = _physical_gradients(jac[sl], dphi[None])  # (ne, nq, nb, 2)
        loc[sl] += np.einsum("eq,eqd,eqad->ea", w[sl], gu[sl], g)
    np.add.at(rhs, space.dof_map, loc)
    if t == 1:
        _, surf = boundary_matrices(space)
        gram = gram + surf / k
        tr = space.boundary_trace()
        ex_s = exact.surface_derivative_at(tr["points"])
        np.add.at(rhs, tr["dofs"], ((ex_s * tr["ds"]) / k)[:, None] * tr["dphi_s"])
    return solve_sparse(ComplexSparseMatrix.from_scipy(gram.astype(complex)), rhs)


def write_solution_csv(coeffs, path):
    """Coefficient vector as CSV rows ``dof,re,im``."""
    with open(path, "w", newline="\n") as fh:
        fh.write("dof,re,im\n")
        for i, c in enumerate(np.asarray(coeffs, dtype=complex)):
            fh.write(f"{i},{float(c.real)!r},{float(c.imag)!r}\n")


def read_solution_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    out = np.zeros(int(data[:, 0].max()) + 1 if len(data) else 0, dtype=complex)
    out[data[:, 0].astype(int)] = data[:, 1] + 1j * data[:, 2]
    return out


__all__ = [
    "ANNULUS", "INNER", "ErrorNorms", "FeSpace", "HelmholtzProblem", "MeshMismatch",
    "assemble", "boundary_matrices", "build_space", "energy_projection", "error_norms",
    "evaluate", "interpolate", "load_vector", "read_solution_csv", "volume_matrices",
    "write_solution_csv",
]
