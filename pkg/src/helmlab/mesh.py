"""Curved concentric-ring triangulations of the unit disk.

The generator places ``R = 2**(level+1)`` rings at radii j/R, so the circle
r = 1/2 is always a ring and is resolved exactly.  Ring j carries 6j
vertices; the innermost ring is a fan around the origin.  Edges on the
interface and on the outer boundary are arcs, represented by isoparametric
polynomial maps whose edge nodes lie on the exact circles.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .quadrature import quadrature_triangle
from .reference import EDGE_VERTS, lagrange_basis, lattice_nodes

INNER, ANNULUS = 0, 1
TAG_NONE, TAG_INTERFACE, TAG_BOUNDARY = 0, 1, 2
TAG_NAMES = {TAG_INTERFACE: "interface", TAG_BOUNDARY: "boundary"}
INTERFACE_RADIUS = 0.5
MAX_LEVEL = 8


@dataclass(eq=False)
class Mesh:
    """Triangulation with arc descriptors and per-element geometry nodes.

    ``curved`` is an integer array of rows (element, local_edge, tag) and
    ``curved_radius`` the matching arc radii.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    region: np.ndarray
    curved: np.ndarray
    curved_radius: np.ndarray
    geometry_degree: int = 1
    geometry_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        self.region = np.ascontiguousarray(self.region, dtype=np.int64)
        self.curved = np.ascontiguousarray(self.curved, dtype=np.int64).reshape(-1, 3)
        self.curved_radius = np.ascontiguousarray(self.curved_radius, dtype=float)
        if not 1 <= self.geometry_degree <= 4:
            raise ValueError("geometry_degree must be in 1..4")
        self.geometry_nodes = _geometry_nodes(self)
        for arr in (self.vertices, self.triangles, self.region, self.curved,
                    self.curved_radius, self.geometry_nodes):
            arr.setflags(write=False)

    @property
    def n_tri(self):
        return len(self.triangles)

    @property
    def n_vert(self):
        return len(self.vertices)

    @cached_property
    def edges(self):
        """(edges, tri_edges): unique sorted vertex pairs and per-element edge ids."""
        loc = np.array(EDGE_VERTS)
        pairs = self.triangles[:, loc]  # (nt, 3, 2)
        srt = np.sort(pairs, axis=2).reshape(-1, 2)
        uniq, inv = np.unique(srt, axis=0, return_inverse=True)
        return uniq, inv.reshape(-1, 3)

    @cached_property
    def edge_tags(self):
        tags = np.zeros(len(self.edges[0]), dtype=np.int64)
        if len(self.curved):
            tags[self.edges[1][self.curved[:, 0], self.curved[:, 1]]] = self.curved[:, 2]
        return tags

    def boundary_edges(self):
        """(element, local_edge) rows for every edge on r = 1."""
        sel = self.curved[:, 2] == TAG_BOUNDARY
        return self.curved[sel, :2]

    def geometric_map(self, xy, elements=None):
        """Physical points, Jacobians and determinants at reference points ``xy``.

        Returns arrays of shape (ne, nq, 2), (ne, nq, 2, 2), (ne, nq).
        """
        basis = lagrange_basis(self.geometry_degree)
        phi, grad = basis.eval(xy)
        nodes = self.geometry_nodes if elements is None else self.geometry_nodes[elements]
        pts = np.einsum("qa,ead->eqd", phi, nodes)
        jac = np.einsum("qaj,eai->eqij", grad, nodes)
        det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
        return pts, jac, det

    def areas(self, order=None):
        q = quadrature_triangle(order or 2 * self.geometry_degree + 3)
        _, _, det = self.geometric_map(q.xy)
        return det @ q.weights


def _arc_points(a, b, radius, s):
    ta = np.arctan2(a[1], a[0])
    tb = np.arctan2(b[1], b[0])
    dt = (tb - ta + np.pi) % (2.0 * np.pi) - np.pi
    th = ta + s * dt
    return radius * np.stack([np.cos(th), np.sin(th)], axis=-1)


def _geometry_nodes(mesh):
    """Interpolate the blended exact element maps at the geometry lattice."""
    bary = np.array(lattice_nodes(mesh.geometry_degree))
    verts = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    nodes = np.einsum("ni,eid->end", bary, verts)
    for (elem, edge, _tag), radius in zip(mesh.curved, mesh.curved_radius):
        i0, i1 = EDGE_VERTS[edge]
        a, b = verts[elem, i0], verts[elem, i1]
        l0, l1 = bary[:, i0], bary[:, i1]
        prod = l0 * l1
        on = prod > 1e-14
        s = l1[on] / (l0[on] + l1[on])
        chord = a[None, :] + s[:, None] * (b - a)[None, :]
        disp = _arc_points(a, b, radius, s) - chord
        # smooth blend: displacement / (s(1-s)) scaled by l0*l1
        nodes[elem, on] += (prod[on] / (s * (1.0 - s)))[:, None] * disp
        # snap edge nodes onto the circle exactly
        edge_sel = on & (np.abs(l0 + l1 - 1.0) < 1e-12)
        pts = nodes[elem, edge_sel]
        nodes[elem, edge_sel] = radius * pts / np.linalg.norm(pts, axis=1)[:, None]
    return nodes


def _orient(vertices, tris):
    p = vertices[tris]
    area = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - \
           (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    tris = tris.copy()
    flip = area < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def _tag_curved(vertices, tris, radii_tags):
    rows, rads = [], []
    r = np.linalg.norm(vertices, axis=1)
    for e, tri in enumerate(tris):
        for le, (i0, i1) in enumerate(EDGE_VERTS):
            ra, rb = r[tri[i0]], r[tri[i1]]
            for radius, tag in radii_tags:
                if abs(ra - radius) < 1e-12 and abs(rb - radius) < 1e-12:
                    rows.append((e, le, tag))
                    rads.append(radius)
    return np.array(rows, dtype=np.int64).reshape(-1, 3), np.array(rads)


def generate_disk_mesh(level, geometry_degree=2):
    """Concentric-ring mesh of the unit disk with 2**(level+1) rings."""
    if int(level) != level or not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be an integer in 0..{MAX_LEVEL}")
    nring = 2 ** (int(level) + 1)
    verts = [(0.0, 0.0)]
    start = [0]
    for j in range(1, nring + 1):
        start.append(len(verts))
        th = 2.0 * np.pi * np.arange(6 * j) / (6 * j)
        rad = j / nring
        verts.extend(zip(rad * np.cos(th), rad * np.sin(th)))
    verts = np.array(verts)

    def node(j, t):
        if j == 0:
            return 0
        return start[j] + t % (6 * j)

    tris, region = [], []
    for j in range(1, nring + 1):
        reg = INNER if j <= nring // 2 else ANNULUS
        for s in range(6):
            for i in range(j):
                tris.append((node(j, j * s + i), node(j, j * s + i + 1), node(j - 1, (j - 1) * s + i)))
                region.append(reg)
            for i in range(j - 1):
                tris.append((node(j - 1, (j - 1) * s + i), node(j, j * s + i + 1),
                             node(j - 1, (j - 1) * s + i + 1)))
                region.append(reg)
    tris = _orient(verts, np.array(tris, dtype=np.int64))
    curved, rads = _tag_curved(verts, tris, [(INTERFACE_RADIUS, TAG_INTERFACE), (1.0, TAG_BOUNDARY)])
    return Mesh(verts, tris, np.array(region), curved, rads, geometry_degree)


def refine(mesh):
    """Red refinement; midpoints of arc edges are projected onto their circle."""
    edges, tri_edges = mesh.edges
    nv = mesh.n_vert
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    edge_radius = np.zeros(len(edges))
    tags = mesh.edge_tags
    if len(mesh.curved):
        edge_radius[tri_edges[mesh.curved[:, 0], mesh.curved[:, 1]]] = mesh.curved_radius
    arc = tags != TAG_NONE
    mids[arc] = edge_radius[arc, None] * mids[arc] / np.linalg.norm(mids[arc], axis=1)[:, None]
    verts = np.vstack([mesh.vertices, mids])
    t = mesh.triangles
    m = nv + tri_edges  # m[:,0] on edge (0,1), m[:,1] on (1,2), m[:,2] on (2,0)
    children = np.stack([
        np.column_stack([t[:, 0], m[:, 0], m[:, 2]]),
        np.column_stack([m[:, 0], t[:, 1], m[:, 1]]),
        np.column_stack([m[:, 2], m[:, 1], t[:, 2]]),
        np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
    ], axis=1).reshape(-1, 3)
    region = np.repeat(mesh.region, 4)
    # (child index, child local edge) that lie on parent edge e
    on_parent = {0: ((0, 0), (1, 0)), 1: ((1, 1), (2, 1)), 2: ((0, 2), (2, 2))}
    rows, rads = [], []
    for (elem, edge, tag), radius in zip(mesh.curved, mesh.curved_radius):
        for child, le in on_parent[int(edge)]:
            rows.append((4 * elem + child, le, tag))
            rads.append(radius)
    return Mesh(verts, children, region, np.array(rows, dtype=np.int64).reshape(-1, 3),
                np.array(rads), mesh.geometry_degree)


def with_geometry_degree(mesh, geometry_degree):
    """Same triangulation with a different isoparametric degree."""
    if geometry_degree == mesh.geometry_degree:
        return mesh
    return Mesh(mesh.vertices, mesh.triangles, mesh.region, mesh.curved,
                mesh.curved_radius, geometry_degree)


@dataclass(frozen=True)
class MeshStats:
    h_max: float
    n_tri: int
    n_vert: int
    min_jacobian_ratio: float


def mesh_stats(mesh):
    """Element diameter, counts and a shape-regularity proxy."""
    g = mesh.geometry_nodes
    diff = g[:, :, None, :] - g[:, None, :, :]
    h_max = float(np.sqrt((diff ** 2).sum(-1)).max())
    q = quadrature_triangle(2 * mesh.geometry_degree + 3)
    _, _, det = mesh.geometric_map(q.xy)
    ratio = float((det.min(axis=1) / det.max(axis=1)).min())
    return MeshStats(h_max, mesh.n_tri, mesh.n_vert, ratio)


def export_mesh(mesh, path):
    """Write the plain-text DISKMESH v1 format."""
    lines = [f"DISKMESH v1 {mesh.n_vert} {mesh.n_tri} {mesh.geometry_degree}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"{a} {b} {c} {r}" for (a, b, c), r in zip(mesh.triangles.tolist(), mesh.region.tolist())]
    lines += [f"{e} {le} {rad!r} {TAG_NAMES[tag]}"
              for (e, le, tag), rad in zip(mesh.curved.tolist(), mesh.curved_radius.tolist())]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def import_mesh(path):
    """Read a mesh written by :func:`export_mesh`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    head = lines[0].split()
    if head[:2] != ["DISKMESH", "v1"]:
        raise ValueError(f"{path}: not a DISKMESH v1 file")
    nv, nt, q = (int(v) for v in head[2:5])
    verts = np.array([[float(v) for v in ln.split()] for ln in lines[1:1 + nv]]).reshape(nv, 2)
    body = [[int(v) for v in ln.split()] for ln in lines[1 + nv:1 + nv + nt]]
    tri = np.array(body, dtype=np.int64).reshape(nt, 4)
    rows, rads = [], []
    names = {v: k for k, v in TAG_NAMES.items()}
    for ln in lines[1 + nv + nt:]:
        if not ln.strip():
            continue
        e, le, rad, tag = ln.split()
        rows.append((int(e), int(le), names[tag]))
        rads.append(float(rad))
    return Mesh(verts, tri[:, :3], tri[:, 3], np.array(rows, dtype=np.int64).reshape(-1, 3),
                np.array(rads), q)
