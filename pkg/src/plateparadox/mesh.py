"""Inscribed-polygon triangulations of the unit disk.

Meshes are refined in the coordinates of the square with corners
``(+-1/sqrt(2), +-1/sqrt(2))`` and mapped onto the disk afterwards, so the
boundary vertices land exactly on the unit circle at every level.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ArgumentError, CapacityError, NotFoundError

MAX_LEVEL = 8
LOCATE_TOL = 1e-12
_HALF_DIAG = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class Side:
    endpoints: tuple
    adjacent_triangles: tuple
    unit_normal: np.ndarray
    length: float
    is_boundary: bool


@dataclass(frozen=True)
class MeshStats:
    h_max: float
    h_min: float
    min_angle: float
    shape_regularity: float


@dataclass(frozen=True)
class ReferenceMesh:
    """Square triangulation before the correction map is applied."""

    vertices: np.ndarray
    triangles: np.ndarray
    level: int


def correction_map(z):
    """Map the square ``[-1/sqrt2, 1/sqrt2]^2`` onto the unit disk along rays.

    Accepts a single point or an array of points with trailing axis 2.
    """
    z = np.asarray(z, dtype=float)
    r2 = np.hypot(z[..., 0], z[..., 1])
    rinf = np.maximum(np.abs(z[..., 0]), np.abs(z[..., 1]))
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(r2 > 0.0, np.sqrt(2.0) * rinf / np.where(r2 > 0.0, r2, 1.0), 0.0)
    return z * factor[..., None]


def base_reference_mesh():
    a = _HALF_DIAG
    vertices = np.array([[0.0, 0.0], [-a, -a], [a, -a], [a, a], [-a, a]])
    triangles = np.array([[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]], dtype=np.int64)
    return ReferenceMesh(vertices, triangles, 0)


def _edges_of(triangles):
    # local edge k is opposite local vertex k
    e = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1)
    return e.reshape(-1, 2)


def red_refine(ref):
    """Split every triangle into four through its edge midpoints."""
    tri = ref.triangles
    nv = len(ref.vertices)
    edges = np.sort(_edges_of(tri), axis=1)
    uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1, 3)
    mids = 0.5 * (ref.vertices[uniq[:, 0]] + ref.vertices[uniq[:, 1]])
    vertices = np.vstack([ref.vertices, mids])
    m = nv + inverse  # m[:, k] is the midpoint opposite vertex k
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    mab, mbc, mca = m[:, 2], m[:, 0], m[:, 1]
    children = np.stack([
        np.column_stack([a, mab, mca]),
        np.column_stack([mab, b, mbc]),
        np.column_stack([mca, mbc, c]),
        np.column_stack([mab, mbc, mca]),
    ], axis=1).reshape(-1, 3)
    return ReferenceMesh(vertices, children, ref.level + 1)


def reference_mesh(level, max_level=MAX_LEVEL):
    if not isinstance(level, (int, np.integer)) or level < 0:
        raise ArgumentError(f"level must be a nonnegative integer, got {level!r}")
    if level > max_level:
        raise CapacityError(f"level {level} exceeds the maximum {max_level}")
    ref = base_reference_mesh()
    for _ in range(level):
        ref = red_refine(ref)
    return ref


class Triangulation:
    """Immutable triangulation with side adjacency and fixed side normals.

    Attributes are numpy arrays: ``vertices`` (nv, 2), ``triangles`` (nt, 3)
    counterclockwise, ``side_vertices`` (ns, 2), ``side_triangles`` (ns, 2)
    with -1 marking a boundary side, ``side_normals`` (ns, 2),
    ``side_lengths`` (ns,), ``tri_sides`` (nt, 3) where local side k is
    opposite local vertex k, and ``tri_side_signs`` (nt, 3) which is +1 when
    the side normal points out of the triangle.
    """

    def __init__(self, vertices, triangles, level=0, reference_vertices=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        self.level = int(level)
        self.reference_vertices = (None if reference_vertices is None
                                   else np.ascontiguousarray(reference_vertices, dtype=float))
        self._build_sides()
        for arr in (self.vertices, self.triangles, self.side_vertices, self.side_triangles,
                    self.side_normals, self.side_lengths, self.tri_sides, self.tri_side_signs,
                    self.boundary_vertex_flags):
            arr.flags.writeable = False

    def _build_sides(self):
        tri = self.triangles
        nt = len(tri)
        local = _edges_of(tri)  # ccw orientation within the owning triangle
        key = np.sort(local, axis=1)
        uniq, first, inverse, counts = np.unique(key, axis=0, return_index=True,
                                                 return_inverse=True, return_counts=True)
        if counts.max(initial=0) > 2:
            raise ArgumentError("non-manifold triangulation")
        ns = len(uniq)
        owner = np.arange(3 * nt) // 3
        # the first occurrence belongs to the lowest-index adjacent triangle
        t1 = owner[first]
        t2 = np.full(ns, -1, dtype=np.int64)
        other = np.ones(3 * nt, dtype=bool)
        other[first] = False
        t2[inverse.ravel()[other]] = owner[other]
        endpoints = local[first]
        d = self.vertices[endpoints[:, 1]] - self.vertices[endpoints[:, 0]]
        length = np.hypot(d[:, 0], d[:, 1])
        normals = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]

        self.side_vertices = endpoints
        self.side_triangles = np.column_stack([t1, t2])
        self.side_normals = normals
        self.side_lengths = length
        self.tri_sides = inverse.reshape(nt, 3)
        self.tri_side_signs = np.where(t1[self.tri_sides] == np.arange(nt)[:, None], 1.0, -1.0)
        bflags = np.zeros(len(self.vertices), dtype=bool)
        bflags[endpoints[t2 < 0].ravel()] = True
        self.boundary_vertex_flags = bflags

    @property
    def nv(self):
        return len(self.vertices)

    @property
    def nt(self):
        return len(self.triangles)

    @property
    def ns(self):
        return len(self.side_vertices)

    @cached_property
    def boundary_sides(self):
        return np.flatnonzero(self.side_triangles[:, 1] < 0)

    @cached_property
    def interior_sides(self):
        return np.flatnonzero(self.side_triangles[:, 1] >= 0)

    @cached_property
    def boundary_vertices(self):
        return np.flatnonzero(self.boundary_vertex_flags)

    @cached_property
    def corners(self):
        """Vertex coordinates per triangle, shape (nt, 3, 2)."""
        return self.vertices[self.triangles]

    @cached_property
    def areas(self):
        c = self.corners
        e1 = c[:, 1] - c[:, 0]
        e2 = c[:, 2] - c[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def diameters(self):
        return self.side_lengths[self.tri_sides].max(axis=1)

    @cached_property
    def centroids(self):
        return self.corners.mean(axis=1)

    @cached_property
    def bary_gradients(self):
        """Gradients of the barycentric coordinates, shape (nt, 3, 2)."""
        c = self.corners
        twice = 2.0 * self.areas[:, None]
        # grad lambda_k = rot(z_{k+2} - z_{k+1}) / (2|T|), rotated inward
        out = np.empty((self.nt, 3, 2))
        for k in range(3):
            d = c[:, (k + 2) % 3] - c[:, (k + 1) % 3]
            out[:, k, 0] = -d[:, 1] / twice[:, 0]
            out[:, k, 1] = d[:, 0] / twice[:, 0]
        return out

    @property
    def h_max(self):
        return float(self.diameters.max())

    def area(self):
        return float(self.areas.sum())

    def side(self, s):
        t1, t2 = self.side_triangles[s]
        return Side(
            endpoints=(int(self.side_vertices[s, 0]), int(self.side_vertices[s, 1])),
            adjacent_triangles=(int(t1),) if t2 < 0 else (int(t1), int(t2)),
            unit_normal=self.side_normals[s].copy(),
            length=float(self.side_lengths[s]),
            is_boundary=bool(t2 < 0),
        )

    def stats(self):
        L = self.side_lengths[self.tri_sides]
        diam = L.max(axis=1)
        inradius = 2.0 * self.areas / L.sum(axis=1)
        # angle at vertex k lies opposite local side k
        a, b, c = L[:, 0], L[:, 1], L[:, 2]
        cosines = np.stack([(b**2 + c**2 - a**2) / (2 * b * c),
                            (a**2 + c**2 - b**2) / (2 * a * c),
                            (a**2 + b**2 - c**2) / (2 * a * b)], axis=1)
        angles = np.arccos(np.clip(cosines, -1.0, 1.0))
        return MeshStats(h_max=float(diam.max()), h_min=float(diam.min()),
                         min_angle=float(angles.min()),
                         shape_regularity=float((diam / inradius).max()))

    def vertex_patches(self):
        """For every vertex, the sorted indices of triangles containing it."""
        order = np.argsort(self.triangles.ravel(), kind="stable")
        tri_of = order // 3
        counts = np.bincount(self.triangles.ravel(), minlength=self.nv)
        return np.split(tri_of, np.cumsum(counts)[:-1])

    def barycentric(self, x):
        """Barycentric coordinates of point `x` in every triangle, shape (nt, 3)."""
        x = np.asarray(x, dtype=float)
        g = self.bary_gradients
        c = self.corners
        lam = np.empty((self.nt, 3))
        for k in range(3):
            # lambda_k vanishes on the opposite side, which contains z_{k+1}
            lam[:, k] = np.einsum("td,td->t", g[:, k], x - c[:, (k + 1) % 3])
        return lam


def build_disk_mesh(level, max_level=MAX_LEVEL):
    """Refine the four-triangle square fan `level` times, then map to the disk."""
    ref = reference_mesh(level, max_level)
    return mesh_from_reference(ref)


def mesh_from_reference(ref):
    return Triangulation(correction_map(ref.vertices), ref.triangles, ref.level, ref.vertices)


def locate_point(mesh, x, tol=LOCATE_TOL):
    """Return ``(triangle, barycentric)`` for a point inside the mesh.

    Ties on shared sides go to the lowest triangle index.
    """
    lam = mesh.barycentric(x)
    inside = np.flatnonzero(lam.min(axis=1) >= -tol)
    if len(inside) == 0:
        raise NotFoundError(f"point {tuple(np.asarray(x, dtype=float))} lies outside the mesh")
    t = int(inside[0])
    b = lam[t]
    return t, b / b.sum()


def locate_points(mesh, points, tol=LOCATE_TOL):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tris = np.empty(len(points), dtype=np.int64)
    bary = np.empty((len(points), 3))
    for i, p in enumerate(points):
        tris[i], bary[i] = locate_point(mesh, p, tol)
    return tris, bary


class P1Field:
    """Continuous piecewise-linear function given by its vertex values."""

    def __init__(self, mesh, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (mesh.nv,):
            raise ArgumentError(f"expected {mesh.nv} vertex values, got shape {values.shape}")
        self.mesh = mesh
        self.values = values

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        tris, bary = locate_points(self.mesh, points.reshape(-1, 2))
        vals = np.einsum("pk,pk->p", bary, self.values[self.mesh.triangles[tris]])
        return vals.reshape(points.shape[:-1])

    def element_gradients(self):
        """Constant gradient on every triangle, shape (nt, 2)."""
        return np.einsum("tk,tkd->td", self.values[self.mesh.triangles], self.mesh.bary_gradients)

    def vanishes_on_boundary(self, tol=0.0):
        return bool(np.all(np.abs(self.values[self.mesh.boundary_vertex_flags]) <= tol))


def p1_interpolate(mesh, values_at_vertices):
    """Nodal P1 interpolant. `values_at_vertices` may also be a callable of points."""
    if callable(values_at_vertices):
        values_at_vertices = values_at_vertices(mesh.vertices)
    return P1Field(mesh, values_at_vertices)
