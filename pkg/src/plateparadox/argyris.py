"""C1 quintic Argyris elements for the plate energy.

Global degrees of freedom: six per vertex ``(v, dx, dy, dxx, dxy, dyy)``
followed by one per side, the derivative at the side midpoint in the
direction of the side's fixed normal.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import sparse
from .errors import ArgumentError, ElementQualityError
from .fields import as_load
from .mesh import locate_points
from .polyquad import (PolyBasis, edge_quadrature, monomial_exponents, monomials,
                       triangle_quadrature)

NLOC = 21
VANDERMONDE_COND_MAX = 1e12
CHUNK = 2048


@dataclass(frozen=True)
class BcMode:
    """Boundary treatment: ``full``, ``nodal``, ``penalty`` or ``penalty_vq``.

    Penalty modes use `epsilon` when given, else ``h_max ** epsilon_power``.
    """

    kind: str = "nodal"
    epsilon: float = None
    epsilon_power: float = 3.0

    KINDS = ("full", "nodal", "penalty", "penalty_vq")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ArgumentError(f"unknown boundary mode {self.kind!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ArgumentError("penalty parameter must be positive")

    @classmethod
    def full(cls):
        return cls("full")

    @classmethod
    def nodal(cls):
        return cls("nodal")

    @classmethod
    def penalty(cls, epsilon=None, epsilon_power=3.0):
        return cls("penalty", epsilon, epsilon_power)

    @classmethod
    def penalty_vq(cls, epsilon=None, epsilon_power=3.0):
        return cls("penalty_vq", epsilon, epsilon_power)

    def resolve_epsilon(self, h):
        if self.epsilon is not None:
            return float(self.epsilon)
        return float(h) ** self.epsilon_power

    @property
    def label(self):
        return self.kind


def check_sigma(sigma):
    if not (0.0 <= sigma < 1.0):
        raise ArgumentError(f"Poisson ratio must lie in [0, 1), got {sigma!r}")
    return float(sigma)


@dataclass(frozen=True)
class ArgyrisElementBasis:
    """The 21 nodal shape functions of one triangle and its functional scaling."""

    basis: PolyBasis
    scaling: np.ndarray


class ArgyrisSpace:
    def __init__(self, mesh):
        self.mesh = mesh
        self.nv = mesh.nv
        self.ndof = 6 * mesh.nv + mesh.ns
        vert = 6 * mesh.triangles[:, :, None] + np.arange(6)
        self.element_dofs = np.hstack([vert.reshape(mesh.nt, 18), 6 * mesh.nv + mesh.tri_sides])
        self._exps = monomial_exponents(5)

    def vertex_dof(self, v, k=0):
        return 6 * np.asarray(v) + k

    def side_dof(self, s):
        return 6 * self.nv + np.asarray(s)

    @cached_property
    def _element_data(self):
        m = self.mesh
        centers = m.centroids
        scales = m.diameters
        V = self._functional_matrix(np.arange(m.nt))
        cond = np.linalg.cond(V)
        bad = np.flatnonzero(~(cond <= VANDERMONDE_COND_MAX))
        if len(bad):
            raise ElementQualityError(
                f"Argyris Vandermonde condition {cond[bad[0]]:.3e} on triangle {bad[0]}")
        C = np.linalg.inv(V)  # C[t, m, i]: monomial m of scaled shape i
        s = self._scaling(scales)
        coeffs = np.swapaxes(C, 1, 2) * s[:, :, None]
        return centers, scales, coeffs, cond

    @staticmethod
    def _scaling(h):
        h = np.asarray(h)[:, None]
        one = np.ones_like(h)
        per_vertex = np.hstack([one, h, h, h**2, h**2, h**2])
        return np.hstack([per_vertex] * 3 + [h, h, h])

    def _functional_matrix(self, tris):
        m = self.mesh
        c = m.centroids[tris]
        h = m.diameters[tris]
        z = (m.corners[tris] - c[:, None, :]) / h[:, None, None]  # (n, 3, 2)
        E = self._exps
        V = np.empty((len(tris), NLOC, NLOC))
        for k in range(3):
            xi, eta = z[:, k, 0], z[:, k, 1]
            for j, (dx, dy) in enumerate([(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]):
                V[:, 6 * k + j] = monomials(E, xi, eta, dx, dy)
        for k in range(3):
            mid = 0.5 * (z[:, (k + 1) % 3] + z[:, (k + 2) % 3])
            n = m.side_normals[m.tri_sides[tris, k]]
            V[:, 18 + k] = (n[:, 0:1] * monomials(E, mid[:, 0], mid[:, 1], 1, 0)
                            + n[:, 1:2] * monomials(E, mid[:, 0], mid[:, 1], 0, 1))
        return V

    @property
    def vandermonde_conditions(self):
        return self._element_data[3]

    def element_basis(self, t):
        centers, scales, coeffs, _ = self._element_data
        basis = PolyBasis(5, coeffs[t], tuple(centers[t]), float(scales[t]))
        return ArgyrisElementBasis(basis, self._scaling(scales[t:t + 1])[0])

    def functional_values(self, t, basis=None):
        """Apply the 21 unscaled node functionals of triangle `t` to the members
        of `basis` (defaults to the element's own shapes); shape (21, n)."""
        m = self.mesh
        basis = basis or self.element_basis(t).basis
        rows = []
        for k in range(3):
            v, g, H = basis.eval(m.corners[t, k])
            rows += [v[0], g[0, :, 0], g[0, :, 1], H[0, :, 0, 0], H[0, :, 0, 1], H[0, :, 1, 1]]
        for k in range(3):
            s = m.tri_sides[t, k]
            mid = 0.5 * (m.corners[t, (k + 1) % 3] + m.corners[t, (k + 2) % 3])
            _, g, _ = basis.eval(mid)
            rows.append(g[0] @ m.side_normals[s])
        return np.array(rows)

    def tabulate(self, tris, points):
        """Shape functions of triangles `tris` at physical `points` (n, q, 2).

        Returns value, dx, dy, dxx, dxy, dyy arrays of shape (n, q, 21).
        """
        centers, scales, coeffs, _ = self._element_data
        h = scales[tris][:, None]
        xi = (points[..., 0] - centers[tris, 0][:, None]) / h
        eta = (points[..., 1] - centers[tris, 1][:, None]) / h
        C = coeffs[tris]
        out = []
        for dx, dy in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]:
            mono = monomials(self._exps, xi, eta, dx, dy)
            out.append(np.einsum("tqm,tim->tqi", mono, C) / h[..., None] ** (dx + dy))
        return out

    def tabulate_rule(self, tris, rule):
        pts = rule.physical_points(self.mesh.corners[tris])
        return pts, self.tabulate(tris, pts)

    def chunks(self):
        nt = self.mesh.nt
        for start in range(0, nt, CHUNK):
            yield np.arange(start, min(start + CHUNK, nt))


def energy_matrix(space, sigma=0.0, quad_degree=10):
    """Matrix of ``sigma (lap u, lap v) + (1 - sigma) (D2 u : D2 v)`` over the mesh."""
    sigma = check_sigma(sigma)
    rule = triangle_quadrature(quad_degree)
    trip = sparse.TripletList(space.ndof)
    for tris in space.chunks():
        _, (_, _, _, hxx, hxy, hyy) = space.tabulate_rule(tris, rule)
        wq = rule.weights[None, :] * space.mesh.areas[tris][:, None]
        lap = hxx + hyy
        K = sigma * np.einsum("tq,tqi,tqj->tij", wq, lap, lap)
        K += (1.0 - sigma) * (np.einsum("tq,tqi,tqj->tij", wq, hxx, hxx)
                              + 2.0 * np.einsum("tq,tqi,tqj->tij", wq, hxy, hxy)
                              + np.einsum("tq,tqi,tqj->tij", wq, hyy, hyy))
        trip.add_blocks(space.element_dofs[tris], K)
    return sparse.assemble(trip)


def load_vector(space, f, quad_degree=10):
    f = as_load(f)
    rule = triangle_quadrature(quad_degree)
    b = np.zeros(space.ndof)
    for tris in space.chunks():
        pts, (val, *_) = space.tabulate_rule(tris, rule)
        wq = rule.weights[None, :] * space.mesh.areas[tris][:, None]
        loc = np.einsum("tq,tq,tqi->ti", wq, f(pts), val)
        b += sparse.assemble_vector(space.element_dofs[tris], loc, space.ndof)
    return b


def boundary_mass_matrix(space, edge_degree=11):
    """``int_{boundary} u v ds`` for the quintic traces."""
    m = space.mesh
    rule = edge_quadrature(edge_degree)
    bs = m.boundary_sides
    tris = m.side_triangles[bs, 0]
    p = m.vertices[m.side_vertices[bs, 0]]
    q = m.vertices[m.side_vertices[bs, 1]]
    pts = p[:, None, :] + rule.points[None, :, None] * (q - p)[:, None, :]
    val = space.tabulate(tris, pts)[0]
    wq = rule.weights[None, :] * m.side_lengths[bs][:, None]
    M = np.einsum("tq,tqi,tqj->tij", wq, val, val)
    trip = sparse.TripletList(space.ndof)
    trip.add_blocks(space.element_dofs[tris], M)
    return sparse.assemble(trip)


def boundary_vertex_weights(mesh):
    """Per vertex, half the summed length of its adjacent boundary sides."""
    bs = mesh.boundary_sides
    w = np.zeros(mesh.nv)
    np.add.at(w, mesh.side_vertices[bs].ravel(), np.repeat(0.5 * mesh.side_lengths[bs], 2))
    return w


def boundary_tangents(mesh):
    """Map boundary vertex -> list of unit tangents of its boundary sides."""
    out = {int(v): [] for v in mesh.boundary_vertices}
    for s in mesh.boundary_sides:
        a, b = mesh.side_vertices[s]
        t = (mesh.vertices[b] - mesh.vertices[a]) / mesh.side_lengths[s]
        out[int(a)].append(t)
        out[int(b)].append(t)
    return out


def full_support_constraints(space):
    """v = 0, d_t v = 0 and t^T D2v t = 0 for every boundary tangent at every
    boundary vertex; makes the quintic trace vanish on boundary sides."""
    mesh = space.mesh
    C = sparse.LinearConstraintSet(space.ndof)
    for v, tangents in boundary_tangents(mesh).items():
        rows = [[1.0, 0, 0, 0, 0, 0]]
        for t in tangents:
            rows.append([0.0, t[0], t[1], 0, 0, 0])
            rows.append([0.0, 0, 0, t[0] ** 2, 2 * t[0] * t[1], t[1] ** 2])
        expected = None
        t0, t1 = tangents[0], tangents[-1]
        if len(tangents) == 2 and abs(t0[0] * t1[1] - t0[1] * t1[0]) > 1e-8:
            expected = 5
        C.add_block(space.vertex_dof(v) + np.arange(6), np.array(rows), expected_rank=expected)
    return C


def nodal_constraints(space):
    C = sparse.LinearConstraintSet(space.ndof)
    C.fix(space.vertex_dof(space.mesh.boundary_vertices))
    return C


def assemble_system(space, sigma=0.0, f=1.0, bc=None, quad_degree=10, edge_degree=11):
    """Return ``(A, b, constraints)`` for the Argyris plate problem.

    Penalty contributions are included in `A`; `constraints` is None for the
    penalty modes.
    """
    bc = bc or BcMode.nodal()
    sigma = check_sigma(sigma)
    A = energy_matrix(space, sigma, quad_degree)
    b = load_vector(space, f, quad_degree)
    constraints = None
    if bc.kind == "full":
        constraints = full_support_constraints(space)
    elif bc.kind == "nodal":
        constraints = nodal_constraints(space)
    elif bc.kind == "penalty":
        eps = bc.resolve_epsilon(space.mesh.h_max)
        A = (A + boundary_mass_matrix(space, edge_degree) / eps).tocsr()
    else:
        eps = bc.resolve_epsilon(space.mesh.h_max)
        w = np.zeros(space.ndof)
        w[space.vertex_dof(np.arange(space.nv))] = boundary_vertex_weights(space.mesh)
        A = (A + sparse.sp.diags(w / eps)).tocsr()
    return A, b, constraints


def interpolate_canonical(space, field):
    """Exact node functionals of `field` (value, gradient, Hessian callables)."""
    m = space.mesh
    X = m.vertices
    g = field.gradient(X)
    H = field.hessian(X)
    vert = np.column_stack([field.value(X), g[:, 0], g[:, 1], H[:, 0, 0], H[:, 0, 1], H[:, 1, 1]])
    mids = 0.5 * (X[m.side_vertices[:, 0]] + X[m.side_vertices[:, 1]])
    side = np.einsum("sd,sd->s", field.gradient(mids), m.side_normals)
    return np.concatenate([vert.ravel(), side])


def patch_hessian_means(mesh, field, quad_degree=10):
    """Mean of each second derivative over every vertex patch, shape (nv, 3)."""
    rule = triangle_quadrature(quad_degree)
    pts = rule.physical_points(mesh.corners)
    H = field.hessian(pts)
    comps = np.stack([H[..., 0, 0], H[..., 0, 1], H[..., 1, 1]], axis=-1)
    integrals = np.einsum("q,tqc->tc", rule.weights, comps) * mesh.areas[:, None]
    num = np.zeros((mesh.nv, 3))
    den = np.zeros(mesh.nv)
    for k in range(3):
        np.add.at(num, mesh.triangles[:, k], integrals)
        np.add.at(den, mesh.triangles[:, k], mesh.areas)
    return num / den[:, None]


def interpolate_modified(space, field, quad_degree=10):
    """Canonical interpolant with second-derivative dofs replaced by patch means."""
    x = interpolate_canonical(space, field)
    means = patch_hessian_means(space.mesh, field, quad_degree)
    V = x[:6 * space.nv].reshape(space.nv, 6)
    V[:, 3:] = means
    return x


def evaluate(space, coeffs, x):
    """Value, gradient and Hessian of the finite element function at `x`."""
    v, g, H = evaluate_many(space, coeffs, np.reshape(x, (1, 2)))
    return float(v[0]), g[0], H[0]


def evaluate_many(space, coeffs, points, triangles=None):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if triangles is None:
        triangles, _ = locate_points(space.mesh, points)
    triangles = np.asarray(triangles)
    val, dx, dy, dxx, dxy, dyy = space.tabulate(triangles, points[:, None, :])
    u = np.asarray(coeffs)[space.element_dofs[triangles]]
    f = lambda T: np.einsum("ti,ti->t", T[:, 0], u)
    grad = np.column_stack([f(dx), f(dy)])
    hxy = f(dxy)
    hess = np.stack([np.stack([f(dxx), hxy], -1), np.stack([hxy, f(dyy)], -1)], -2)
    return f(val), grad, hess


def hessian_integrals(space, coeffs, quad_degree=10):
    """Return ``(int |D2 u|^2, int (lap u)^2, int det D2 u)`` over the mesh."""
    rule = triangle_quadrature(quad_degree)
    out = np.zeros(3)
    coeffs = np.asarray(coeffs)
    for tris in space.chunks():
        _, (_, _, _, hxx, hxy, hyy) = space.tabulate_rule(tris, rule)
        u = coeffs[space.element_dofs[tris]]
        a = np.einsum("tqi,ti->tq", hxx, u)
        b = np.einsum("tqi,ti->tq", hxy, u)
        c = np.einsum("tqi,ti->tq", hyy, u)
        wq = rule.weights[None, :] * space.mesh.areas[tris][:, None]
        out += [np.sum(wq * (a * a + 2 * b * b + c * c)), np.sum(wq * (a + c) ** 2),
                np.sum(wq * (a * c - b * b))]
    return tuple(out)


@dataclass
class ArgyrisSolution:
    space: ArgyrisSpace
    coefficients: np.ndarray
    sigma: float
    bc: BcMode
    matrix: object
    energy_form: object
    rhs: np.ndarray
    report: object

    method = "argyris"

    def __call__(self, points):
        return evaluate_many(self.space, self.coefficients, points)[0]

    def energy(self):
        u = self.coefficients
        return 0.5 * u @ (self.matrix @ u) - self.rhs @ u

    @property
    def ndof(self):
        return self.space.ndof


def solve_argyris(mesh, sigma=0.0, f=1.0, bc=None, quad_degree=10, estimate_condition=True):
    space = ArgyrisSpace(mesh)
    bc = bc or BcMode.nodal()
    A, b, C = assemble_system(space, sigma, f, bc, quad_degree)
    u, report = sparse.solve_constrained(A, b, C, estimate_condition=estimate_condition)
    energy_form = A if bc.kind in ("full", "nodal") else energy_matrix(space, sigma, quad_degree)
    return ArgyrisSolution(space, u, sigma, bc, A, energy_form, b, report)
