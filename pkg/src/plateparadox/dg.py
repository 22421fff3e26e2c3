"""Symmetric interior penalty DG for the plate with sigma = 0.

On an interior side S the normal n_S points from the lower-index triangle
T- into T+ and the jump is ``v|_{T+} - v|_{T-}``; on boundary sides the
normal is outward and jump and average both equal the trace.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import sparse
from .errors import ArgumentError, SolverError
from .fields import as_load
from .mesh import locate_points
from .polyquad import edge_quadrature, monomial_exponents, monomials, poly_dimension, triangle_quadrature

DEFAULT_GAMMA = 10.0


@dataclass(frozen=True)
class DgParams:
    gamma0: float = DEFAULT_GAMMA
    gamma1: float = DEFAULT_GAMMA
    degree: int = 2

    def __post_init__(self):
        if not (self.gamma0 > 0 and self.gamma1 > 0):
            raise ArgumentError("penalty factors gamma0, gamma1 must be positive")
        if int(self.degree) != self.degree or self.degree < 2:
            raise ArgumentError(f"DG degree must be an integer >= 2, got {self.degree!r}")


class DgSpace:
    """Elementwise polynomials of degree `degree` in scaled local monomials."""

    def __init__(self, mesh, degree=2):
        if int(degree) != degree or degree < 2:
            raise ArgumentError(f"DG degree must be an integer >= 2, got {degree!r}")
        self.mesh = mesh
        self.degree = int(degree)
        self.nloc = poly_dimension(self.degree)
        self.ndof = mesh.nt * self.nloc
        self.element_dofs = np.arange(self.ndof).reshape(mesh.nt, self.nloc)
        self.exps = monomial_exponents(self.degree)

    def derivatives(self, tris, points, orders):
        """Derivatives of the local basis of `tris` at physical `points` (n, q, 2).

        `orders` is a list of (dx, dy); returns a list of (n, q, nloc) arrays.
        """
        m = self.mesh
        h = m.diameters[tris][:, None]
        xi = (points[..., 0] - m.centroids[tris, 0][:, None]) / h
        eta = (points[..., 1] - m.centroids[tris, 1][:, None]) / h
        return [monomials(self.exps, xi, eta, dx, dy) / h[..., None] ** (dx + dy)
                for dx, dy in orders]

    @cached_property
    def _side_geometry(self):
        m = self.mesh
        p = m.vertices[m.side_vertices[:, 0]]
        q = m.vertices[m.side_vertices[:, 1]]
        return p, q


_HESS = [(2, 0), (1, 1), (0, 2)]
_ALL = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)]


def _side_traces(space, sides, tris, rule):
    """Per side and quadrature point: value, gradient, D2 n, d_n lap of the
    basis of triangle `tris` (aligned with `sides`)."""
    m = space.mesh
    p, q = space._side_geometry
    pts = p[sides, None, :] + rule.points[None, :, None] * (q[sides] - p[sides])[:, None, :]
    d = dict(zip(_ALL, space.derivatives(tris, pts, _ALL)))
    n = m.side_normals[sides][:, None, None, :]
    val = d[(0, 0)]
    grad = np.stack([d[(1, 0)], d[(0, 1)]], axis=-1)
    hn = np.stack([d[(2, 0)] * n[..., 0] + d[(1, 1)] * n[..., 1],
                   d[(1, 1)] * n[..., 0] + d[(0, 2)] * n[..., 1]], axis=-1)
    dlap = ((d[(3, 0)] + d[(1, 2)]) * n[..., 0] + (d[(2, 1)] + d[(0, 3)]) * n[..., 1])
    return val, grad, hn, dlap


def volume_matrix(space, quad_degree=10):
    """Elementwise ``(D2 v, D2 w)``."""
    m = space.mesh
    rule = triangle_quadrature(quad_degree)
    tris = np.arange(m.nt)
    pts = rule.physical_points(m.corners)
    hxx, hxy, hyy = space.derivatives(tris, pts, _HESS)
    wq = rule.weights[None, :] * m.areas[:, None]
    K = (np.einsum("tq,tqi,tqj->tij", wq, hxx, hxx)
         + 2.0 * np.einsum("tq,tqi,tqj->tij", wq, hxy, hxy)
         + np.einsum("tq,tqi,tqj->tij", wq, hyy, hyy))
    trip = sparse.TripletList(space.ndof)
    trip.add_blocks(space.element_dofs, K)
    return sparse.assemble(trip)


def _side_blocks(space, edge_degree):
    """Yield ``(sides, dofs, jump, jump_grad, avg_hn, avg_dlap, weights, interior)``
    with local vectors over the (one or two) adjacent elements."""
    m = space.mesh
    rule = edge_quadrature(edge_degree)
    bs, ins = m.boundary_sides, m.interior_sides
    if len(ins):
        tm, tp = m.side_triangles[ins, 0], m.side_triangles[ins, 1]
        vm, gm, hm, lm = _side_traces(space, ins, tm, rule)
        vp, gp, hp, lp = _side_traces(space, ins, tp, rule)
        jump = np.concatenate([-vm, vp], axis=-1)
        jgrad = np.concatenate([-gm, gp], axis=-2)
        ahn = 0.5 * np.concatenate([hm, hp], axis=-2)
        alap = 0.5 * np.concatenate([lm, lp], axis=-1)
        dofs = np.hstack([space.element_dofs[tm], space.element_dofs[tp]])
        w = rule.weights[None, :] * m.side_lengths[ins][:, None]
        yield ins, dofs, jump, jgrad, ahn, alap, w, True
    if len(bs):
        tb = m.side_triangles[bs, 0]
        vb, gb, hb, lb = _side_traces(space, bs, tb, rule)
        w = rule.weights[None, :] * m.side_lengths[bs][:, None]
        yield bs, space.element_dofs[tb], vb, gb, hb, lb, w, False


def assemble_ah(space, quad_degree=10, edge_degree=11):
    """Symmetrized Hessian form a_h (gradient terms on interior sides only)."""
    A = volume_matrix(space, quad_degree)
    trip = sparse.TripletList(space.ndof)
    for sides, dofs, jump, jgrad, ahn, alap, w, interior in _side_blocks(space, edge_degree):
        S = -np.einsum("sq,sqi,sqj->sij", w, jump, alap)
        if interior:
            S += np.einsum("sq,sqid,sqjd->sij", w, jgrad, ahn)
        trip.add_blocks(dofs, S + np.swapaxes(S, 1, 2))
    return (A + sparse.assemble(trip)).tocsr()


def assemble_sh(space, params=None, edge_degree=11):
    """Stabilization ``gamma0 h^-3 [v][w]`` on all sides plus
    ``gamma1 h^-1 [grad v].[grad w]`` on interior sides."""
    params = params or DgParams(degree=space.degree)
    m = space.mesh
    trip = sparse.TripletList(space.ndof)
    for sides, dofs, jump, jgrad, ahn, alap, w, interior in _side_blocks(space, edge_degree):
        hs = m.side_lengths[sides][:, None]
        S = params.gamma0 * np.einsum("sq,sqi,sqj->sij", w / hs**3, jump, jump)
        if interior:
            S += params.gamma1 * np.einsum("sq,sqid,sqjd->sij", w / hs, jgrad, jgrad)
        trip.add_blocks(dofs, S)
    return sparse.assemble(trip)


def load_vector(space, f, quad_degree=10):
    f = as_load(f)
    m = space.mesh
    rule = triangle_quadrature(quad_degree)
    pts = rule.physical_points(m.corners)
    (val,) = space.derivatives(np.arange(m.nt), pts, [(0, 0)])
    wq = rule.weights[None, :] * m.areas[:, None]
    return np.einsum("tq,tq,tqi->ti", wq, f(pts), val).ravel()


def _p2_nodes(mesh):
    c = mesh.corners
    mids = np.stack([0.5 * (c[:, 1] + c[:, 2]), 0.5 * (c[:, 2] + c[:, 0]),
                     0.5 * (c[:, 0] + c[:, 1])], axis=1)
    return np.concatenate([c, mids], axis=1)  # (nt, 6, 2)


def interpolate_p2(space, field):
    """Quadratic Lagrange interpolant on every element (continuous for continuous v)."""
    m = space.mesh
    nodes = _p2_nodes(m)
    p2 = DgSpace(m, 2)
    (V,) = p2.derivatives(np.arange(m.nt), nodes, [(0, 0)])  # (nt, 6, 6)
    vals = field(nodes) if not hasattr(field, "value") else field.value(nodes)
    c2 = np.linalg.solve(V, vals[..., None])[..., 0]
    out = np.zeros((m.nt, space.nloc))
    out[:, :6] = c2  # monomials are ordered by total degree
    return out.ravel()


def evaluate_many(space, coeffs, points, triangles=None):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if triangles is None:
        triangles, _ = locate_points(space.mesh, points)
    (val,) = space.derivatives(np.asarray(triangles), points[:, None, :], [(0, 0)])
    u = np.asarray(coeffs)[space.element_dofs[triangles]]
    return np.einsum("pi,pi->p", val[:, 0], u)


def evaluate(space, coeffs, x):
    return float(evaluate_many(space, coeffs, np.reshape(x, (1, 2)))[0])


def broken_hessian_at(space, coeffs, rule):
    m = space.mesh
    pts = rule.physical_points(m.corners)
    hxx, hxy, hyy = space.derivatives(np.arange(m.nt), pts, _HESS)
    u = np.asarray(coeffs)[space.element_dofs]
    e = lambda T: np.einsum("tqi,ti->tq", T, u)
    return pts, e(hxx), e(hxy), e(hyy)


def boundary_trace_norm(space, coeffs, edge_degree=11):
    """L2 norm of the trace on the polygon boundary."""
    m = space.mesh
    rule = edge_quadrature(edge_degree)
    bs = m.boundary_sides
    val, *_ = _side_traces(space, bs, m.side_triangles[bs, 0], rule)
    u = np.asarray(coeffs)[space.element_dofs[m.side_triangles[bs, 0]]]
    tr = np.einsum("sqi,si->sq", val, u)
    w = rule.weights[None, :] * m.side_lengths[bs][:, None]
    return float(np.sqrt(np.sum(w * tr**2)))


def dg_norm(space, params, coeffs, quad_degree=10):
    """``sqrt(||D2_h v||^2 + s_h(v, v))``."""
    coeffs = np.asarray(coeffs, dtype=float)
    K = volume_matrix(space, quad_degree)
    S = assemble_sh(space, params)
    return float(np.sqrt(max(coeffs @ (K @ coeffs) + coeffs @ (S @ coeffs), 0.0)))


@dataclass
class DgSolution:
    space: DgSpace
    params: DgParams
    coefficients: np.ndarray
    matrix: object
    rhs: np.ndarray
    report: object

    method = "dg"

    def __call__(self, points):
        return evaluate_many(self.space, self.coefficients, points)

    def energy(self):
        u = self.coefficients
        return 0.5 * u @ (self.matrix @ u) - self.rhs @ u

    @property
    def energy_form(self):
        return self.matrix

    @property
    def ndof(self):
        return self.space.ndof


def solve_dg(mesh, params=None, f=1.0, sigma=0.0, quad_degree=10, estimate_condition=True):
    """Minimize ``a_h/2 + s_h/2 - (f, v)`` over elementwise polynomials."""
    if sigma != 0.0:
        raise ArgumentError("the DG method is implemented for sigma = 0 only")
    params = params or DgParams()
    space = DgSpace(mesh, params.degree)
    A = (assemble_ah(space, quad_degree) + assemble_sh(space, params)).tocsr()
    b = load_vector(space, f, quad_degree)
    try:
        u, report = sparse.solve(A, b, estimate_condition=estimate_condition)
    except SolverError as exc:
        raise SolverError(f"{exc}; the DG form may be indefinite, try larger gamma0/gamma1",
                          exc.diagnostics) from exc
    return DgSolution(space, params, u, A, b, report)
