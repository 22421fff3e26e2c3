"""Discrete Kirchhoff triangle.

Scalar unknowns are vertex values and gradients (three per vertex).  The
discrete gradient maps them into continuous piecewise quadratic vector
fields; curvature energies are evaluated on that field.
"""
from dataclasses import dataclass

import numpy as np

from . import sparse
from .argyris import check_sigma
from .errors import ElementQualityError
from .fields import as_load
from .mesh import locate_points
from .polyquad import triangle_quadrature

DEGENERATE_SIDE = 1e-14


class DktSpace:
    def __init__(self, mesh):
        self.mesh = mesh
        self.ndof = 3 * mesh.nv
        self.element_dofs = (3 * mesh.triangles[:, :, None] + np.arange(3)).reshape(mesh.nt, 9)

    def value_dofs(self, vertices):
        return 3 * np.asarray(vertices)

    def gradient_maps(self, tris=None):
        return gradient_map(self.mesh, tris)


def gradient_map(mesh, t=None):
    """12 x 9 matrices sending element dofs to the P2 vector field dofs.

    Rows: ``(theta_x, theta_y)`` at the three vertices, then at the midpoints
    of the sides opposite vertices 0, 1, 2.  Columns: ``(v, dx, dy)`` per
    vertex.  A scalar `t` returns a single matrix.
    """
    single = np.isscalar(t)
    tris = np.arange(mesh.nt) if t is None else np.atleast_1d(t)
    c = mesh.corners[tris]
    G = np.zeros((len(tris), 12, 9))
    for k in range(3):
        G[:, 2 * k, 3 * k + 1] = 1.0
        G[:, 2 * k + 1, 3 * k + 2] = 1.0
    for k in range(3):
        a, b = (k + 1) % 3, (k + 2) % 3
        d = c[:, b] - c[:, a]
        L = np.hypot(d[:, 0], d[:, 1])
        if np.any(L <= DEGENERATE_SIDE):
            raise ElementQualityError("degenerate side in discrete gradient")
        tv = d / L[:, None]
        nv = np.column_stack([tv[:, 1], -tv[:, 0]])
        # theta(m) = t * 3/(2L) (v_b - v_a) + (n n^T / 2 - t t^T / 4)(g_a + g_b)
        P = 0.5 * np.einsum("ti,tj->tij", nv, nv) - 0.25 * np.einsum("ti,tj->tij", tv, tv)
        rows = slice(6 + 2 * k, 8 + 2 * k)
        G[:, rows, 3 * b] = 1.5 * tv / L[:, None]
        G[:, rows, 3 * a] = -1.5 * tv / L[:, None]
        G[:, rows, 3 * a + 1:3 * a + 3] = P
        G[:, rows, 3 * b + 1:3 * b + 3] = P
    return G[0] if single else G


def p2_shapes(mesh, tris, bary):
    """P2 Lagrange shape values (q, 6) and gradients (n, q, 6, 2).

    Node order: vertices 0, 1, 2 then midpoints opposite vertices 0, 1, 2.
    """
    lam = np.asarray(bary)
    gl = mesh.bary_gradients[tris]  # (n, 3, 2)
    vals = np.empty((len(lam), 6))
    grads = np.empty((len(tris), len(lam), 6, 2))
    for k in range(3):
        a, b = (k + 1) % 3, (k + 2) % 3
        vals[:, k] = lam[:, k] * (2 * lam[:, k] - 1)
        vals[:, 3 + k] = 4 * lam[:, a] * lam[:, b]
        grads[:, :, k] = (4 * lam[:, k] - 1)[None, :, None] * gl[:, None, k]
        grads[:, :, 3 + k] = 4 * (lam[:, a][None, :, None] * gl[:, None, b]
                                  + lam[:, b][None, :, None] * gl[:, None, a])
    return vals, grads


def field_matrices(mesh, tris, sigma, rule):
    """Element matrices of ``sigma div^2 + (1 - sigma)|grad|^2`` on P2 vector fields."""
    _, grads = p2_shapes(mesh, tris, rule.points)
    # dof 2k + c is component c of node k; d/dx_d theta_c = sum_k theta_{2k+c} grad_d N_k
    n, q = grads.shape[:2]
    B = np.zeros((n, q, 2, 2, 12))  # [c, d] entry of grad theta
    for c in range(2):
        B[:, :, c, :, c::2] = np.swapaxes(grads, 2, 3)
    div = B[:, :, 0, 0] + B[:, :, 1, 1]
    wq = rule.weights[None, :] * mesh.areas[tris][:, None]
    K = sigma * np.einsum("tq,tqi,tqj->tij", wq, div, div)
    K += (1.0 - sigma) * np.einsum("tq,tqcdi,tqcdj->tij", wq, B, B)
    return K


def element_energy_matrices(mesh, sigma=0.0, quad_degree=2):
    tris = np.arange(mesh.nt)
    G = gradient_map(mesh)
    K = field_matrices(mesh, tris, sigma, triangle_quadrature(quad_degree))
    return np.einsum("tai,tab,tbj->tij", G, K, G)


def bernstein_matrix(mesh, tris=None):
    """(n, 10, 9): Bernstein-Bezier coefficients of the reduced cubic.

    Order: c_000-type vertex coefficients c_iii (3), edge coefficients c_iij
    for (i, j) in ``_PAIRS`` (6), centroid coefficient c_123 (1).  The
    centroid coefficient is fixed so that quadratics are reproduced.
    """
    tris = np.arange(mesh.nt) if tris is None else np.atleast_1d(tris)
    c = mesh.corners[tris]
    B = np.zeros((len(tris), 10, 9))
    for i in range(3):
        B[:, i, 3 * i] = 1.0
    for r, (i, j) in enumerate(_PAIRS):
        B[:, 3 + r, 3 * i] = 1.0
        B[:, 3 + r, 3 * i + 1:3 * i + 3] = (c[:, j] - c[:, i]) / 3.0
    B[:, 9] = 0.25 * B[:, 3:9].sum(axis=1) - B[:, 0:3].sum(axis=1) / 6.0
    return B


_PAIRS = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]


def bernstein_polynomials(bary):
    lam = np.atleast_2d(bary)
    cols = [lam[:, i] ** 3 for i in range(3)]
    cols += [3.0 * lam[:, i] ** 2 * lam[:, j] for i, j in _PAIRS]
    cols.append(6.0 * lam[:, 0] * lam[:, 1] * lam[:, 2])
    return np.column_stack(cols)


def assemble_system(space, sigma=0.0, f=1.0, quad_degree=10):
    """Return ``(A, b, constraints)``: boundary vertex values fixed, gradients free."""
    sigma = check_sigma(sigma)
    mesh = space.mesh
    K = element_energy_matrices(mesh, sigma)
    trip = sparse.TripletList(space.ndof)
    trip.add_blocks(space.element_dofs, K)
    A = sparse.assemble(trip)
    b = load_vector(space, f, quad_degree)
    C = sparse.LinearConstraintSet(space.ndof)
    C.fix(space.value_dofs(mesh.boundary_vertices))
    return A, b, C


def energy_matrix(space, sigma=0.0):
    trip = sparse.TripletList(space.ndof)
    trip.add_blocks(space.element_dofs, element_energy_matrices(space.mesh, sigma))
    return sparse.assemble(trip)


def load_vector(space, f, quad_degree=10):
    f = as_load(f)
    mesh = space.mesh
    rule = triangle_quadrature(quad_degree)
    pts = rule.physical_points(mesh.corners)
    phi = bernstein_polynomials(rule.points) @ bernstein_matrix(mesh)  # (nt, q, 9)
    wq = rule.weights[None, :] * mesh.areas[:, None]
    loc = np.einsum("tq,tq,tqi->ti", wq, f(pts), phi)
    return sparse.assemble_vector(space.element_dofs, loc, space.ndof)


def interpolate(space, field):
    """Nodal values and gradients of `field`."""
    X = space.mesh.vertices
    g = field.gradient(X)
    return np.column_stack([field.value(X), g]).ravel()


def discrete_gradient_nodes(space, coeffs):
    """P2 nodal values of the discrete gradient per element, shape (nt, 6, 2)."""
    G = gradient_map(space.mesh)
    u = np.asarray(coeffs)[space.element_dofs]
    return np.einsum("tai,ti->ta", G, u).reshape(-1, 6, 2)


def discrete_gradient_at(space, coeffs, tris, bary):
    """Discrete gradient and its Jacobian at barycentric points, per element."""
    nodes = discrete_gradient_nodes(space, coeffs)[tris]
    vals, grads = p2_shapes(space.mesh, tris, bary)
    theta = np.einsum("qk,tkc->tqc", vals, nodes)
    jac = np.einsum("tqkd,tkc->tqcd", grads, nodes)
    return theta, jac


def evaluate_many(space, coeffs, points, triangles=None):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if triangles is None:
        triangles, bary = locate_points(space.mesh, points)
    else:
        triangles = np.asarray(triangles)
        bary = np.array([space.mesh.barycentric(p)[t] for p, t in zip(points, triangles)])
    B = bernstein_matrix(space.mesh, triangles)
    u = np.asarray(coeffs)[space.element_dofs[triangles]]
    bp = bernstein_polynomials(bary)
    return np.einsum("pb,pbi,pi->p", bp, B, u)


def evaluate(space, coeffs, x):
    return float(evaluate_many(space, coeffs, np.reshape(x, (1, 2)))[0])


@dataclass
class DktSolution:
    space: DktSpace
    coefficients: np.ndarray
    sigma: float
    matrix: object
    rhs: np.ndarray
    report: object

    method = "dkt"

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


def solve_dkt(mesh, sigma=0.0, f=1.0, quad_degree=10, estimate_condition=True):
    space = DktSpace(mesh)
    A, b, C = assemble_system(space, sigma, f, quad_degree)
    u, report = sparse.solve_constrained(A, b, C, estimate_condition=estimate_condition)
    return DktSolution(space, u, sigma, A, b, report)
