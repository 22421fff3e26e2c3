"""Operator splitting into two P1 Poisson problems.

Solving ``-lap w = f`` and ``-lap u = w`` with homogeneous Dirichlet data
imposes ``u = lap u = 0``; on polygons this converges to the wrong limit.
"""
from dataclasses import dataclass

import numpy as np

from . import sparse
from .fields import as_load
from .mesh import P1Field
from .polyquad import triangle_quadrature

MASS_DEGREE = 4


class P1Space:
    def __init__(self, mesh):
        self.mesh = mesh
        self.ndof = mesh.nv
        self.element_dofs = mesh.triangles

    def constraints(self):
        C = sparse.LinearConstraintSet(self.ndof)
        C.fix(self.mesh.boundary_vertices)
        return C


def stiffness_matrix(mesh):
    g = mesh.bary_gradients
    K = np.einsum("tid,tjd->tij", g, g) * mesh.areas[:, None, None]
    trip = sparse.TripletList(mesh.nv)
    trip.add_blocks(mesh.triangles, K)
    return sparse.assemble(trip)


def mass_matrix(mesh, quad_degree=MASS_DEGREE):
    rule = triangle_quadrature(quad_degree)
    local = np.einsum("q,qi,qj->ij", rule.weights, rule.points, rule.points)
    trip = sparse.TripletList(mesh.nv)
    trip.add_blocks(mesh.triangles, mesh.areas[:, None, None] * local)
    return sparse.assemble(trip)


def load_vector(mesh, f, quad_degree=MASS_DEGREE):
    f = as_load(f)
    rule = triangle_quadrature(quad_degree)
    pts = rule.physical_points(mesh.corners)
    loc = np.einsum("q,tq,qi->ti", rule.weights, f(pts), rule.points) * mesh.areas[:, None]
    return sparse.assemble_vector(mesh.triangles, loc, mesh.nv)


@dataclass
class SplittingSolution:
    mesh: object
    w: P1Field
    u: P1Field
    mass: object
    rhs: np.ndarray
    reports: tuple

    method = "splitting"

    def __call__(self, points):
        return self.u(points)

    @property
    def coefficients(self):
        return self.u.values

    @property
    def ndof(self):
        return self.mesh.nv

    def energy(self):
        """``||w_h||^2 / 2 - (f, u_h)``, the splitting analogue of the plate energy."""
        w = self.w.values
        return 0.5 * w @ (self.mass @ w) - self.rhs @ self.u.values


def solve_splitting(mesh, f=1.0, estimate_condition=False):
    """Return ``(w_h, u_h)`` as P1 fields, sharing one factorization."""
    sol = solve_splitting_full(mesh, f, estimate_condition)
    return sol.w, sol.u


def solve_splitting_full(mesh, f=1.0, estimate_condition=False, reuse_factorization=True):
    space = P1Space(mesh)
    K = stiffness_matrix(mesh)
    M = mass_matrix(mesh)
    b = load_vector(mesh, f)
    C = space.constraints()
    Kr, br, Z = sparse.reduce(K, b, C)
    fac = sparse.Factorization(Kr) if reuse_factorization else None
    yw, rep_w = sparse.solve(Kr, br, estimate_condition, factorization=fac)
    w = Z @ yw
    yu, rep_u = sparse.solve(Kr, Z.T @ (M @ w), estimate_condition, factorization=fac)
    u = Z @ yu
    return SplittingSolution(mesh, P1Field(mesh, w), P1Field(mesh, u), M, b, (rep_w, rep_u))
