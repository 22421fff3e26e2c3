"""Polynomial bases with exact derivatives and quadrature on triangles and edges.

Polynomials are stored as coefficient matrices over scaled monomials
``((x - c) / s)**p * ((y - c) / s)**q`` so that element bases stay well
conditioned for small triangles.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from math import ceil, factorial

import numpy as np
from scipy.special import roots_jacobi

from .errors import ArgumentError

DEFAULT_VOLUME_DEGREE = 10
DEFAULT_EDGE_DEGREE = 11
MAX_VOLUME_DEGREE = 12
MAX_EDGE_DEGREE = 11


def monomial_exponents(degree):
    """Exponents ``(p, q)`` of all monomials of total degree <= `degree`,
    ordered by total degree and then by increasing power of y."""
    return np.array([(k - j, j) for k in range(degree + 1) for j in range(k + 1)],
                    dtype=np.int64)


def poly_dimension(degree):
    return (degree + 1) * (degree + 2) // 2


def _falling(p, a):
    out = np.ones_like(p, dtype=float)
    for i in range(a):
        out = out * np.maximum(p - i, 0)
    return out


def monomials(exps, xi, eta, dx=0, dy=0):
    """Evaluate ``d^dx/dxi d^dy/deta xi^p eta^q`` for every exponent pair.

    `xi` and `eta` may have any (equal) shape; the result gets a trailing axis
    of length ``len(exps)``.
    """
    xi = np.asarray(xi, dtype=float)[..., None]
    eta = np.asarray(eta, dtype=float)[..., None]
    p, q = exps[:, 0], exps[:, 1]
    c = _falling(p, dx) * _falling(q, dy)
    pp = np.maximum(p - dx, 0)
    qq = np.maximum(q - dy, 0)
    return c * xi ** pp * eta ** qq


@dataclass(frozen=True)
class PolyBasis:
    """A family of polynomials of a common degree.

    Member ``i`` is ``sum_m coeffs[i, m] * mono_m((x - center) / scale)``.
    """

    degree: int
    coeffs: np.ndarray = None
    center: tuple = (0.0, 0.0)
    scale: float = 1.0
    exponents: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        exps = monomial_exponents(self.degree)
        object.__setattr__(self, "exponents", exps)
        if self.coeffs is None:
            object.__setattr__(self, "coeffs", np.eye(len(exps)))
        elif np.shape(self.coeffs)[-1] != len(exps):
            raise ArgumentError("coefficient matrix does not match the degree")

    def __len__(self):
        return self.coeffs.shape[0]

    def _local(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return ((pts[:, 0] - self.center[0]) / self.scale,
                (pts[:, 1] - self.center[1]) / self.scale)

    def derivative(self, points, dx=0, dy=0):
        """Values of ``d^dx/dx d^dy/dy`` of every member, shape (npts, n)."""
        xi, eta = self._local(points)
        m = monomials(self.exponents, xi, eta, dx, dy)
        return (m @ self.coeffs.T) / self.scale ** (dx + dy)

    def eval(self, points):
        """Return values (npts, n), gradients (npts, n, 2), Hessians (npts, n, 2, 2)."""
        v = self.derivative(points)
        g = np.stack([self.derivative(points, 1, 0),
                      self.derivative(points, 0, 1)], axis=-1)
        hxx = self.derivative(points, 2, 0)
        hxy = self.derivative(points, 1, 1)
        hyy = self.derivative(points, 0, 2)
        h = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
        return v, g, h


def eval_basis(basis, point):
    """Value, gradient and Hessian of every member of `basis` at one point."""
    v, g, h = basis.eval(np.asarray(point, dtype=float).reshape(1, 2))
    return v[0], g[0], h[0]


@dataclass(frozen=True)
class QuadRule:
    """Rule on a triangle; ``integral = area * sum(weights * g(points))``."""

    points: np.ndarray  # (nq, 3) barycentric
    weights: np.ndarray  # (nq,), sum 1
    exact_degree: int

    def physical_points(self, corners):
        """Map the rule to triangles with vertex arrays of shape (..., 3, 2)."""
        return np.einsum("qi,...id->...qd", self.points, corners)


@dataclass(frozen=True)
class EdgeQuadRule:
    """Rule on [0, 1]; ``integral = length * sum(weights * g(points))``."""

    points: np.ndarray
    weights: np.ndarray
    exact_degree: int


@lru_cache(maxsize=None)
def triangle_quadrature(exact_degree=DEFAULT_VOLUME_DEGREE):
    """Collapsed Gauss product rule (Gauss-Jacobi x Gauss-Legendre).

    Positive weights and interior points for every degree.
    """
    if not isinstance(exact_degree, (int, np.integer)) or not 1 <= exact_degree <= MAX_VOLUME_DEGREE:
        raise ArgumentError(f"unsupported triangle quadrature degree {exact_degree!r}")
    n = ceil((exact_degree + 1) / 2)
    tj, wj = roots_jacobi(n, 1.0, 0.0)
    tl, wl = np.polynomial.legendre.leggauss(n)
    s = (1.0 + tj) / 2.0
    r = (1.0 + tl) / 2.0
    S, R = np.meshgrid(s, r, indexing="ij")
    W = np.outer(wj / 4.0, wl / 2.0)
    x = (R * (1.0 - S)).ravel()
    y = S.ravel()
    w = 2.0 * W.ravel()
    bary = np.column_stack([1.0 - x - y, x, y])
    return QuadRule(bary, w, int(exact_degree))


@lru_cache(maxsize=None)
def edge_quadrature(exact_degree=DEFAULT_EDGE_DEGREE):
    """Gauss-Legendre rule on [0, 1] with ``ceil((degree + 1) / 2)`` points."""
    if not isinstance(exact_degree, (int, np.integer)) or not 1 <= exact_degree <= MAX_EDGE_DEGREE:
        raise ArgumentError(f"unsupported edge quadrature degree {exact_degree!r}")
    n = ceil((exact_degree + 1) / 2)
    t, w = np.polynomial.legendre.leggauss(n)
    return EdgeQuadRule((1.0 + t) / 2.0, w / 2.0, int(exact_degree))


def reference_monomial_integral(a, b):
    """Exact ``int_T x^a y^b`` over the unit reference triangle."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)
