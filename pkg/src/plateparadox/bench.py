"""Exact disk solutions, error metrics, curvature diagnostics and the
convergence-study driver."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import argyris, dg, dkt, splitting
from .argyris import BcMode, check_sigma
from .dg import DgParams
from .errors import ArgumentError, DomainError, PlateError, UnsupportedError
from .fields import AnalyticField
from .mesh import build_disk_mesh
from .polyquad import triangle_quadrature

log = logging.getLogger(__name__)

DOMAIN_TOL = 1e-12
METHODS = ("argyris", "dkt", "dg", "splitting")


def radial_quartic(a, b, c, d, name=""):
    """Field ``(a - b r^2 + c r^4) / d`` with closed-form derivatives."""

    def value(p):
        r2 = np.sum(np.asarray(p, dtype=float) ** 2, axis=-1)
        return (a - b * r2 + c * r2 * r2) / d

    def gradient(p):
        p = np.asarray(p, dtype=float)
        r2 = np.sum(p * p, axis=-1)
        return ((-2 * b + 4 * c * r2) / d)[..., None] * p

    def hessian(p):
        p = np.asarray(p, dtype=float)
        r2 = np.sum(p * p, axis=-1)
        iso = ((-2 * b + 4 * c * r2) / d)[..., None, None] * np.eye(2)
        return iso + (8 * c / d) * np.einsum("...i,...j->...ij", p, p)

    return AnalyticField(value, gradient, hessian, name)


class ExactDiskSolution:
    """Simply supported solution ``u``, the splitting limit ``u_inf`` and the
    clamped solution on the unit disk, all for the load f = 1."""

    kappa = 1.0

    def __init__(self, sigma=0.0):
        self.sigma = check_sigma(sigma)
        s = self.sigma
        self.u = radial_quartic(5 + s, 6 + 2 * s, 1 + s, 64 * (1 + s), "u")
        self.u_inf = radial_quartic(3.0, 4.0, 1.0, 64.0, "u_inf")
        self.clamped = radial_quartic(1.0, 2.0, 1.0, 64.0, "u_clamped")

    def values(self, x):
        """Return ``(u, grad u, D2 u, u_inf)`` at a point with |x| <= 1."""
        x = np.asarray(x, dtype=float).reshape(2)
        if np.hypot(*x) > 1.0 + DOMAIN_TOL:
            raise DomainError(f"point {tuple(x)} lies outside the unit disk")
        return (float(self.u.value(x)), self.u.gradient(x), self.u.hessian(x),
                float(self.u_inf.value(x)))


def exact_values(sol, x):
    return sol.values(x)


def midpoint_value(solution):
    return float(np.asarray(solution(np.zeros((1, 2))))[0])


def midpoint_error(solution, sol, target="exact"):
    if target not in ("exact", "incorrect"):
        raise ArgumentError(f"target must be 'exact' or 'incorrect', got {target!r}")
    ref = sol.u if target == "exact" else sol.u_inf
    return abs(midpoint_value(solution) - float(ref.value(np.zeros(2))))


def interpolant(solution, fld):
    """The method's own canonical interpolant of `fld`."""
    m = solution.method
    if m == "argyris":
        return argyris.interpolate_canonical(solution.space, fld)
    if m == "dkt":
        return dkt.interpolate(solution.space, fld)
    if m == "dg":
        return dg.interpolate_p2(solution.space, fld)
    raise UnsupportedError(f"no discrete H2 form for the {m} method")


def h2_error(solution, sol):
    """``sqrt(a_h(e, e))`` with ``e = u_h - I_h u``."""
    e = np.asarray(solution.coefficients) - interpolant(solution, sol.u)
    return float(np.sqrt(max(e @ (solution.energy_form @ e), 0.0)))


def p1_l2_error(solution, fld):
    """``||u_h - I_h^1 fld||`` in L2 for a splitting solution (exact for P1 data)."""
    e = solution.u.values - fld.value(solution.mesh.vertices)
    return float(np.sqrt(e @ (solution.mass @ e)))


# curvature identity ---------------------------------------------------------

CIRCLE_SAMPLES = 64
CIRCLE_POINTS = 512


@dataclass
class CurvatureCheck:
    lhs: float
    rhs: float
    gap: float
    area: float
    level: int


def _circle(n):
    t = 2 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(t), np.sin(t)])


def det_integral(mesh, v, quad_degree=10):
    rule = triangle_quadrature(quad_degree)
    H = v.hessian(rule.physical_points(mesh.corners))
    det = H[..., 0, 0] * H[..., 1, 1] - H[..., 0, 1] * H[..., 1, 0]
    return float(np.sum(det @ rule.weights * mesh.areas))


def boundary_curvature_integral(v, n=CIRCLE_POINTS, kappa=1.0):
    """``(1/2) int_{S^1} kappa (d_n v)^2 ds``; the periodic trapezoid rule is
    exact for trigonometric polynomials of degree below n."""
    p = _circle(n)
    dn = np.einsum("qd,qd->q", v.gradient(p), p)
    return float(0.5 * kappa * np.sum(dn**2) * 2 * np.pi / n)


def curvature_identity_check(v, level, quad_degree=10, mesh=None):
    mesh = mesh or build_disk_mesh(level)
    trace = np.abs(v.value(_circle(CIRCLE_SAMPLES))).max()
    if trace > 1e-10:
        raise ArgumentError(f"field does not vanish on the unit circle (max |v| = {trace:.3g})")
    lhs = det_integral(mesh, v, quad_degree)
    rhs = boundary_curvature_integral(v)
    return CurvatureCheck(lhs, rhs, abs(lhs - rhs), mesh.area(), mesh.level)


def energy_identity_gap(level, sigma=0.0, seed=0):
    """Relative gap of ``s/2|lap v|^2 + (1-s)/2|D2 v|^2 = |lap v|^2/2 - (1-s) int det``
    for a random Argyris function."""
    space = argyris.ArgyrisSpace(build_disk_mesh(level))
    v = np.random.default_rng(seed).standard_normal(space.ndof)
    hh, ll, det = argyris.hessian_integrals(space, v)
    left = 0.5 * sigma * ll + 0.5 * (1 - sigma) * hh
    right = 0.5 * ll - (1 - sigma) * det
    return abs(left - right) / abs(left)


def det_zero_ratio(level, f=1.0):
    """``|int det D2 u_h| / ||D2 u_h||^2`` for the full-support Argyris solution."""
    sol = argyris.solve_argyris(build_disk_mesh(level), 0.0, f, BcMode.full(),
                                estimate_condition=False)
    hh, _, det = argyris.hessian_integrals(sol.space, sol.coefficients)
    return abs(det) / hh


# convergence studies --------------------------------------------------------

@dataclass
class PlateProblem:
    method: str = "argyris"
    sigma: float = 0.0
    f: object = 1.0
    bc: BcMode = None
    dg_params: DgParams = None
    quad_degree: int = 10

    def __post_init__(self):
        if self.method not in METHODS:
            raise ArgumentError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        self.sigma = check_sigma(self.sigma)
        if self.bc is not None and self.method != "argyris":
            raise ArgumentError("boundary-condition modes apply to the argyris method only")
        if self.dg_params is not None and self.method != "dg":
            raise ArgumentError("DG parameters apply to the dg method only")
        if self.method == "dg" and self.sigma != 0.0:
            raise ArgumentError("the dg method requires sigma = 0")
        if self.method == "splitting" and self.sigma != 0.0:
            log.info("splitting ignores sigma")
        if self.method == "argyris" and self.bc is None:
            self.bc = BcMode.nodal()
        if self.method == "dg" and self.dg_params is None:
            self.dg_params = DgParams()

    @property
    def label(self):
        if self.method == "argyris":
            return f"argyris-{self.bc.label}"
        return self.method


def solve_problem(problem, mesh, estimate_condition=False):
    m, q = problem.method, problem.quad_degree
    if m == "argyris":
        return argyris.solve_argyris(mesh, problem.sigma, problem.f, problem.bc, q,
                                     estimate_condition=estimate_condition)
    if m == "dkt":
        return dkt.solve_dkt(mesh, problem.sigma, problem.f, q, estimate_condition=estimate_condition)
    if m == "dg":
        return dg.solve_dg(mesh, problem.dg_params, problem.f, 0.0, q,
                           estimate_condition=estimate_condition)
    return splitting.solve_splitting_full(mesh, problem.f, estimate_condition)


@dataclass
class ConvergenceRow:
    level: int
    h_max: float
    ndof: int
    midpoint: float
    delta_mp: float
    delta_h2: float
    energy: float
    rate_mp: float = math.nan
    rate_h2: float = math.nan
    error: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.error


def _rate(prev, cur):
    if not (prev > 0 and cur > 0) or not (math.isfinite(prev) and math.isfinite(cur)):
        return math.nan
    return math.log2(prev / cur)


def study_row(problem, level, sol=None):
    sol = sol or ExactDiskSolution(problem.sigma)
    mesh = build_disk_mesh(level)
    h = mesh.h_max
    try:
        s = solve_problem(problem, mesh)
    except PlateError as exc:
        log.warning("level %d failed: %s", level, exc)
        return ConvergenceRow(level, h, 0, math.nan, math.nan, math.nan, math.nan,
                              error=f"{type(exc).__name__}: {exc}")
    mp = midpoint_value(s)
    target = "incorrect" if problem.method == "splitting" else "exact"
    d_mp = midpoint_error(s, sol, target)
    if problem.method == "splitting":
        d_h2 = math.nan
        extra = {"l2_error": p1_l2_error(s, sol.u_inf)}
    else:
        d_h2 = h2_error(s, sol)
        extra = {}
    return ConvergenceRow(level, h, int(s.ndof), mp, d_mp, d_h2, float(s.energy()), extra=extra)


def convergence_study(problem, levels):
    """One row per level; failures are recorded in ``row.error``."""
    levels = list(levels)
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ArgumentError("levels must be a nonempty increasing sequence")
    sol = ExactDiskSolution(problem.sigma)
    rows = []
    for lev in levels:
        row = study_row(problem, lev, sol)
        if rows:
            row.rate_mp = _rate(rows[-1].delta_mp, row.delta_mp)
            row.rate_h2 = _rate(rows[-1].delta_h2, row.delta_h2)
            if "l2_error" in row.extra and "l2_error" in rows[-1].extra:
                row.extra["rate_l2"] = _rate(rows[-1].extra["l2_error"], row.extra["l2_error"])
        log.info("%s level %d: u_h(0)=%.10g delta_mp=%.3e delta_h2=%.3e",
                 problem.label, lev, row.midpoint, row.delta_mp, row.delta_h2)
        rows.append(row)
    return rows


def vertex_values(solution):
    """Sample a solution at mesh vertices (P1 field for VTU output)."""
    if solution.method == "splitting":
        return solution.u.values
    m = solution.space.mesh
    c = np.asarray(solution.coefficients)
    if solution.method == "argyris":
        return c[solution.space.vertex_dof(np.arange(m.nv))]
    if solution.method == "dkt":
        return c[solution.space.value_dofs(np.arange(m.nv))]
    vals = np.zeros(m.nv)
    cnt = np.zeros(m.nv)
    tris = np.repeat(np.arange(m.nt), 3)
    pts = m.vertices[m.triangles.ravel()]
    v = dg.evaluate_many(solution.space, solution.coefficients, pts, tris)
    np.add.at(vals, m.triangles.ravel(), v)
    np.add.at(cnt, m.triangles.ravel(), 1)
    return vals / cnt
