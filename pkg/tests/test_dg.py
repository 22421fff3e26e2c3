import numpy as np
import pytest
import scipy.linalg

from conftest import disk, random_interior_points
from plateparadox import dg
from plateparadox.bench import ExactDiskSolution
from plateparadox.dg import DgParams, DgSpace
from plateparadox.errors import ArgumentError, SolverError
from plateparadox.fields import polynomial_field
from plateparadox.mesh import P1Field, Triangulation
from plateparadox.polyquad import edge_quadrature, triangle_quadrature


@pytest.fixture(scope="module")
def space2():
    return DgSpace(disk(2))


def quad_form(M, x):
    return float(x @ (M @ x))


def test_space_size():
    s = DgSpace(disk(2), 3)
    assert s.ndof == disk(2).nt * 10
    with pytest.raises(ArgumentError):
        DgSpace(disk(1), 1)
    for bad in (dict(gamma0=0.0), dict(gamma1=-1.0), dict(degree=1)):
        with pytest.raises(ArgumentError):
            DgParams(**bad)


def test_ah_symmetric(space2):
    A = dg.assemble_ah(space2)
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()


def test_one_triangle_volume_part():
    m = Triangulation(np.array([[0.0, 0], [2, 0], [0.5, 1.5]]), np.array([[0, 1, 2]]))
    s = DgSpace(m)
    c = dg.interpolate_p2(s, polynomial_field({(1, 1): 1.0}))
    assert quad_form(dg.volume_matrix(s), c) == pytest.approx(2 * m.area(), rel=1e-12)


def _oracle_ah(mesh, v):
    """(D2 v, D2 v) - 2 sum over boundary sides of int v d_n(lap v), for a globally
    smooth v (interior jumps vanish)."""
    rule = triangle_quadrature(10)
    H = v.hessian(rule.physical_points(mesh.corners))
    vol = np.sum(np.sum(H**2, axis=(-1, -2)) @ rule.weights * mesh.areas)
    er = edge_quadrature(11)
    bnd = 0.0
    for s in mesh.boundary_sides:
        p, q = mesh.vertices[mesh.side_vertices[s]]
        n = mesh.side_normals[s]
        pts = p + er.points[:, None] * (q - p)
        dlap = (n[0] * (v.derivative(pts, 3, 0) + v.derivative(pts, 1, 2))
                + n[1] * (v.derivative(pts, 2, 1) + v.derivative(pts, 0, 3)))
        bnd += mesh.side_lengths[s] * np.sum(er.weights * v(pts) * dlap)
    return vol - 2 * bnd


@pytest.mark.parametrize("degree,terms", [
    (2, {(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0}),
    (3, {(0, 0): 1.0, (3, 0): 0.5, (1, 2): -1.0, (0, 2): 0.3}),
])
def test_ah_of_smooth_field_matches_oracle(degree, terms):
    m = disk(2)
    s = DgSpace(m, degree)
    v = polynomial_field(terms)
    # least-squares projection at many points reproduces any polynomial of the degree
    rule = triangle_quadrature(6)
    pts = rule.physical_points(m.corners)
    (V,) = s.derivatives(np.arange(m.nt), pts, [(0, 0)])
    c = np.stack([np.linalg.lstsq(V[t], v(pts[t]), rcond=None)[0] for t in range(m.nt)]).ravel()
    assert quad_form(dg.assemble_ah(s), c) == pytest.approx(_oracle_ah(m, v), rel=1e-10)


def test_sh_examples(space2):
    m = space2.mesh
    rng = np.random.default_rng(5)
    vals = rng.standard_normal(m.nv)
    vals[m.boundary_vertices] = 0.0
    c = dg.interpolate_p2(space2, P1Field(m, vals))
    S = dg.assemble_sh(space2, DgParams())
    # value jumps vanish; interior gradient jumps of a P1 field do not
    S_value = dg.assemble_sh(space2, DgParams(gamma0=10.0, gamma1=1e-300))
    assert abs(quad_form(S_value, c)) <= 1e-10 * np.abs(vals).max() ** 2
    assert quad_form(S, c) > 0
    one = dg.interpolate_p2(space2, polynomial_field({(0, 0): 1.0}))
    hs = m.side_lengths[m.boundary_sides]
    assert quad_form(S, one) == pytest.approx(10 * np.sum(hs**-2.0), rel=1e-12)
    x = rng.standard_normal(space2.ndof)
    S20 = dg.assemble_sh(space2, DgParams(gamma0=20.0))
    assert quad_form(S20, x) - quad_form(S, x) == pytest.approx(quad_form(S_value, x), rel=1e-10)


@pytest.mark.parametrize("level", [1, 2])
def test_sh_psd(level):
    S = dg.assemble_sh(DgSpace(disk(level)), DgParams()).toarray()
    assert np.allclose(S, S.T, atol=1e-12 * abs(S).max())
    assert np.linalg.eigvalsh(S).min() >= -1e-10 * abs(S).max()


def test_interpolate_p2_reproduces_quadratics(space2, rng):
    q = polynomial_field({(2, 0): 1.5, (1, 1): -1.0, (0, 1): 2.0, (0, 0): 0.5})
    c = dg.interpolate_p2(space2, q)
    pts, tris = random_interior_points(space2.mesh, 40, rng)
    np.testing.assert_allclose(dg.evaluate_many(space2, c, pts, tris), q(pts), atol=1e-12)


def test_interpolant_of_exact_solution_converges():
    u = ExactDiskSolution().u
    traces, stabs = [], []
    for L in range(1, 6):
        s = DgSpace(disk(L))
        c = dg.interpolate_p2(s, u)
        traces.append(dg.boundary_trace_norm(s, c))
        stabs.append(quad_form(dg.assemble_sh(s), c))
    rates = np.log2(np.array(traces[:-1]) / traces[1:])
    assert 1.7 <= rates[-1] <= 2.3
    assert all(b < a for a, b in zip(stabs, stabs[1:]))


def test_dg_norm_examples(space2):
    p = DgParams()
    assert dg.dg_norm(space2, p, np.zeros(space2.ndof)) == 0.0
    aff = dg.interpolate_p2(space2, polynomial_field({(0, 0): 0.5, (1, 0): 1.0}))
    S = dg.assemble_sh(space2, p)
    assert dg.dg_norm(space2, p, aff) == pytest.approx(np.sqrt(quad_form(S, aff)), rel=1e-10)


@pytest.mark.parametrize("level", [1, 2, 3])
def test_system_positive_definite(level):
    s = DgSpace(disk(level))
    A = (dg.assemble_ah(s) + dg.assemble_sh(s)).toarray()
    assert np.linalg.eigvalsh(0.5 * (A + A.T)).min() > 0


@pytest.mark.parametrize("level", [1, 2])
def test_coercivity_constant(level):
    s = DgSpace(disk(level))
    A = (dg.assemble_ah(s) + dg.assemble_sh(s)).toarray()
    N = (dg.volume_matrix(s) + dg.assemble_sh(s)).toarray()
    alpha = scipy.linalg.eigh(A, N, eigvals_only=True).min()
    assert alpha >= 0.01


def test_sigma_rejected():
    with pytest.raises(ArgumentError):
        dg.solve_dg(disk(1), sigma=0.3)


def test_small_penalty_reports_indefiniteness():
    with pytest.raises(SolverError, match="gamma"):
        dg.solve_dg(disk(2), DgParams(0.01, 0.01))


def test_zero_load():
    sol = dg.solve_dg(disk(2), f=0.0)
    assert np.all(sol.coefficients == 0)


def test_level5_midpoint():
    sol = dg.solve_dg(disk(5), estimate_condition=False)
    assert abs(sol(np.zeros((1, 2)))[0] - 5 / 64) <= 0.03 * 5 / 64


def test_weak_boundary_condition_and_hessian_stability():
    u = ExactDiskSolution().u
    traces, herrs = [], []
    rule = triangle_quadrature(6)
    for L in range(1, 5):
        sol = dg.solve_dg(disk(L), estimate_condition=False)
        traces.append(dg.boundary_trace_norm(sol.space, sol.coefficients))
        pts, hxx, hxy, hyy = dg.broken_hessian_at(sol.space, sol.coefficients, rule)
        H = u.hessian(pts)
        inner = np.hypot(*sol.space.mesh.centroids.T) <= 0.8
        e = (hxx - H[..., 0, 0]) ** 2 + 2 * (hxy - H[..., 0, 1]) ** 2 + (hyy - H[..., 1, 1]) ** 2
        herrs.append(np.sqrt(np.sum((e @ rule.weights * sol.space.mesh.areas)[inner])))
    assert all(b < a for a, b in zip(traces, traces[1:]))
    assert all(b < a for a, b in zip(herrs, herrs[1:]))
