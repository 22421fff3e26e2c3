import numpy as np
import pytest

from conftest import disk
from plateparadox.bench import ExactDiskSolution, p1_l2_error
from plateparadox.splitting import P1Space, mass_matrix, solve_splitting, solve_splitting_full


def test_dof_count():
    m = disk(3)
    C = P1Space(m).constraints()
    assert C.expansion().shape[1] == int(np.sum(~m.boundary_vertex_flags))


def test_mass_matrix_integrates_constants():
    m = disk(3)
    one = np.ones(m.nv)
    assert one @ (mass_matrix(m) @ one) == pytest.approx(m.area(), rel=1e-13)


def test_level5_midpoints():
    w, u = solve_splitting(disk(5))
    o = np.zeros((1, 2))
    assert abs(u(o)[0] - 3 / 64) <= 0.02 * 3 / 64
    assert abs(w(o)[0] - 0.25) <= 0.02 * 0.25
    assert w.vanishes_on_boundary() and u.vanishes_on_boundary()


def test_zero_load():
    w, u = solve_splitting(disk(2), 0.0)
    assert np.all(w.values == 0) and np.all(u.values == 0)


def test_factorization_reuse_is_exact():
    a = solve_splitting_full(disk(4), reuse_factorization=True)
    b = solve_splitting_full(disk(4), reuse_factorization=False)
    assert np.abs(a.u.values - b.u.values).max() <= 1e-13
    assert np.abs(a.w.values - b.w.values).max() <= 1e-13


def test_l2_rate_against_incorrect_limit():
    exact = ExactDiskSolution()
    errs = [p1_l2_error(solve_splitting_full(disk(L)), exact.u_inf) for L in range(2, 6)]
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert 1.8 <= rates[-1] <= 2.2


def test_incorrect_limit_is_independent_of_the_truth():
    u_h = solve_splitting_full(disk(4))
    exact = ExactDiskSolution()
    assert p1_l2_error(u_h, exact.u_inf) < 0.1 * p1_l2_error(u_h, exact.u)
