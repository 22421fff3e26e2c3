import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import disk
from plateparadox.errors import ArgumentError, CapacityError, NotFoundError
from plateparadox.mesh import (MAX_LEVEL, build_disk_mesh, correction_map, locate_point,
                               mesh_from_reference, p1_interpolate, red_refine, reference_mesh)

A = 1 / math.sqrt(2)


def test_correction_map_examples():
    np.testing.assert_allclose(correction_map([A, A]), [A, A], atol=1e-15)
    assert np.array_equal(correction_map([0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_allclose(correction_map([0.5, 0.25]), [0.632456, 0.316228], atol=1e-6)
    assert np.hypot(*correction_map([0.5, 0.25])) == pytest.approx(math.sqrt(2) * 0.5, rel=1e-14)


@given(st.floats(-A, A), st.floats(-A, A))
def test_correction_map_keeps_rays_and_sends_square_to_circle(x, y):
    z = np.array([x, y])
    w = correction_map(z)
    r2, rinf = np.hypot(x, y), max(abs(x), abs(y))
    if r2 == 0:
        assert np.all(w == 0)
        return
    assert np.hypot(*w) == pytest.approx(math.sqrt(2) * rinf, rel=1e-12)
    assert abs(w[0] * y - w[1] * x) <= 1e-12  # same ray
    assert w @ z >= 0
    edge = (z / rinf) * A
    assert np.hypot(*correction_map(edge)) == pytest.approx(1.0, abs=1e-14)


def test_base_and_first_level_counts():
    m0 = disk(0)
    assert (m0.nv, m0.nt, m0.ns) == (5, 4, 8)
    m1 = disk(1)
    assert (m1.nv, m1.nt) == (13, 16)
    b = m1.boundary_vertices
    assert len(b) == 8
    np.testing.assert_allclose(np.hypot(*m1.vertices[b].T), 1.0, atol=1e-14)


@pytest.mark.parametrize("level", range(0, 6))
def test_mesh_invariants(level):
    m = disk(level)
    assert m.nt == 4 ** (level + 1)
    assert m.nv - m.ns + m.nt == 1
    assert np.all(m.areas > 0)
    counts = np.bincount(m.side_triangles[m.side_triangles >= 0], minlength=m.nt)
    assert np.all(counts == 3)
    is_b = m.side_triangles[:, 1] < 0
    assert np.all(m.side_triangles[~is_b, 0] < m.side_triangles[~is_b, 1])
    np.testing.assert_allclose(np.hypot(*m.side_normals.T), 1.0, atol=1e-14)
    r = np.hypot(*m.vertices[m.boundary_vertices].T)
    assert np.abs(r - 1).max() <= 1e-12
    assert np.any(np.all(m.vertices == 0.0, axis=1))
    st_ = m.stats()
    assert st_.h_min <= st_.h_max and st_.min_angle > 0


@pytest.mark.parametrize("level", [1, 3])
def test_normals_point_from_lower_to_higher_triangle_and_outward(level):
    m = disk(level)
    mid = 0.5 * (m.vertices[m.side_vertices[:, 0]] + m.vertices[m.side_vertices[:, 1]])
    d1 = np.einsum("sd,sd->s", m.centroids[m.side_triangles[:, 0]] - mid, m.side_normals)
    assert np.all(d1 < 0)
    ins = m.interior_sides
    d2 = np.einsum("sd,sd->s", m.centroids[m.side_triangles[ins, 1]] - mid[ins], m.side_normals[ins])
    assert np.all(d2 > 0)
    bs = m.boundary_sides
    assert np.all(np.einsum("sd,sd->s", mid[bs], m.side_normals[bs]) > 0)


def test_level_limits():
    with pytest.raises(CapacityError):
        build_disk_mesh(MAX_LEVEL + 1)
    with pytest.raises(ArgumentError):
        build_disk_mesh(-1)


def test_mesh_is_read_only():
    with pytest.raises(ValueError):
        disk(1).vertices[0, 0] = 1.0


def test_area_defect_rate():
    defects = [math.pi - disk(L).area() for L in range(2, 7)]
    assert all(b < a for a, b in zip(defects, defects[1:]))
    hs = [disk(L).h_max for L in range(2, 7)]
    for i in range(len(defects) - 1):
        slope = math.log(defects[i] / defects[i + 1]) / math.log(hs[i] / hs[i + 1])
        assert 1.8 <= slope <= 2.2


def test_shape_regularity_bounded():
    vals = [disk(L).stats().shape_regularity for L in range(0, 7)]
    assert max(vals) <= 2 * vals[2]


def test_refine_then_map_reproducible():
    ref = reference_mesh(2)
    stored = red_refine(red_refine(ref))
    direct = build_disk_mesh(4)
    again = mesh_from_reference(stored)
    assert np.array_equal(direct.vertices, again.vertices)
    assert np.array_equal(direct.triangles, again.triangles)
    assert np.array_equal(direct.reference_vertices, stored.vertices)


@pytest.mark.parametrize("level", [0, 2, 4])
def test_locate_origin_is_a_vertex(level):
    m = disk(level)
    t, lam = locate_point(m, [0.0, 0.0])
    assert lam.max() == pytest.approx(1.0, abs=1e-12)
    assert m.vertices[m.triangles[t, np.argmax(lam)]] == pytest.approx([0.0, 0.0], abs=0)


def test_locate_centroid_and_shared_side():
    m = disk(2)
    for t in (0, 17, 63):
        tt, lam = locate_point(m, m.centroids[t])
        assert tt == t
        np.testing.assert_allclose(lam, 1 / 3, atol=1e-12)
    s = m.interior_sides[5]
    p = m.vertices[m.side_vertices[s]].mean(axis=0)
    t, lam = locate_point(m, p)
    assert t == min(m.side_triangles[s])
    assert lam.min() == pytest.approx(0.0, abs=1e-12)
    assert lam.sum() == pytest.approx(1.0)


def test_locate_outside():
    with pytest.raises(NotFoundError):
        locate_point(disk(2), [1.0, 1.0])


def test_p1_interpolation(rng):
    m = disk(3)
    pts = m.centroids[rng.integers(0, m.nt, 30)] * 0.999
    one = p1_interpolate(m, np.ones(m.nv))
    np.testing.assert_allclose(one(pts), 1.0, atol=1e-14)
    lin = p1_interpolate(m, lambda p: p[..., 0])
    np.testing.assert_allclose(lin(pts), pts[:, 0], atol=1e-14)
    np.testing.assert_allclose(lin(m.vertices[:7]), m.vertices[:7, 0], atol=1e-15)
    with pytest.raises(ArgumentError):
        p1_interpolate(m, np.ones(m.nv - 1))


def test_p1_boundary_vanishing():
    from plateparadox.bench import ExactDiskSolution
    m = disk(3)
    u = p1_interpolate(m, ExactDiskSolution().u.value(m.vertices))
    assert u.vanishes_on_boundary(tol=1e-15)
    assert not p1_interpolate(m, np.ones(m.nv)).vanishes_on_boundary()
