import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from conftest import disk
from plateparadox import export
from plateparadox.bench import ConvergenceRow


def test_mesh_text_roundtrip(tmp_path):
    m = disk(2)
    path = export.write_mesh_text(tmp_path / "m.txt", m)
    lines = path.read_text().splitlines()
    assert lines[0] == f"{m.nv} {m.nt} {m.ns}"
    assert len(lines) == 1 + m.nv + m.nt + m.ns
    d = export.read_mesh_text(path)
    assert np.array_equal(d["vertices"], m.vertices)
    assert np.array_equal(d["triangles"], m.triangles)
    assert np.array_equal(d["boundary_flags"], m.boundary_vertex_flags)
    assert np.array_equal(d["sides"][:, :2], m.side_vertices)
    assert np.array_equal(d["sides"][:, 2:], m.side_triangles)
    assert np.array_equal(d["normals"], m.side_normals)
    assert np.all(d["sides"][m.boundary_sides, 3] == -1)


def test_vtu_is_valid_xml(tmp_path):
    m = disk(1)
    path = export.write_vtu(tmp_path / "m.vtu", m, {"u": np.arange(m.nv, dtype=float)})
    root = ET.parse(path).getroot()
    piece = root.find("UnstructuredGrid/Piece")
    assert piece.get("NumberOfPoints") == str(m.nv)
    arrays = {a.get("Name"): a for a in root.iter("DataArray")}
    assert arrays["u"].get("type") == "Float64"
    np.testing.assert_array_equal(np.array(arrays["u"].text.split(), dtype=float), np.arange(m.nv))
    conn = np.array(arrays["connectivity"].text.split(), dtype=int).reshape(-1, 3)
    assert np.array_equal(conn, m.triangles)
    with pytest.raises(ValueError):
        export.vtu_text(m, {"bad": np.zeros(3)})


def test_csv_roundtrip_full_precision(tmp_path):
    rows = [ConvergenceRow(1, 0.1, 10, 1 / 3, 2e-17, math.nan, -0.05),
            ConvergenceRow(2, 0.05, 40, math.pi, 1e-3, 0.5, -0.06, 1.5, math.nan)]
    path = export.write_csv(tmp_path / "s.csv", rows)
    assert path.read_text().splitlines()[0] == "level,h,ndof,midpoint,delta_mp,delta_h2,energy,rate_mp,rate_h2"
    back = export.read_csv(path)
    assert back[0]["midpoint"] == 1 / 3 and back[1]["midpoint"] == math.pi
    assert back[0]["delta_mp"] == 2e-17
    assert math.isnan(back[0]["delta_h2"]) and back[1]["rate_mp"] == 1.5
    assert back[1]["ndof"] == 40 and isinstance(back[1]["level"], int)


def test_atomic_write_leaves_no_temporaries(tmp_path):
    export.atomic_write_text(tmp_path / "sub" / "a.txt", "one")
    export.atomic_write_text(tmp_path / "sub" / "a.txt", "two")
    assert (tmp_path / "sub" / "a.txt").read_text() == "two"
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["a.txt"]


def test_read_csv_rejects_foreign_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        export.read_csv(p)
