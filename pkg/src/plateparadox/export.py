"""Plain-text mesh files, VTU point fields and convergence CSV files.

All writers go through :func:`atomic_write_text` (write then rename).
"""
import csv
import io
import math
import os
import tempfile
from pathlib import Path

import numpy as np

CSV_HEADER = ["level", "h", "ndof", "midpoint", "delta_mp", "delta_h2", "energy",
              "rate_mp", "rate_h2"]


def atomic_write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(x):
    """17 significant digits; integers stay integers."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def mesh_text(mesh):
    lines = [f"{mesh.nv} {mesh.nt} {mesh.ns}"]
    for (x, y), b in zip(mesh.vertices, mesh.boundary_vertex_flags):
        lines.append(f"{fmt(x)} {fmt(y)} {int(b)}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    for (i, j), (t1, t2), (nx, ny) in zip(mesh.side_vertices, mesh.side_triangles, mesh.side_normals):
        lines.append(f"{i} {j} {t1} {t2} {fmt(nx)} {fmt(ny)}")
    return "\n".join(lines) + "\n"


def write_mesh_text(path, mesh):
    return atomic_write_text(path, mesh_text(mesh))


def read_mesh_text(path):
    """Return a dict of arrays as stored by :func:`write_mesh_text`."""
    with open(path) as fh:
        nv, nt, ns = map(int, fh.readline().split())
        rows = [fh.readline().split() for _ in range(nv + nt + ns)]
    v = np.array(rows[:nv], dtype=float)
    return {
        "vertices": v[:, :2],
        "boundary_flags": v[:, 2].astype(bool),
        "triangles": np.array(rows[nv:nv + nt], dtype=np.int64),
        "sides": np.array([r[:4] for r in rows[nv + nt:]], dtype=np.int64),
        "normals": np.array([r[4:] for r in rows[nv + nt:]], dtype=float),
    }


def vtu_text(mesh, point_data=None):
    point_data = point_data or {}
    out = io.StringIO()
    w = out.write
    w('<?xml version="1.0"?>\n')
    w('<VTKFile type="UnstructuredGrid" version="0.1" byte_order="LittleEndian">\n')
    w('<UnstructuredGrid>\n')
    w(f'<Piece NumberOfPoints="{mesh.nv}" NumberOfCells="{mesh.nt}">\n')
    w('<Points>\n<DataArray type="Float64" NumberOfComponents="3" format="ascii">\n')
    for x, y in mesh.vertices:
        w(f"{fmt(x)} {fmt(y)} 0\n")
    w('</DataArray>\n</Points>\n<Cells>\n')
    w('<DataArray type="Int64" Name="connectivity" format="ascii">\n')
    for tri in mesh.triangles:
        w(" ".join(map(str, tri)) + "\n")
    w('</DataArray>\n<DataArray type="Int64" Name="offsets" format="ascii">\n')
    w(" ".join(str(3 * (i + 1)) for i in range(mesh.nt)) + "\n")
    w('</DataArray>\n<DataArray type="UInt8" Name="types" format="ascii">\n')
    w(" ".join(["5"] * mesh.nt) + "\n")
    w('</DataArray>\n</Cells>\n')
    if point_data:
        w('<PointData>\n')
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (mesh.nv,):
                raise ValueError(f"point field {name!r} has shape {values.shape}")
            w(f'<DataArray type="Float64" Name="{name}" format="ascii">\n')
            w(" ".join(fmt(v) for v in values) + "\n</DataArray>\n")
        w('</PointData>\n')
    w('</Piece>\n</UnstructuredGrid>\n</VTKFile>\n')
    return out.getvalue()


def write_vtu(path, mesh, point_data=None):
    return atomic_write_text(path, vtu_text(mesh, point_data))


def rows_to_csv(rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    for r in rows:
        wr.writerow([fmt(getattr(r, k) if not isinstance(r, dict) else r[k]) for k in _FIELDS])
    return buf.getvalue()


_FIELDS = ["level", "h_max", "ndof", "midpoint", "delta_mp", "delta_h2", "energy",
           "rate_mp", "rate_h2"]


def write_csv(path, rows):
    return atomic_write_text(path, rows_to_csv(rows))


def read_csv(path):
    """Parse a convergence CSV into a list of dicts keyed by the header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        out = []
        for rec in reader:
            row = {}
            for k, v in zip(header, rec):
                row[k] = int(v) if k in ("level", "ndof") else float(v)
            out.append(row)
    return out
