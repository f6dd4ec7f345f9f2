"""Field and report writers: legacy VTK, coefficient CSV, key=value and CSV reports."""

import csv

import numpy as np

from . import elements as el


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_vtk(path, mesh, u=None, p=None, title="cascade stokes"):
    """Legacy ASCII unstructured grid on the mesh vertices.

    The velocity is written from the vertex subset of the P2 nodes.
    """
    nV = mesh.n_vertices
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {nV} double")
    lines += [f"{_num(x)} {_num(y)} 0" for x, y in mesh.vertices]
    nT = mesh.n_triangles
    lines.append(f"CELLS {nT} {4 * nT}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(f"CELL_TYPES {nT}")
    lines += ["5"] * nT
    if u is not None or p is not None:
        lines.append(f"POINT_DATA {nV}")
    if u is not None:
        lines.append("VECTORS velocity double")
        lines += [f"{_num(a)} {_num(b)} 0" for a, b in np.asarray(u)[:nV]]
    if p is not None:
        lines += ["SCALARS pressure double 1", "LOOKUP_TABLE default"]
        lines += [_num(v) for v in np.asarray(p)[:nV]]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_coefficients(path, mesh, u, p):
    """All P2 velocity and P1 pressure coefficients; pressure is blank on midpoint nodes."""
    X = el.node_coordinates(mesh)
    nV = mesh.n_vertices
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["node", "kind", "x1", "x2", "u1", "u2", "p"])
        for i, (x, uu) in enumerate(zip(X, u)):
            kind = "vertex" if i < nV else "midpoint"
            pv = _num(p[i]) if i < nV else ""
            wr.writerow([i, kind, _num(x[0]), _num(x[1]), _num(uu[0]), _num(uu[1]), pv])


def write_key_values(path, values):
    with open(path, "w") as fh:
        for k, v in values.items():
            fh.write(f"{k}={_num(v)}\n")


def write_csv_rows(path, rows):
    """Rows of dicts sharing the first row's keys, full precision."""
    rows = list(rows)
    header = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_num(row[k]) for k in header])
