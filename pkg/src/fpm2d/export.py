"""Field export: legacy VTK polygon files and per-point CSV tables.

Both writers format every float with ``%.17g`` so a value read back parses
to the identical double.  The layouts are described in ``docs/formats.md``.
"""

from __future__ import annotations

import os

import numpy as np

from .solve import FieldSolution

VTK_POLYGON = 7
CSV_HEADER = "x1,x2,u1,u2,s11,s22,s12"


def _f(v) -> str:
    return "%.17g" % float(v)


def _rows(a: np.ndarray) -> str:
    return "".join(" ".join(_f(v) for v in row) + "\n" for row in np.atleast_2d(a))


def vtk_text(solution: FieldSolution, title: str = "fpm2d field") -> str:
    """Legacy VTK unstructured grid with one polygon per subdomain.

    Subdomains do not share vertices: each cell lists its own copies so the
    point displacements can carry the jump between neighbouring trial
    functions.  Point data is the displacement of the owning subdomain's
    trial function at the vertex; cell data are the stress and displacement
    at the subdomain's own point and the point id.
    """
    part = solution.partition
    cells = part.cells
    sizes = np.array([len(c) for c in cells])
    verts = np.vstack(cells)
    disp = np.vstack([solution.displacement_in(p, c) for p, c in enumerate(cells)])
    n_v, n_c = len(verts), len(cells)
    title = title.replace("\n", " ")[:255]
    out = ["# vtk DataFile Version 3.0\n", title + "\n", "ASCII\n", "DATASET UNSTRUCTURED_GRID\n"]
    out.append(f"POINTS {n_v} double\n")
    out.append(_rows(np.column_stack([verts, np.zeros(n_v)])))
    out.append(f"CELLS {n_c} {int(sizes.sum() + n_c)}\n")
    start = 0
    for k in sizes:
        out.append(" ".join(str(i) for i in [k, *range(start, start + k)]) + "\n")
        start += k
    out.append(f"CELL_TYPES {n_c}\n")
    out.append(f"{VTK_POLYGON}\n" * n_c)
    out.append(f"POINT_DATA {n_v}\n")
    out.append("VECTORS displacement double\n")
    out.append(_rows(np.column_stack([disp, np.zeros(n_v)])))
    out.append(f"CELL_DATA {n_c}\n")
    out.append("SCALARS stress double 3\nLOOKUP_TABLE default\n")
    out.append(_rows(solution.stress))
    out.append("SCALARS point_displacement double 2\nLOOKUP_TABLE default\n")
    out.append(_rows(solution.u))
    out.append("SCALARS point_id int 1\nLOOKUP_TABLE default\n")
    out.append("".join(f"{p}\n" for p in range(n_c)))
    return "".join(out)


def write_vtk(path: str | os.PathLike, solution: FieldSolution, title: str = "fpm2d field") -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(vtk_text(solution, title))


def read_vtk(path: str | os.PathLike) -> dict:
    """Parse a file written by :func:`write_vtk` (used for round-trip checks)."""
    with open(path) as fh:
        tok = fh.read().split("\n")
    out: dict = {"title": tok[1]}
    words = " ".join(tok[4:]).split()
    i = 0

    def take(n, cast=float):
        nonlocal i
        vals = [cast(w) for w in words[i:i + n]]
        i += n
        return vals

    while i < len(words):
        w = words[i]
        if w == "POINTS":
            n = int(words[i + 1])
            i += 3
            out["points"] = np.array(take(3 * n)).reshape(n, 3)
        elif w == "CELLS":
            n, size = int(words[i + 1]), int(words[i + 2])
            i += 3
            flat = take(size, int)
            cells, k = [], 0
            for _ in range(n):
                cells.append(flat[k + 1:k + 1 + flat[k]])
                k += flat[k] + 1
            out["cells"] = cells
        elif w == "CELL_TYPES":
            n = int(words[i + 1])
            i += 2
            out["cell_types"] = take(n, int)
        elif w in ("POINT_DATA", "CELL_DATA"):
            out["_n"] = int(words[i + 1])
            i += 2
        elif w == "VECTORS":
            name = words[i + 1]
            i += 3
            out[name] = np.array(take(3 * out["_n"])).reshape(-1, 3)
        elif w == "SCALARS":
            name, kind, ncomp = words[i + 1], words[i + 2], int(words[i + 3])
            i += 6
            cast = int if kind == "int" else float
            out[name] = np.array(take(ncomp * out["_n"], cast)).reshape(out["_n"], ncomp)
        else:
            raise ValueError(f"unexpected token {w!r} in {path}")
    out.pop("_n", None)
    return out


def csv_text(solution: FieldSolution) -> str:
    """Per-point table: coordinates, nodal displacement and subdomain stress."""
    table = np.column_stack([solution.partition.points, solution.u, solution.stress])
    return CSV_HEADER + "\n" + "".join(",".join(_f(v) for v in row) + "\n" for row in table)


def write_csv(path: str | os.PathLike, solution: FieldSolution) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_text(solution))


def read_csv(path: str | os.PathLike) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
