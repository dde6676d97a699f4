from __future__ import annotations

import numpy as np
from numpy.testing import assert_array_equal

from fpm2d.assembly import Discretization
from fpm2d.benchmarks import patch
from fpm2d.export import CSV_HEADER, csv_text, read_csv, read_vtk, vtk_text, write_csv, write_vtk
from fpm2d.solve import solve


def _sol():
    return solve(Discretization(patch("9", layout="random")))


def test_vtk_round_trip_is_bit_exact(tmp_path):
    sol = _sol()
    write_vtk(tmp_path / "f.vtk", sol, "demo")
    data = read_vtk(tmp_path / "f.vtk")
    assert data["title"] == "demo"
    verts = np.vstack(sol.partition.cells)
    assert_array_equal(data["points"][:, :2], verts)
    assert all(t == 7 for t in data["cell_types"])
    assert [len(c) for c in data["cells"]] == [len(c) for c in sol.partition.cells]
    assert_array_equal(data["stress"], sol.stress)
    assert_array_equal(data["point_displacement"], sol.u)
    assert_array_equal(data["point_id"].ravel(), np.arange(sol.partition.n_points))
    # vertex displacement comes from the owning cell's trial function
    first = sol.displacement_in(0, sol.partition.cells[0])
    assert_array_equal(data["displacement"][:len(first), :2], first)


def test_vtk_header_layout():
    lines = vtk_text(_sol()).splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    assert lines[4].startswith("POINTS ") and lines[4].endswith(" double")


def test_csv_round_trip_is_bit_exact(tmp_path):
    sol = _sol()
    write_csv(tmp_path / "f.csv", sol)
    text = (tmp_path / "f.csv").read_text()
    assert text.splitlines()[0] == CSV_HEADER
    table = read_csv(tmp_path / "f.csv")
    assert_array_equal(table, np.column_stack([sol.partition.points, sol.u, sol.stress]))


def test_outputs_are_deterministic():
    assert csv_text(_sol()) == csv_text(_sol())
    assert vtk_text(_sol()) == vtk_text(_sol())
