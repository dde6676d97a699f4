from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from fpm2d.assembly import Discretization
from fpm2d.meshio import MeshFormatError, mesh_model, parse_fpm, parse_inp, read_mesh
from fpm2d.solve import solve

DATA = Path(__file__).resolve().parents[1] / "data"

SQUARE = """\
# two quads
MATERIAL 10 0.25 strain
NODE
10 0 0
11 1 0
12 2 0
13 0 1
14 1 1
15 2 1
ELEMENT
1 10 11 14 13
2 11 12 15 14
EDGESET fixed
10 13
EDGESET load
12 15
BC fixed u1=0 u2=0
BC load t1=1
"""


def test_parse_text_format():
    mesh = parse_fpm(SQUARE)
    assert mesh.nodes.shape == (6, 2)
    assert mesh.elements == [[0, 1, 4, 3], [1, 2, 5, 4]]
    assert mesh.edge_tags == {(0, 3): "fixed", (2, 5): "load"}
    assert mesh.material.E == 10 and mesh.material.plane == "strain"
    assert mesh.bcs["load"].traction == (1.0, 0.0)
    model = mesh_model(mesh)
    assert model.partition.n_points == 2 and model.partition.n_segments == 1
    # displacement-tagged edge attracts the boundary point
    assert_allclose(model.partition.points[0], [0.0, 0.5])
    assert_allclose(model.partition.points[1], [2.0, 0.5])


@pytest.mark.parametrize("text,msg", [
    ("NODE\n1 0 0\nELEMENT\n1 1 2 3\n", "unknown node"),
    ("NODE\n1 0 0\n1 1 0\n2 0 1\nELEMENT\n1 1 2 1\n", "duplicate node"),
    ("1 0 0\n", "outside any section"),
    (SQUARE.replace("10 13\n", "11 14\n"), "not a boundary edge"),
    (SQUARE.replace("t1=1", "t3=1"), "unknown boundary key"),
    ("NODE\n1 0\n", "id x1 x2"),
])
def test_text_format_errors_name_the_line(text, msg):
    with pytest.raises(MeshFormatError, match=msg):
        parse_fpm(text, "m.fpm")


def test_untreated_tag_is_rejected():
    mesh = parse_fpm(SQUARE.replace("BC load t1=1\n", ""))
    with pytest.raises(MeshFormatError, match="without boundary conditions"):
        mesh_model(mesh)


INP = """\
** comment
*HEADING
a deck
*NODE, NSET=ALL
1, 0.0, 0.0, 0.0
2, 1.0, 0.0
3, 1.0, 1.0
4, 0.0, 1.0
5, 0.5, 0.0
6, 1.0, 0.5
7, 0.5, 1.0
8, 0.0, 0.5
*ELEMENT, TYPE=CPS8
1, 1, 2, 3, 4,
   5, 6, 7, 8
*MATERIAL, NAME=STEEL
*ELASTIC
200000, 0.3
"""


def test_inp_subset_with_continuation_and_corner_nodes():
    mesh = parse_inp(INP)
    assert mesh.elements == [[0, 1, 2, 3]]
    assert len(mesh.nodes) == 8
    with pytest.raises(MeshFormatError, match="unterminated"):
        parse_inp("*NODE\n1,0,0\n*ELEMENT\n1, 1, 1,")


def test_sample_meshes_agree():
    a = read_mesh(DATA / "wrench.fpm")
    b = read_mesh(DATA / "wrench.inp")
    assert_array_equal(a.nodes, b.nodes)
    assert a.elements == b.elements
    sol = solve(Discretization(mesh_model(a)))
    assert np.all(np.isfinite(sol.stress))
    # the handle end is pushed down
    assert sol.u[:, 1].min() < 0


def test_tag_edges_by_box():
    mesh = read_mesh(DATA / "wrench.inp")
    assert mesh.tag_edges("end", (0, 0, 0, 2)) == 4
    assert mesh.tag_edges("nothing", (100, 100, 101, 101)) == 0
