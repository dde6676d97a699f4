from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fpm2d.benchmarks import regular_grid
from fpm2d.geometry import (Domain, PartitionError, PointCloud, build_voronoi_partition, neighbor_support,
                            partition_from_mesh, polygon_area)


def unit_square(tags=("free",) * 4):
    return Domain.rectangle(0, 1, 0, 1, tags)


def test_single_generator_gives_the_whole_square():
    part = build_voronoi_partition(PointCloud(np.array([[0.5, 0.5]])), unit_square())
    assert part.n_points == 1
    assert part.n_segments == 0
    assert polygon_area(part.cells[0]) == pytest.approx(1.0, abs=1e-14)


def test_two_generators_share_the_bisector():
    part = build_voronoi_partition(PointCloud(np.array([[0.25, 0.5], [0.75, 0.5]])), unit_square())
    assert part.n_segments == 1
    assert_allclose(sorted([part.seg_p0[0, 0], part.seg_p1[0, 0]]), [0.5, 0.5], atol=1e-14)
    assert part.seg_length[0] == pytest.approx(1.0)
    assert_allclose(part.seg_normal[0], [1.0, 0.0], atol=1e-14)


def test_random_areas_tile_the_square(rng):
    part = build_voronoi_partition(PointCloud(rng.uniform(0.01, 0.99, (25, 2))), unit_square())
    assert part.n_points == 25
    assert abs(part.areas.sum() - 1.0) < 1e-10


def test_duplicate_points_are_rejected_with_ids():
    with pytest.raises(PartitionError, match="1"):
        build_voronoi_partition(PointCloud(np.array([[0.2, 0.2], [0.2, 0.2], [0.7, 0.7]])), unit_square())


def test_point_outside_domain_is_rejected():
    with pytest.raises(PartitionError):
        build_voronoi_partition(PointCloud(np.array([[0.2, 0.2], [1.5, 0.5]])), unit_square())


def test_nonconvex_domain_is_tiled():
    ring = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], float)
    dom = Domain(ring, ["free"] * 6)
    pts = regular_grid(0.05, 1.95, 0.05, 1.95, 12, 12)
    pts = pts[~((pts[:, 0] > 1) & (pts[:, 1] > 1))]
    part = build_voronoi_partition(PointCloud(pts), dom)
    assert abs(part.areas.sum() - 3.0) < 1e-10 * 3.0
    part.check()


def test_boundary_tags_are_inherited():
    part = build_voronoi_partition(PointCloud(regular_grid(0, 1, 0, 1, 3, 3)),
                                   unit_square(("bottom", "right", "top", "left")))
    for tag, p0, p1 in zip(part.ext_tags, part.ext_p0, part.ext_p1):
        mid = 0.5 * (p0 + p1)
        expect = {"bottom": mid[1] == 0, "right": mid[0] == 1, "top": mid[1] == 1, "left": mid[0] == 0}
        assert expect[tag]


def test_mesh_single_quad_centroid_and_edge_placement():
    nodes = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    part, cloud = partition_from_mesh(nodes, [[0, 1, 2, 3]])
    assert_allclose(part.points[0], [0.5, 0.5])
    assert part.n_segments == 0
    part, cloud = partition_from_mesh(nodes, [[0, 1, 2, 3]], {(0, 1): "fixed"})
    assert_allclose(part.points[0], [0.5, 0.0])
    assert cloud.boundary[0]


def test_mesh_two_by_two_grid_has_four_internal_segments():
    nodes = regular_grid(0, 2, 0, 2, 3, 3)
    idx = np.arange(9).reshape(3, 3)
    elems = [[idx[j, i], idx[j, i + 1], idx[j + 1, i + 1], idx[j + 1, i]] for j in range(2) for i in range(2)]
    part, _ = partition_from_mesh(nodes, elems)
    assert part.n_points == 4
    assert part.n_segments == 4


def test_mesh_two_triangles_share_the_diagonal():
    nodes = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    part, _ = partition_from_mesh(nodes, [[0, 1, 2], [0, 2, 3]])
    assert part.n_segments == 1
    assert part.seg_length[0] == pytest.approx(np.sqrt(2))


def test_mesh_longest_tagged_edge_wins():
    nodes = np.array([[0, 0], [2, 0], [2, 1], [0, 1]], float)
    part, _ = partition_from_mesh(nodes, [[0, 1, 2, 3]], {(0, 1): "a", (1, 2): "b"})
    assert_allclose(part.points[0], [1.0, 0.0])


def test_mesh_hanging_node_is_rejected():
    nodes = np.array([[0, 0], [1, 0], [1, 2], [0, 2], [2, 0], [2, 1], [1, 1], [2, 2]], float)
    elems = [[0, 1, 2, 3], [1, 4, 5, 6], [6, 5, 7, 2]]
    with pytest.raises(PartitionError, match="non-conforming"):
        partition_from_mesh(nodes, elems)


def test_mesh_degenerate_element_is_rejected():
    nodes = np.array([[0, 0], [1, 0], [2, 0]], float)
    with pytest.raises(PartitionError, match="degenerate"):
        partition_from_mesh(nodes, [[0, 1, 2]])


def _grid3():
    return build_voronoi_partition(PointCloud(regular_grid(0, 1, 0, 1, 3, 3)), unit_square())


def test_ring_one_and_two_supports_on_a_grid():
    part = _grid3()
    assert set(neighbor_support(part, None, 4, 1).members) == {1, 3, 5, 7}
    assert set(neighbor_support(part, None, 4, 2).members) == set(range(9)) - {4}


def test_released_segment_is_invisible():
    part = _grid3()
    east = [s for s in range(part.n_segments) if {part.left[s], part.right[s]} == {4, 5}]
    assert set(neighbor_support(part, east, 4, 1).members) == {1, 3, 7}


def test_flipped_segment_reverses_normal():
    part = _grid3()
    f = part.flipped(0)
    assert_allclose(f.seg_normal[0], -part.seg_normal[0])
    assert (f.left[0], f.right[0]) == (part.right[0], part.left[0])


clouds = st.integers(min_value=2, max_value=40).flatmap(
    lambda n: st.lists(st.tuples(st.floats(0.01, 0.99), st.floats(0.01, 0.99)), min_size=n, max_size=n,
                       unique_by=(lambda p: round(p[0], 3), lambda p: round(p[1], 3))))


@given(clouds)
def test_property_tiling_normals_and_symmetry(pts):
    pts = np.array(pts)
    if len(np.unique(np.round(pts, 3), axis=0)) < len(pts):
        return
    part = build_voronoi_partition(PointCloud(pts), unit_square())
    assert abs(part.areas.sum() - 1.0) < 1e-10
    assert_allclose(np.hypot(*part.seg_normal.T), 1.0, atol=1e-12)
    # each cell contains its generator
    import shapely

    for p, cell in zip(part.points, part.shapely_cells):
        assert cell.buffer(1e-12).contains(shapely.Point(p))
    for i in range(part.n_points):
        for j in neighbor_support(part, None, i, 1).members:
            assert i in neighbor_support(part, None, j, 1).members
