from __future__ import annotations

import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from fpm2d.approximation import Material, gfd_recovery
from fpm2d.assembly import (BoundarySpec, ConstraintError, Discretization, GlobalSystem, Model, apply_constraints,
                            load_vector, point_stiffness)
from fpm2d.benchmarks import cantilever, patch, regular_grid
from fpm2d.geometry import Domain, PointCloud, build_voronoi_partition
from fpm2d.quadrature import polygon_rule, tensor_gauss_rect
from fpm2d.solve import solve_system


def _rel_asym(K):
    return abs(K - K.T).max() / abs(K).max()


@pytest.mark.parametrize("order,backend", [(1, "gfd"), (1, "csrbf"), (2, "gfd")])
def test_stiffness_is_symmetric(order, backend):
    disc = Discretization(patch("25", layout="random"), order=order, backend=backend)
    assert _rel_asym(disc.K) < 1e-12


def test_linear_point_stiffness_is_constant_integrand():
    pts = np.array([[0.5, 0.5], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5], [0.5, 0.0]])
    rec = gfd_recovery(pts, [1, 2, 3, 4], 0, 1)
    cell = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    D = Material(1.0, 0.3).D
    Ke = point_stiffness([rec], pts[:1], [polygon_rule(cell, 1)], D)[0]
    from fpm2d.approximation import shape_matrices

    B = shape_matrices(rec, pts[0]).B(pts[:1])[0]
    assert_allclose(Ke, B.T @ D @ B, atol=1e-14)
    assert np.linalg.eigvalsh(Ke).min() > -1e-12


def test_quadratic_point_stiffness_matches_tensor_gauss():
    pts = np.vstack([[0.5, 0.5], regular_grid(-0.5, 1.5, -0.5, 1.5, 3, 3)])
    pts = pts[~((np.abs(pts[:, 0] - 0.5) < 1e-12) & (np.abs(pts[:, 1] - 0.5) < 1e-12))]
    pts = np.vstack([[0.5, 0.5], pts])
    rec = gfd_recovery(pts, list(range(1, len(pts))), 0, 2)
    cell = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    D = Material(1.0, 0.3).D
    fan = point_stiffness([rec], pts[:1], [polygon_rule(cell, 2)], D)[0]
    ref = point_stiffness([rec], pts[:1], [tensor_gauss_rect(0, 1, 0, 1, 7)], D)[0]
    assert np.abs(fan - ref).max() < 1e-10


@pytest.mark.parametrize("order", [1, 2])
def test_flipping_segment_orientation_leaves_k_unchanged(order):
    model = patch("25", layout="random")
    ref = Discretization(model, order=order).K
    for s in (0, 7, 19):
        flipped = Model(model.partition.flipped(s), model.material, model.bcs, model.pins)
        K = Discretization(flipped, order=order).K
        assert abs(K - ref).max() < 1e-12 * abs(ref).max()


def test_penalty_difference_identity():
    model = patch("4x4")
    K1 = Discretization(model, eta=1.0).K
    d2 = Discretization(model, eta=2.0)
    P = Discretization(model, eta=1.0).penalty_matrix()
    assert abs((d2.K - K1) - P).max() < 1e-12 * abs(K1).max()
    assert abs(d2.penalty_matrix() - 2 * P).max() < 1e-12 * abs(K1).max()


def test_penalty_outside_recommended_range_warns():
    with pytest.warns(UserWarning, match="recommended range"):
        Discretization(patch("3x3"), eta=1e-4)
    with pytest.raises(ValueError):
        Discretization(patch("3x3"), eta=0.0)


def test_sparsity_follows_supports():
    disc = Discretization(patch("5x5"))
    part = disc.partition
    K = disc.K.tocsr()
    for i in range(part.n_points):
        allowed = set(disc.recoveries[i].dof_points)
        for s in part.point_segments[i]:
            for p in (part.left[s], part.right[s]):
                allowed.update(disc.recoveries[p].dof_points)
        # points that support neighbours of i through a shared segment
        cols = {c // 2 for c in K[2 * i].indices}
        extra = set()
        for p in list(allowed):
            extra.update(disc.recoveries[p].dof_points)
        assert cols <= allowed | extra


def test_zero_load_without_tractions():
    model = patch("3x3")
    bare = Model(model.partition, model.material, {}, model.pins)
    assert not np.any(Discretization(bare).load_vector())


def test_unit_traction_total_force():
    pts = regular_grid(0, 2, 0, 1, 3, 2)
    part = build_voronoi_partition(PointCloud(pts), Domain.rectangle(0, 2, 0, 1, ("free", "free", "top", "free")))
    model = Model(part, Material(1.0, 0.3), {"top": BoundarySpec(traction=(0.0, 1.0))})
    Q = Discretization(model).load_vector()
    assert Q[1::2].sum() == pytest.approx(2.0, abs=1e-12)
    assert Q[0::2].sum() == pytest.approx(0.0, abs=1e-12)


def test_parabolic_end_shear_sums_to_load():
    from fpm2d.benchmarks import _traction_from
    from fpm2d.fields import cantilever_field

    f = cantilever_field(P=1.0, H=1.0)
    pts = regular_grid(0, 8, 0, 1, 17, 6)
    part = build_voronoi_partition(PointCloud(pts), Domain.rectangle(0, 8, 0, 1, ("free", "end", "free", "free")))
    model = Model(part, f.material, {"end": BoundarySpec(traction=_traction_from(f))})
    Q = Discretization(model).load_vector()
    assert abs(Q[1::2].sum()) == pytest.approx(1.0, rel=1e-10)


def test_traction_on_cracked_segment_is_rejected():
    model = patch("3x3")
    disc = Discretization(model)
    shapes = [disc.shapes(p) for p in range(model.partition.n_points)]
    with pytest.raises(ValueError, match="traction free"):
        load_vector(model.partition, model.bcs, shapes, segment_tractions={0: (1.0, 0.0)}, released=[0])


def test_constraint_elimination_cases():
    K = sp.csr_matrix(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    q = solve_system(GlobalSystem(K, np.array([1.0, 0.0]), np.array([], int), np.array([]), 1.0))
    assert_allclose(q, np.linalg.solve(K.toarray(), [1.0, 0.0]))
    q = solve_system(GlobalSystem(K, np.zeros(2), np.array([0, 1]), np.array([3.0, 4.0]), 1.0))
    assert_allclose(q, [3.0, 4.0])
    red = apply_constraints(GlobalSystem(K, np.zeros(2), np.array([0]), np.array([1.0]), 1.0))
    assert_allclose(red.rhs, [1.0])
    with pytest.raises(ConstraintError):
        apply_constraints(GlobalSystem(K, np.zeros(2), np.array([0, 0]), np.array([1.0, 2.0]), 1.0))


def test_conflicting_edge_prescriptions_raise():
    pts = regular_grid(0, 1, 0, 1, 3, 3)
    part = build_voronoi_partition(PointCloud(pts), Domain.rectangle(0, 1, 0, 1, ("a", "b", "free", "free")))
    model = Model(part, Material(1.0, 0.3), {"a": BoundarySpec(u1=0.0), "b": BoundarySpec(u1=1.0)})
    with pytest.raises(ConstraintError):
        Discretization(model).constraints()


def test_rigid_translation_is_reproduced():
    pts = regular_grid(0, 1, 0, 1, 5, 5)
    part = build_voronoi_partition(PointCloud(pts), Domain.rectangle(0, 1, 0, 1, ("edge",) * 4))
    model = Model(part, Material(1.0, 0.3), {"edge": BoundarySpec(u1=0.3, u2=-0.2)})
    disc = Discretization(model)
    q = solve_system(disc.system())
    assert_allclose(q.reshape(-1, 2), np.tile([0.3, -0.2], (25, 1)), atol=1e-12)


def test_reduced_patch_system_is_spd():
    disc = Discretization(patch("3x3"))
    red = apply_constraints(disc.system())
    assert np.linalg.eigvalsh(red.K.toarray()).min() > 0
