from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fpm2d.approximation import Material
from fpm2d.assembly import BoundarySpec, Discretization, Model
from fpm2d.benchmarks import cantilever, patch, regular_grid, ring_quarter
from fpm2d.geometry import Domain, PointCloud, build_voronoi_partition
from fpm2d.solve import (FieldSolution, SingularSystemError, bilinear_energy, error_norms, postprocess, residual,
                         solve, solve_system)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_patch_solution_and_stresses(method):
    model = patch("3x3")
    disc = Discretization(model)
    sol = postprocess(solve_system(disc.system(), method), disc)
    pts = model.partition.points
    assert_allclose(sol.u, model.exact.displacement(pts), rtol=1e-6, atol=1e-9)
    assert_allclose(sol.stress, model.exact.stress(pts), rtol=1e-6, atol=1e-9)
    r_u, r_E = error_norms(sol, model.exact)
    assert r_u < 1e-6 and r_E < 1e-6


def test_constant_field_has_zero_strain():
    model = patch("4x4")
    disc = Discretization(model)
    q = np.tile([0.2, -0.1], model.partition.n_points)
    sol = postprocess(q, disc)
    assert np.abs(sol.strain).max() < 1e-13


def test_exact_field_fed_back_gives_zero_error():
    model = patch("5x5")
    disc = Discretization(model)
    q = model.exact.displacement(model.partition.points).ravel()
    r_u, r_E = error_norms(postprocess(q, disc), model.exact)
    assert r_u < 1e-13 and r_E < 1e-13


def test_zero_exact_norm_is_an_error():
    model = patch("3x3")
    sol = solve(Discretization(model))

    class Zero:
        def displacement(self, x):
            return np.zeros((len(x), 2))

        def stress(self, x):
            return np.zeros((len(x), 3))

    with pytest.raises(ValueError, match="zero norm"):
        error_norms(sol, Zero())


def test_cantilever_residual():
    disc = Discretization(cantilever("81x11"))
    assert disc.partition.n_points == 891
    system = disc.system()
    q = solve_system(system)
    assert residual(system, q) < 1e-10


def test_missing_constraints_raise_singular_error_naming_a_dof():
    pts = regular_grid(0, 1, 0, 1, 3, 3)
    part = build_voronoi_partition(PointCloud(pts), Domain.rectangle(0, 1, 0, 1, ("free", "free", "top", "free")))
    model = Model(part, Material(1.0, 0.3), {"top": BoundarySpec(traction=(0.0, 1.0))})
    with pytest.raises(SingularSystemError) as err:
        solve_system(Discretization(model).system())
    assert 0 <= err.value.dof < 18
    assert "dof" in str(err.value)


@pytest.mark.parametrize("order", [1, 2])
def test_energy_matches_quadrature(order):
    model = cantilever("41x6")
    disc = Discretization(model, order=order)
    sol = solve(disc)
    e = bilinear_energy(sol, disc)
    assert e["total"] == pytest.approx(sol.energy, rel=1e-8)
    assert sol.energy >= 0


def test_stress_is_d_times_strain():
    sol = solve(Discretization(ring_quarter("15x11")))
    assert_allclose(sol.stress, sol.strain @ sol.D.T, atol=1e-14)


def test_ring_radial_stress_at_r_one_and_a_half():
    model = ring_quarter("15x21")
    sol = solve(Discretization(model))
    p = int(np.argmin(np.hypot(model.partition.points[:, 0] - 1.5, model.partition.points[:, 1])))
    assert_allclose(model.partition.points[p], [1.5, 0.0], atol=1e-12)
    exact = 4 / 3 * (1 - 1 / 2.25)
    # radial direction is x1 at theta = 0
    assert abs(sol.stress[p, 0] - exact) / abs(exact) < 0.02


def test_segment_stress_is_two_side_average():
    sol = solve(Discretization(patch("4x4")))
    part = sol.partition
    s = sol.segment_stress([0, 3])
    assert_allclose(s[1], 0.5 * (sol.stress[part.left[3]] + sol.stress[part.right[3]]))


def _cantilever_errors(resolutions):
    h, r = [], []
    for res in resolutions:
        model = cantilever(res)
        r_u, _ = error_norms(solve(Discretization(model)), model.exact)
        h.append(8.0 / (int(res.split("x")[0]) - 1))
        r.append(r_u)
    return np.array(h), np.array(r)


@pytest.mark.xfail(strict=True, reason="41x6 is pre-asymptotic: the three-mesh fit gives 2.45 (pair rates 2.65, 2.26)")
def test_cantilever_three_mesh_slope_near_two():
    h, r = _cantilever_errors(("41x6", "81x11", "161x21"))
    assert r[0] > r[1] > r[2]
    assert abs(np.polyfit(np.log(h), np.log(r), 1)[0] - 2.0) <= 0.3


def test_cantilever_asymptotic_rate_near_two():
    h, r = _cantilever_errors(("81x11", "161x21"))
    rate = np.log(r[0] / r[1]) / np.log(h[0] / h[1])
    assert abs(rate - 2.0) <= 0.3


def test_field_solution_is_a_dataclass_with_energy():
    sol = solve(Discretization(patch("3x3")))
    assert isinstance(sol, FieldSolution)
    assert sol.u.shape == (9, 2)
