from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fpm2d.approximation import Material
from fpm2d.assembly import Discretization, Model
from fpm2d.benchmarks import mode1_square, patch
from fpm2d.fields import crack_tip_field, mode1_field
from fpm2d.fracture import (ContourError, CrackState, CriterionSpec, LoadProgram, RectContour,
                            UnsupportedConfigurationError, ber, ber_values, check_contour, crack_paths, find_tips,
                            hole_plate, hoop_tractions, interaction_integral_sifs, j_integral, k_from_j,
                            propagate_max_hoop, quasi_static_drive, release_segment, write_history_csv,
                            write_polylines)
from fpm2d.geometry import Adjacency
from fpm2d.solve import solve


def _rebuilt_stiffness(model: Model, released, **kw):
    """Stiffness assembled from scratch with ``released`` already cracked."""
    d = Discretization(Model(model.partition, model.material, model.bcs, model.pins), warn=False, **kw)
    part = d.partition
    d.released = set(released)
    d.adjacency = Adjacency(part, d.released)
    d.recoveries = [d._recover(p) for p in range(part.n_points)]
    d.ke, d.kh = {}, {}
    d._compute_points(range(part.n_points))
    d._compute_segments(range(part.n_segments))
    return d.assemble_stiffness()


SMALL = patch("25", layout="random")


@given(st.lists(st.integers(0, SMALL.partition.n_segments - 1), min_size=10, max_size=10, unique=True),
       st.sampled_from([(1, "gfd"), (1, "csrbf"), (2, "gfd")]))
def test_property_incremental_release_matches_rebuild(order_segs, cfg):
    order, backend = cfg
    disc = Discretization(SMALL, order=order, backend=backend, warn=False)
    n0 = disc.n_dofs
    for k in range(0, 10, 3):
        disc.release(order_segs[k:k + 3])
    assert disc.n_dofs == n0 and disc.K.shape == (n0, n0)
    ref = _rebuilt_stiffness(SMALL, order_segs, order=order, backend=backend)
    assert abs(disc.K - ref).max() < 1e-10 * max(1.0, abs(ref).max())


@given(st.lists(st.integers(0, SMALL.partition.n_segments - 1), min_size=1, max_size=10, unique=True))
def test_property_visibility_honoured_in_supports(segs):
    disc = Discretization(SMALL, warn=False)
    disc.release(segs)
    part = disc.partition
    adj = Adjacency(part, set(segs))
    for p in range(part.n_points):
        reach = set(adj.support(p, 2)) | {p}
        assert set(disc.recoveries[p].dof_points.tolist()) <= reach
        for s in segs:
            a, b = int(part.left[s]), int(part.right[s])
            if b not in adj.ring1[a]:
                assert b not in adj.support(a, 1)


@given(st.integers(0, SMALL.partition.n_segments - 1))
def test_property_release_update_is_local(seg):
    disc = Discretization(SMALL, warn=False)
    part = disc.partition
    info = disc.release([seg])
    rows = np.unique(info["delta"].tocoo().row) // 2
    adj = Adjacency(part)
    near = {int(part.left[seg]), int(part.right[seg])}
    for _ in range(3):
        near |= {q for p in near for q in adj.ring1[p]}
    assert set(rows.tolist()) <= near


def test_release_errors():
    disc = Discretization(SMALL, warn=False)
    disc.release(0)
    with pytest.raises(ValueError, match="already released"):
        disc.release([0])
    with pytest.raises(ValueError):
        disc.release([10 ** 6])
    with pytest.raises(ValueError, match="duplicate"):
        disc.release([1, 1])


@pytest.fixture(scope="module")
def mode1():
    model = mode1_square("20x20")
    disc = Discretization(model)
    return model, disc, solve(disc)


def test_single_tip_at_crack_end(mode1):
    model, disc, _ = mode1
    tips = find_tips(model.partition, set(model.released))
    assert len(tips) == 1
    assert_allclose(tips[0].position, (5.0, 5.0), atol=1e-12)
    assert len(tips[0].candidates) >= 2


def test_max_hoop_goes_straight_ahead(mode1):
    model, disc, sol = mode1
    state = CrackState.from_discretization(disc)
    s = propagate_max_hoop(state, sol, state.tips[0])
    part = model.partition
    assert_allclose([part.seg_p0[s, 1], part.seg_p1[s, 1]], [5.0, 5.0], atol=1e-12)
    assert min(part.seg_p0[s, 0], part.seg_p1[s, 0]) == pytest.approx(5.0)


@given(st.integers(0, 10 ** 6))
def test_property_ber_orientation_invariance(seed):
    model = patch("16", layout="random", seed=seed % 1000)
    s = int(np.random.default_rng(seed).integers(model.partition.n_segments))
    a = solve(Discretization(model, warn=False))
    flipped = Model(model.partition.flipped(s), model.material, model.bcs, model.pins)
    b = solve(Discretization(flipped, warn=False))
    scale = max(1.0, np.abs(a.stress).max())
    assert ber(a, 1.0, s).value == pytest.approx(ber(b, 1.0, s).value, abs=1e-10 * scale)
    assert hoop_tractions(a, [s])[0] == pytest.approx(hoop_tractions(b, [s])[0], abs=1e-10 * scale)


def test_vectorised_ber_matches_quadrature(mode1):
    _, disc, sol = mode1
    segs = [s for s in range(0, disc.partition.n_segments, 7) if s not in disc.released]
    ref = np.array([ber(sol, disc.eta, s).value for s in segs])
    assert_allclose(ber_values(sol, disc.eta, segs), ref, atol=1e-13 * max(1.0, np.abs(ref).max()))


def test_ber_rejects_quadratic_trials():
    sol = solve(Discretization(patch("4x4"), order=2))
    with pytest.raises(UnsupportedConfigurationError):
        ber(sol, 1.0, 0)
    with pytest.raises(UnsupportedConfigurationError):
        quasi_static_drive(patch("4x4"), [1.0], "ber_initiation", order=2)


def test_j_of_exact_field_is_k_squared_over_e():
    f = mode1_field(2.0, 3.0, 0.3, tip=(0.0, 0.0))
    J = j_integral(f, RectContour((0.0, 0.0), 2.0, 3.0), n_analytic=128)
    assert J == pytest.approx(4.0 / 3.0, rel=1e-4)
    assert k_from_j(J, f.material) == pytest.approx(2.0, rel=1e-4)


def test_interaction_integral_recovers_exact_sifs():
    mat = Material(2.0, 0.25)
    f = crack_tip_field(0.7, -0.4, mat, (1.0, 2.0), 0.3)
    sif = interaction_integral_sifs(f, RectContour((1.0, 2.0), 2.0, 1.5, 0.3), n_analytic=128)
    assert sif.K_I == pytest.approx(0.7, rel=1e-4)
    assert sif.K_II == pytest.approx(-0.4, rel=1e-4)


def test_contour_admissibility(mode1):
    model, _, _ = mode1
    part = model.partition
    tips = [(5.0, 5.0)]
    check_contour(part, RectContour((5.0, 5.0), 2.0, 3.0), model.released, tips)
    with pytest.raises(ContourError, match="domain"):
        check_contour(part, RectContour((5.0, 5.0), 12.0, 3.0), model.released)
    with pytest.raises(ContourError, match="tip"):
        check_contour(part, RectContour((8.0, 8.0), 1.0, 1.0), model.released, tips)
    with pytest.raises(ContourError, match="along"):
        check_contour(part, RectContour((3.0, 5.5), 2.0, 1.0), model.released)


def test_drive_mode1_stays_on_symmetry_line(tmp_path):
    model = mode1_square("16x16")
    res = quasi_static_drive(model, LoadProgram(4, 1.0), "max_hoop")
    part = res.state.partition
    new = [h.segment for h in res.state.history]
    assert len(new) == 4
    assert_allclose(part.seg_p0[new, 1], 5.0, atol=1e-12)
    assert_allclose(part.seg_p1[new, 1], 5.0, atol=1e-12)
    write_history_csv(tmp_path / "h.csv", res.state)
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "step,segment,x0,y0,x1,y1,value,load,criterion"
    assert len(lines) == 5 and lines[1].startswith("1,")
    write_polylines(tmp_path / "p.txt", res.state)
    paths = crack_paths(res.state)
    assert len(paths) == 1
    assert_allclose(paths[0][:, 1], 5.0, atol=1e-12)
    assert (tmp_path / "p.txt").read_text().startswith("# path 0\n")


def test_initiation_threshold_and_disconnection():
    model = hole_plate(control="traction", n=21)
    res = quasi_static_drive(model, LoadProgram(10, 0.6), CriterionSpec("hoop_initiation", 1.0))
    assert res.disconnection is not None
    assert res.disconnection.step == len(res.steps)
    assert all(h.value > 1.0 for h in res.state.history)
    quiet = quasi_static_drive(hole_plate(n=21), LoadProgram(2, 0.1), CriterionSpec("hoop_initiation", 1.0))
    assert quiet.n_released == 0 and quiet.disconnection is None


def test_release_segment_records_faces(mode1):
    model, _, _ = mode1
    disc = Discretization(model)
    state = CrackState.from_discretization(disc)
    free = next(s for s in range(model.partition.n_segments) if s not in state.released)
    release_segment(state, disc, [free])
    assert free in state.released and free in disc.released
    f0, f1 = state.faces[free]
    assert_allclose(f0.normal, -np.asarray(f1.normal))


def test_criterion_spec_validation():
    with pytest.raises(ValueError):
        CriterionSpec("nope")
    assert CriterionSpec("ber_initiation").threshold == 1.0
    assert LoadProgram(4, 2.0)(2) == pytest.approx(1.0)
    assert list(LoadProgram(factors=(0.5, 1.0))) == [0.5, 1.0]
