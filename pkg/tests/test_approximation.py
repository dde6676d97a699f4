from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fpm2d.approximation import (Material, csrbf_weights, elasticity_matrix, gfd_recovery, gfd_weights,
                                 n_basis, shape_matrices)


def test_plane_stress_matrix():
    D = elasticity_matrix(Material(1.0, 0.25))
    c = 1 / (1 - 0.0625)
    assert_allclose(D, c * np.array([[1, 0.25, 0], [0.25, 1, 0], [0, 0, 0.375]]))


def test_plane_strain_uses_effective_moduli():
    m = Material(2.0, 0.3, "strain")
    assert m.E_bar == pytest.approx(2.0 / 0.91)
    assert m.nu_bar == pytest.approx(0.3 / 0.7)
    assert np.all(np.linalg.eigvalsh(m.D) > 0)


def test_near_incompressible_is_admissible():
    assert np.all(np.linalg.eigvalsh(Material(1.0, 0.4999).D) > 0)


@pytest.mark.parametrize("E,nu", [(0.0, 0.3), (-1.0, 0.3), (1.0, 0.5), (1.0, -0.1)])
def test_invalid_material_is_rejected(E, nu):
    with pytest.raises(ValueError):
        Material(E, nu)


def test_basis_sizes():
    assert n_basis(1) == 2
    assert n_basis(2) == 5


neigh = st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=6, max_size=12)
coeffs = st.lists(st.floats(-3, 3), min_size=6, max_size=6)


def _separated(xs) -> bool:
    d = np.hypot(*(xs[:, None] - xs[None]).T)
    return np.min(np.hypot(*xs.T)) >= 0.05 and np.min(d + np.eye(len(xs))) >= 0.05


def _spread(xs):
    xs = np.array(xs)
    if len(xs) < 6 or not _separated(xs):
        return None
    if np.linalg.matrix_rank(np.column_stack([xs, xs ** 2, xs[:, :1] * xs[:, 1:]]), tol=1e-3) < 5:
        return None
    return xs


@given(neigh, coeffs)
def test_property_gfd_reproduces_quadratics(xs, c):
    xs = _spread(xs)
    if xs is None:
        return
    x0 = np.array([0.1, -0.2])
    pts = xs + x0

    def f(p):
        d = p - x0
        return c[0] + c[1] * d[..., 0] + c[2] * d[..., 1] + c[3] * d[..., 0] ** 2 + c[4] * d[..., 1] ** 2 \
            + c[5] * d[..., 0] * d[..., 1]

    C1 = gfd_weights(x0, pts, 2)
    a = C1 @ np.concatenate([[f(x0)], f(pts)])
    # layout: d/dx1, d/dx2, d2/dx1^2, d2/dx2^2, d2/dx1dx2
    assert_allclose(a, [c[1], c[2], 2 * c[3], 2 * c[4], c[5]], atol=1e-7 * (1 + np.abs(c).max()))


@given(neigh, st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_property_linear_recovery_gfd_and_csrbf(xs, c):
    xs = np.array(xs)
    if not _separated(xs) or np.linalg.matrix_rank(xs, tol=1e-2) < 2:
        return
    x0 = np.zeros(2)
    vals = c[0] + c[1] * xs[:, 0] + c[2] * xs[:, 1]
    for C1 in (gfd_weights(x0, xs, 1), csrbf_weights(x0, xs, 1, 1.5 * np.hypot(*xs.T).max())):
        assert_allclose(C1 @ np.concatenate([[c[0]], vals]), c[1:], atol=1e-8)
        # constant fields have zero derivatives
        assert_allclose(C1.sum(axis=1), 0.0, atol=1e-10)


def test_shape_function_is_interpolatory_at_its_point():
    pts = np.array([[0.0, 0.0], [1.0, 0.1], [-0.2, 1.0], [-1.0, -0.3], [0.3, -1.0]])
    rec = gfd_recovery(pts, [1, 2, 3, 4], 0, 1)
    sh = shape_matrices(rec, pts[0])
    N = sh.N(pts[:1])[0]
    expect = np.zeros_like(N)
    expect[0, 0] = expect[1, 1] = 1.0
    assert_allclose(N, expect, atol=1e-14)


def test_strain_rows_follow_voigt_order():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    sh = shape_matrices(gfd_recovery(pts, [1, 2, 3, 4], 0, 1), pts[0])
    # u = (a x + b y, c x + d y)
    a, b, c, d = 0.3, -0.2, 0.5, 0.7
    uE = np.column_stack([a * pts[:, 0] + b * pts[:, 1], c * pts[:, 0] + d * pts[:, 1]]).ravel()
    eps = sh.B(pts[:1])[0] @ uE
    assert_allclose(eps, [a, d, b + c], atol=1e-14)
