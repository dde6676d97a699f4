from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fpm2d.approximation import Material
from fpm2d.fields import (OutOfRegionError, cantilever_field, crack_tip_field, hole_field, mode1_field, patch_field,
                          ring_field)


def _fd_grad(f, x, h=1e-6):
    out = np.empty((len(x), 2, 2))
    for j in range(2):
        d = np.zeros(2)
        d[j] = h
        out[:, :, j] = (f.displacement(x + d) - f.displacement(x - d)) / (2 * h)
    return out


def _divergence(f, x, h=1e-5):
    d1, d2 = np.array([h, 0.0]), np.array([0.0, h])
    ds1 = (f.stress(x + d1) - f.stress(x - d1)) / (2 * h)
    ds2 = (f.stress(x + d2) - f.stress(x - d2)) / (2 * h)
    return np.column_stack([ds1[:, 0] + ds2[:, 2], ds1[:, 2] + ds2[:, 1]])


def _stress_from_gradient(f, x):
    g = f.gradient(x)
    eps = np.column_stack([g[:, 0, 0], g[:, 1, 1], g[:, 0, 1] + g[:, 1, 0]])
    return eps @ f.material.D.T


CASES = {
    "patch": (patch_field(), lambda r: r.uniform(0, 1, (8, 2))),
    "cantilever": (cantilever_field(), lambda r: np.column_stack([r.uniform(0.1, 7.9, 8), r.uniform(0.05, 0.95, 8)])),
    "ring": (ring_field(E=1.0), lambda r: (lambda t, rr: np.column_stack([rr * np.cos(t), rr * np.sin(t)]))(
        r.uniform(0, np.pi / 2, 8), r.uniform(1.05, 1.95, 8))),
    "hole": (hole_field(), lambda r: (lambda t, rr: np.column_stack([rr * np.cos(t), rr * np.sin(t)]))(
        r.uniform(0, np.pi / 2, 8), r.uniform(1.05, 2.5, 8))),
    "crack": (crack_tip_field(0.7, -0.4, Material(2.0, 0.25), (1.0, 2.0), 0.3),
              lambda r: (lambda t, rr: np.column_stack([1.0 + rr * np.cos(t + 0.3), 2.0 + rr * np.sin(t + 0.3)]))(
                  r.uniform(-2.9, 2.9, 8), r.uniform(0.2, 2.0, 8))),
}


@pytest.mark.parametrize("name", sorted(CASES))
@given(seed=st.integers(0, 2 ** 31))
def test_property_field_self_consistency(name, seed):
    f, sampler = CASES[name]
    x = sampler(np.random.default_rng(seed))
    s = f.stress(x)
    scale = max(1.0, np.abs(s).max())
    assert_allclose(_stress_from_gradient(f, x), s, atol=1e-5 * scale)
    assert_allclose(f.gradient(x), _fd_grad(f, x), atol=1e-5 * max(1.0, np.abs(f.gradient(x)).max()))
    assert np.abs(_divergence(f, x)).max() < 1e-4 * scale


def test_mode1_field_values_ahead_of_tip():
    f = mode1_field(1.0, 1.0, 0.3, tip=(0.0, 0.0))
    r = 0.25
    s = f.stress([[r, 0.0]])[0]
    assert_allclose(s, [1 / np.sqrt(2 * np.pi * r)] * 2 + [0.0], atol=1e-12)


def test_region_violation_is_reported():
    with pytest.raises(OutOfRegionError):
        ring_field().stress([[0.1, 0.1]])


def test_hole_field_concentration_is_three():
    assert hole_field().stress([[0.0, 1.0]])[0, 0] == pytest.approx(3.0)
