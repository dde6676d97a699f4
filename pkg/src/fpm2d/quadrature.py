"""Segment and polygon quadrature rules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import polygon_area, polygon_centroid


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    kind: str


def segment_rule(p0, p1, n: int = 1) -> QuadratureRule:
    """Gauss-Legendre rule with ``n`` points on the straight segment p0-p1."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    xi, w = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (xi + 1.0)
    L = float(np.hypot(*(p1 - p0)))
    return QuadratureRule(p0 + t[:, None] * (p1 - p0), 0.5 * L * w, f"gauss{n}")


# (barycentric coordinates, weights summing to 1) per triangle rule
_TRIANGLE_RULES = {
    1: (np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])),
    # three-point Hammer rule, exact for quadratics
    2: (np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
        np.full(3, 1 / 3)),
}


def _dunavant5():
    a1, b1 = 0.059715871789770, 0.470142064105115
    a2, b2 = 0.797426985353087, 0.101286507323456
    w1, w2 = 0.132394152788506, 0.125939180544827
    bary = [[1 / 3, 1 / 3, 1 / 3],
            [a1, b1, b1], [b1, a1, b1], [b1, b1, a1],
            [a2, b2, b2], [b2, a2, b2], [b2, b2, a2]]
    return np.array(bary), np.array([0.225, w1, w1, w1, w2, w2, w2])


_TRIANGLE_RULES[5] = _dunavant5()


def polygon_rule(poly: np.ndarray, degree: int = 2) -> QuadratureRule:
    """Fan triangulation from the centroid with a per-triangle rule.

    ``degree=1`` collapses to the centroid weighted by the area, which is exact
    for linear integrands.  ``degree=2`` uses the three-point Hammer rule on
    each fan triangle and ``degree=5`` the seven-point Dunavant rule.
    """
    poly = np.asarray(poly, float)
    area = polygon_area(poly)
    c = polygon_centroid(poly)
    if degree <= 1:
        return QuadratureRule(c[None, :], np.array([area]), "centroid")
    key = 2 if degree == 2 else 5
    if degree > 5:
        raise ValueError("polygon rules are available up to degree 5")
    bary, w = _TRIANGLE_RULES[key]
    a, b = poly, np.roll(poly, -1, axis=0)
    # signed triangle areas keep the rule exact for star-shaped non-convex cells
    tri_area = 0.5 * ((a[:, 0] - c[0]) * (b[:, 1] - c[1]) - (a[:, 1] - c[1]) * (b[:, 0] - c[0]))
    pts = (bary[None, :, 0, None] * c[None, None, :]
           + bary[None, :, 1, None] * a[:, None, :]
           + bary[None, :, 2, None] * b[:, None, :])
    wts = tri_area[:, None] * w[None, :]
    return QuadratureRule(pts.reshape(-1, 2), wts.ravel(), f"fan{key}")


def tensor_gauss_rect(x0, x1, y0, y1, n: int) -> QuadratureRule:
    xi, w = np.polynomial.legendre.leggauss(n)
    xs = x0 + 0.5 * (xi + 1) * (x1 - x0)
    ys = y0 + 0.5 * (xi + 1) * (y1 - y0)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = np.outer(w, w) * 0.25 * (x1 - x0) * (y1 - y0)
    return QuadratureRule(np.column_stack([X.ravel(), Y.ravel()]), W.ravel(), f"tensor{n}")
