"""J-integral and interaction-integral SIF extraction on rectangular contours."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely

from ..approximation import Material
from ..fields import AnalyticField, crack_tip_field
from ..geometry import Partition
from ..quadrature import segment_rule
from ..solve import FieldSolution


class ContourError(ValueError):
    pass


@dataclass(frozen=True)
class RectContour:
    """Rectangle of full sides ``length`` (along the crack) by ``width``,
    centered at ``center`` and rotated by ``angle``."""

    center: tuple[float, float]
    length: float
    width: float
    angle: float = 0.0

    @property
    def direction(self) -> np.ndarray:
        return np.array([np.cos(self.angle), np.sin(self.angle)])

    @property
    def corners(self) -> np.ndarray:
        e1 = self.direction
        e2 = np.array([-e1[1], e1[0]])
        c = np.asarray(self.center, float)
        a, b = 0.5 * self.length, 0.5 * self.width
        # counter-clockwise
        return np.array([c - a * e1 - b * e2, c + a * e1 - b * e2, c + a * e1 + b * e2, c - a * e1 + b * e2])

    @property
    def polygon(self) -> shapely.Polygon:
        return shapely.Polygon(self.corners)

    def sides(self):
        """(start, end, outward normal) of each side, counter-clockwise."""
        c = self.corners
        for k in range(4):
            a, b = c[k], c[(k + 1) % 4]
            t = (b - a) / np.linalg.norm(b - a)
            yield a, b, np.array([t[1], -t[0]])


@dataclass(frozen=True)
class SifPair:
    K_I: float
    K_II: float
    contour: RectContour


@dataclass(frozen=True)
class ContourPiece:
    cell: int
    p0: np.ndarray
    p1: np.ndarray
    normal: np.ndarray
    weight: float


def check_contour(partition: Partition, contour: RectContour, released=(), tips=None) -> None:
    """Raise ContourError unless the contour is admissible.

    The rectangle must lie inside the domain, cross at most one released
    segment (the crack itself) and, when ``tips`` is given, enclose exactly
    one of them.
    """
    rect = contour.polygon
    dom = partition.shapely_union
    tol = 1e-9 * partition.diameter
    if not dom.buffer(tol).contains(rect):
        raise ContourError("contour leaves the domain or touches its boundary")
    ring = rect.exterior
    hits = []
    for s in released:
        g = ring.intersection(shapely.LineString([partition.seg_p0[s], partition.seg_p1[s]]))
        if g.is_empty:
            continue
        if g.length > tol:
            raise ContourError(f"contour runs along released segment {int(s)}")
        hits.extend(np.asarray(p.coords)[0] for p in getattr(g, "geoms", [g]))
    # a crossing through a crack vertex touches two segments at one location
    distinct = []
    for p in hits:
        if all(np.hypot(*(p - q)) > tol for q in distinct):
            distinct.append(p)
    if len(distinct) > 1:
        raise ContourError(f"contour crosses released segments at {len(distinct)} places; "
                           f"only the crack itself may cut it")
    if tips is not None:
        inside = [t for t in tips if rect.contains(shapely.Point(t))]
        if len(inside) != 1:
            raise ContourError(f"contour must enclose exactly one crack tip, found {len(inside)}")


def contour_pieces(partition: Partition, contour: RectContour) -> list[ContourPiece]:
    """Split the contour into pieces each lying in one subdomain.

    Each side is cut at every crossing with a subdomain boundary.  A piece
    whose midpoint lies within ``tol`` of several subdomains (a piece running
    along a shared edge, possibly up to round-off) is shared equally by them.
    """
    tree = partition._strtree
    cells = partition.shapely_cells
    tol = 1e-9 * partition.diameter
    out = []
    for a, b, nrm in contour.sides():
        length = float(np.linalg.norm(b - a))
        t = (b - a) / length
        line = shapely.LineString([a, b])
        cuts = [0.0, length]
        for c in tree.query(line.buffer(tol), predicate="intersects"):
            g = shapely.intersection(line, cells[c].exterior.buffer(tol))
            if g.is_empty:
                continue
            for part in getattr(g, "geoms", [g]):
                cuts.extend(((np.asarray(part.exterior.coords if part.geom_type == "Polygon" else part.coords) - a)
                             @ t).tolist())
        cuts = np.unique(np.clip(cuts, 0.0, length))
        knots = [cuts[0]]
        for s in cuts[1:]:
            if s - knots[-1] > 4 * tol:
                knots.append(s)
        knots[-1] = length
        for s0, s1 in zip(knots[:-1], knots[1:]):
            mid = a + 0.5 * (s0 + s1) * t
            owners = tree.query(shapely.Point(mid), predicate="dwithin", distance=tol)
            owners = [int(c) for c in owners if cells[c].buffer(tol).contains(shapely.Point(mid))]
            if not owners:
                raise ContourError(f"contour point {mid.tolist()} lies outside every subdomain")
            w = 1.0 / len(owners)
            for c in sorted(owners):
                out.append(ContourPiece(c, a + s0 * t, a + s1 * t, nrm, w))
    return out


class _Sampler:
    """Uniform access to gradients and stresses of a discrete or analytic field."""

    def __init__(self, field):
        self.field = field
        self.analytic = isinstance(field, AnalyticField)

    def grad(self, cell, x):
        return self.field.gradient(x) if self.analytic else self.field.grad_in(cell, x)

    def stress(self, cell, x):
        return self.field.stress(x) if self.analytic else self.field.stress_in(cell, x)

    def strain(self, cell, x):
        return self.field.strain(x) if self.analytic else self.field.strain_in(cell, x)


def _pieces_for(field, partition, contour, n_analytic):
    if isinstance(field, AnalyticField):
        out = []
        for a, b, nrm in contour.sides():
            knots = np.linspace(0, 1, n_analytic + 1)
            for s0, s1 in zip(knots[:-1], knots[1:]):
                out.append(ContourPiece(-1, a + s0 * (b - a), a + s1 * (b - a), nrm, 1.0))
        return out
    return contour_pieces(partition, contour)


def _traction(sig, n):
    return np.column_stack([sig[:, 0] * n[0] + sig[:, 2] * n[1], sig[:, 2] * n[0] + sig[:, 1] * n[1]])


def j_integral(solution: FieldSolution | AnalyticField, contour: RectContour, partition: Partition | None = None,
               released=(), tips=None, gauss: int = 4, n_analytic: int = 64, check: bool = True) -> float:
    """J = int (W n1_hat - t . du/dx1_hat) over the contour, with x1_hat the crack direction.

    Each contour piece uses the fields of the subdomain it lies in; the
    strain energy density is the per-subdomain W = 1/2 eps^T D eps.
    """
    part = partition if partition is not None else getattr(solution, "partition", None)
    if check and part is not None:
        check_contour(part, contour, released, tips)
    f = _Sampler(solution)
    D = solution.material.D
    e1 = contour.direction
    J = 0.0
    for pc in _pieces_for(solution, part, contour, n_analytic):
        rl = segment_rule(pc.p0, pc.p1, gauss)
        x = rl.points
        eps = f.strain(pc.cell, x)
        W = 0.5 * np.einsum("ni,ij,nj->n", eps, D, eps)
        t = _traction(f.stress(pc.cell, x), pc.normal)
        du = np.einsum("nij,j->ni", f.grad(pc.cell, x), e1)
        J += pc.weight * rl.weights @ (W * (pc.normal @ e1) - np.einsum("ni,ni->n", t, du))
    return float(J)


def interaction_integral(solution, auxiliary: AnalyticField, contour: RectContour, partition=None,
                         released=(), tips=None, gauss: int = 4, n_analytic: int = 64,
                         check: bool = True) -> float:
    """M = int [W12 n1_hat - (sigma1 n) . du2/dx1_hat - (sigma2 n) . du1/dx1_hat]."""
    part = partition if partition is not None else getattr(solution, "partition", None)
    if check and part is not None:
        check_contour(part, contour, released, tips)
    f = _Sampler(solution)
    e1 = contour.direction
    M = 0.0
    for pc in _pieces_for(solution, part, contour, n_analytic):
        rl = segment_rule(pc.p0, pc.p1, gauss)
        x = rl.points
        s1, e1v = f.stress(pc.cell, x), f.strain(pc.cell, x)
        g1 = np.einsum("nij,j->ni", f.grad(pc.cell, x), e1)
        s2, e2v = auxiliary.stress(x), auxiliary.strain(x)
        g2 = np.einsum("nij,j->ni", auxiliary.gradient(x), e1)
        W12 = 0.5 * (np.einsum("ni,ni->n", s1, e2v) + np.einsum("ni,ni->n", s2, e1v))
        integrand = (W12 * (pc.normal @ e1)
                     - np.einsum("ni,ni->n", _traction(s1, pc.normal), g2)
                     - np.einsum("ni,ni->n", _traction(s2, pc.normal), g1))
        M += pc.weight * rl.weights @ integrand
    return float(M)


def interaction_integral_sifs(solution, contour: RectContour, tip=None, material: Material | None = None,
                              partition=None, released=(), tips=None, **kw) -> SifPair:
    """K_I and K_II from interaction integrals with unit mode-I and mode-II auxiliary states.

    K = E_bar / 2 * M with E_bar the plane-state effective modulus.
    """
    mat = material or solution.material
    tip = contour.center if tip is None else tip
    aux1 = crack_tip_field(1.0, 0.0, mat, tip, contour.angle)
    aux2 = crack_tip_field(0.0, 1.0, mat, tip, contour.angle)
    M1 = interaction_integral(solution, aux1, contour, partition, released, tips, **kw)
    M2 = interaction_integral(solution, aux2, contour, partition, released, tips, check=False,
                             **{k: v for k, v in kw.items() if k != "check"})
    return SifPair(0.5 * mat.E_bar * M1, 0.5 * mat.E_bar * M2, contour)


def k_from_j(J: float, material: Material) -> float:
    """Mode-I SIF from J assuming pure mode I: K = sqrt(J E_bar)."""
    return float(np.sign(J) * np.sqrt(abs(J) * material.E_bar))
