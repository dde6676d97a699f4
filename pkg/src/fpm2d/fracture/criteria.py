"""Segment-level crack criteria: average normal traction and bonding energy rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely

from ..quadrature import segment_rule
from ..solve import FieldSolution
from .state import CrackState, CrackTip


class UnsupportedConfigurationError(ValueError):
    pass


def hoop_tractions(solution: FieldSolution, segments=None) -> np.ndarray:
    """n^T sigma_avg n on internal segments, sigma_avg the two-side average stress."""
    part = solution.partition
    segs = np.arange(part.n_segments) if segments is None else np.atleast_1d(np.asarray(segments, dtype=np.int64))
    if len(segs) == 0:
        return np.zeros(0)
    s = solution.segment_stress(segs)
    n = part.seg_normal[segs]
    return n[:, 0] ** 2 * s[:, 0] + n[:, 1] ** 2 * s[:, 1] + 2 * n[:, 0] * n[:, 1] * s[:, 2]


def segment_hoop_traction(solution: FieldSolution, segment: int) -> float:
    return float(hoop_tractions(solution, [segment])[0])


def propagate_max_hoop(state: CrackState, solution: FieldSolution, tip: CrackTip | int,
                       rtol: float = 1e-12) -> int | None:
    """Uncracked segment at ``tip`` with the largest normal traction.

    Values within ``rtol`` of the maximum count as ties and go to the lowest
    segment id.  Returns None when the tip has no uncracked segment left
    (the tip is arrested).
    """
    if not isinstance(tip, CrackTip):
        match = [t for t in state.tips if t.vertex == int(tip)]
        if not match:
            return None
        tip = match[0]
    cand = np.array(sorted(s for s in tip.candidates if s not in state.released), dtype=np.int64)
    if len(cand) == 0:
        return None
    t = hoop_tractions(solution, cand)
    best = t.max()
    tied = cand[t >= best - rtol * max(abs(best), np.abs(t).max(), 1e-300)]
    return int(tied.min())


@dataclass(frozen=True)
class BerRecord:
    """Bonding energy rate of one internal segment.

    ``penalty_term`` and ``flux_term`` are the two segment integrals; the
    energy-density jump term is nonzero only when the frame is not aligned
    with the segment.
    """

    segment: int
    value: float
    penalty_term: float
    flux_term: float
    density_term: float = 0.0


def _clip(p0, p1, region):
    if region is None:
        return [(np.asarray(p0, float), np.asarray(p1, float))]
    g = shapely.intersection(shapely.LineString([p0, p1]), region)
    out = []
    for part in getattr(g, "geoms", [g]):
        if part.is_empty or part.geom_type != "LineString" or part.length <= 0:
            continue
        c = np.asarray(part.coords)
        out.append((c[0], c[-1]))
    return out


def ber(solution: FieldSolution, eta: float, segment: int, frame=None, region=None,
        gauss: int = 2) -> BerRecord:
    """Bonding energy rate of an uncracked internal segment.

    ``frame`` is the unit crack-direction vector x1_hat; by default it is the
    segment tangent, for which the normal has no x1_hat component and the
    energy-density jump vanishes.  ``region`` (a shapely polygon) restricts
    the integrals to the part of the segment inside it.  Only linear trials
    are supported because the flux-derivative term is dropped.
    """
    part = solution.partition
    if solution.shapes[0].order != 1:
        raise UnsupportedConfigurationError("bonding energy rate requires linear trial functions")
    s = int(segment)
    L, R = int(part.left[s]), int(part.right[s])
    p0, p1 = part.seg_p0[s], part.seg_p1[s]
    if frame is None:
        e1 = (p1 - p0) / part.seg_length[s]
    else:
        e1 = np.asarray(frame, float)
        e1 = e1 / np.linalg.norm(e1)
    n = part.seg_normal[s]
    h = part.seg_length[s]
    D = solution.D
    pen = flux = dens = 0.0
    for a, b in _clip(p0, p1, region):
        rl = segment_rule(a, b, gauss)
        x = rl.points
        ju = solution.displacement_in(L, x) - solution.displacement_in(R, x)
        gL, gR = solution.grad_in(L, x), solution.grad_in(R, x)
        jd = np.einsum("nij,j->ni", gL - gR, e1)
        sL, sR = solution.stress_in(L, x), solution.stress_in(R, x)
        sa = 0.5 * (sL + sR)
        tn = np.column_stack([sa[:, 0] * n[0] + sa[:, 2] * n[1], sa[:, 2] * n[0] + sa[:, 1] * n[1]])
        pen -= eta / h * rl.weights @ np.einsum("ni,ni->n", jd, ju)
        flux += rl.weights @ np.einsum("ni,ni->n", tn, jd)
        n1 = float(n @ e1)
        if abs(n1) > 1e-14:
            eL, eR = solution.strain_in(L, x), solution.strain_in(R, x)
            WL = 0.5 * np.einsum("ni,ij,nj->n", eL, D, eL)
            WR = 0.5 * np.einsum("ni,ij,nj->n", eR, D, eR)
            dens -= n1 * rl.weights @ (WL - WR)
    return BerRecord(s, float(pen + flux + dens), float(pen), float(flux), float(dens))


def ber_values(solution: FieldSolution, eta: float, segments=None) -> np.ndarray:
    """Segment-aligned bonding energy rates of many segments at once (linear trials).

    Same quantity as :func:`ber` with the default frame, using that linear
    trials have a constant gradient per subdomain.
    """
    part = solution.partition
    if solution.shapes[0].order != 1:
        raise UnsupportedConfigurationError("bonding energy rate requires linear trial functions")
    segs = np.arange(part.n_segments) if segments is None else np.atleast_1d(np.asarray(segments, dtype=np.int64))
    if len(segs) == 0:
        return np.zeros(0)
    P = part.points
    G = np.stack([solution.grad_in(p, P[p][None])[0] for p in range(part.n_points)])
    u0 = solution.u
    L, R = part.left[segs], part.right[segs]
    p0, p1 = part.seg_p0[segs], part.seg_p1[segs]
    h = part.seg_length[segs]
    t = (p1 - p0) / h[:, None]
    n = part.seg_normal[segs]
    jd = np.einsum("sij,sj->si", G[L] - G[R], t)
    sa = 0.5 * (solution.stress[L] + solution.stress[R])
    tn = np.column_stack([sa[:, 0] * n[:, 0] + sa[:, 2] * n[:, 1], sa[:, 2] * n[:, 0] + sa[:, 1] * n[:, 1]])
    # [u] is linear along the segment: its mean is the midpoint jump
    m = 0.5 * (p0 + p1)
    ju = (u0[L] + np.einsum("sij,sj->si", G[L], m - P[L])) - (u0[R] + np.einsum("sij,sj->si", G[R], m - P[R]))
    pen = -eta * np.einsum("si,si->s", jd, ju)
    flux = h * np.einsum("si,si->s", tn, jd)
    return pen + flux


def ber_all(solution: FieldSolution, eta: float, segments=None, frame=None, region=None) -> list[BerRecord]:
    part = solution.partition
    segs = range(part.n_segments) if segments is None else segments
    return [ber(solution, eta, int(s), frame, region) for s in segs]
