"""Model builders for the crack initiation and propagation studies."""

from __future__ import annotations

import numpy as np

from ..approximation import Material
from ..assembly import BoundarySpec, Model
from ..benchmarks import DEFAULT_SEED, _segments_on_line, regular_grid
from ..geometry import FREE, Domain, PointCloud, build_voronoi_partition


def _nearest(points: np.ndarray, q) -> int:
    return int(np.argmin(np.hypot(*(points - np.asarray(q, float)).T)))


def hole_plate(hole: str = "square", control: str = "displacement", ratio=(0.0, 1.0), n: int = 41,
               width: float = 4.0, load: float = 1.0, E: float = 1.0, nu: float = 0.3,
               layout: str = "regular", jitter: float = 0.25, seed: int = DEFAULT_SEED,
               n_arc: int = 96) -> Model:
    """Square plate centered at the origin with a central square or circular hole.

    The square hole is axis-aligned with side sqrt(2); the circular hole has
    diameter 2.  ``ratio`` = (r1, r2) sets the biaxial split.  Under
    displacement control the edges move apart by ``load * r`` in total
    (u2 = +-load r2 / 2 on top and bottom, u1 = +-load r1 / 2 on the sides,
    so r1 = 0 holds the sides at u1 = 0).  Under traction control the edges
    carry the outward normal traction ``load * r`` and two pairs of points
    remove the rigid-body modes.
    """
    if hole not in ("square", "circle"):
        raise ValueError("hole must be 'square' or 'circle'")
    if control not in ("displacement", "traction"):
        raise ValueError("control must be 'displacement' or 'traction'")
    r1, r2 = (float(v) for v in ratio)
    c = width / 2
    h = width / (n - 1)
    pts = regular_grid(-c, c, -c, c, n, n)
    if layout == "jittered":
        rng = np.random.default_rng(seed)
        inner = (np.abs(pts) < c - 1e-12).all(axis=1)
        pts[inner] += rng.uniform(-jitter * h, jitter * h, size=(inner.sum(), 2))
    elif layout != "regular":
        raise ValueError("layout must be 'regular' or 'jittered'")
    if hole == "square":
        a = np.sqrt(2.0) / 2
        keep = np.abs(pts).max(axis=1) > a + 0.3 * h
        hole_ring = np.array([[-a, -a], [-a, a], [a, a], [a, -a]])
        corners = np.array([[a, a], [-a, a], [-a, -a], [a, -a]])
    else:
        R = 1.0
        keep = np.hypot(*pts.T) > R + 0.3 * h
        ts = np.linspace(0, 2 * np.pi, n_arc, endpoint=False)[::-1]
        hole_ring = np.column_stack([R * np.cos(ts), R * np.sin(ts)])
        corners = np.zeros((0, 2))
    pts = pts[keep]
    ring = np.array([[-c, -c], [c, -c], [c, c], [-c, c]])
    dom = Domain(ring, ["bottom", "right", "top", "left"], [hole_ring], [[FREE] * len(hole_ring)])
    part = build_voronoi_partition(PointCloud(pts), dom)
    pins: list[tuple[int, int, float]] = []
    if control == "displacement":
        half = 0.5 * load
        bcs = {"top": BoundarySpec(u2=half * r2), "bottom": BoundarySpec(u2=-half * r2),
               "right": BoundarySpec(u1=half * r1), "left": BoundarySpec(u1=-half * r1)}
    else:
        bcs = {"top": BoundarySpec(traction=(0.0, load * r2)), "bottom": BoundarySpec(traction=(0.0, -load * r2)),
               "right": BoundarySpec(traction=(load * r1, 0.0)), "left": BoundarySpec(traction=(-load * r1, 0.0))}
        P = part.points
        pins = [(_nearest(P, (0, c)), 0, 0.0), (_nearest(P, (0, -c)), 0, 0.0),
                (_nearest(P, (c, 0)), 1, 0.0), (_nearest(P, (-c, 0)), 1, 0.0)]
    return Model(part, Material(E, nu), bcs, pins=pins, name=f"{hole}_hole_plate",
                 meta=dict(hole=hole, control=control, ratio=(r1, r2), h=h, corners=corners.tolist(),
                           eta=E))


def _crack_pairs(center, angle, length, spacing):
    """Point pairs mirrored about a straight crack so that their bisectors tile it."""
    n = max(2, int(round(length / spacing)))
    s = length / n
    e1 = np.array([np.cos(angle), np.sin(angle)])
    e2 = np.array([-e1[1], e1[0]])
    ts = -0.5 * length + (np.arange(n) + 0.5) * s
    base = np.asarray(center, float) + ts[:, None] * e1
    return np.vstack([base + 0.5 * s * e2, base - 0.5 * s * e2]), s


def _boundary_points(ring: np.ndarray, spacing: float) -> np.ndarray:
    out = []
    for a, b in zip(ring, np.roll(ring, -1, axis=0)):
        k = max(1, int(np.ceil(np.hypot(*(b - a)) / spacing)))
        t = np.arange(k) / k
        out.append(a + t[:, None] * (b - a))
    return np.vstack(out)


def _cracked_cloud(rng, sampler, n_points, center, angle, length, spacing, ring, inside):
    """Random interior points, points along the boundary ring and mirrored crack pairs.

    ``inside(x)`` tells whether points are far enough from the boundary.
    """
    pairs, s = _crack_pairs(center, angle, length, spacing)
    e1 = np.array([np.cos(angle), np.sin(angle)])
    edge = _boundary_points(ring, spacing)
    pts = sampler(rng, n_points - len(pairs) - len(edge))
    pts = pts[inside(pts)]
    d = pts - np.asarray(center, float)
    along = d @ e1
    across = d @ np.array([-e1[1], e1[0]])
    # capsule around the crack kept free of random points
    ax = np.clip(along, -0.5 * length, 0.5 * length)
    dist = np.hypot(along - ax, across)
    return np.vstack([pts[dist > 1.2 * s], edge, pairs])


def oblique_crack_plate(beta: float = 15.0, a: float = 20.0, L: float = 220.0, W: float = 110.0,
                        n_points: int = 7200, E: float = 71e3, nu: float = 0.33, stress: float = 1.0,
                        seed: int = DEFAULT_SEED) -> Model:
    """Plate in uniaxial tension along its length with a central crack at ``beta`` degrees.

    ``beta`` is measured from the x1 axis, which is normal to the load.  The
    bottom edge is held in x2 with one point pinned in x1; the top edge
    carries the tension ``stress``.
    """
    rng = np.random.default_rng(seed)
    center = (W / 2, L / 2)
    ang = np.radians(beta)
    spacing = np.sqrt(W * L / n_points)

    def sampler(r, m):
        return np.column_stack([r.uniform(0, W, m), r.uniform(0, L, m)])

    dom = Domain.rectangle(0, W, 0, L, ("bottom", FREE, "top", FREE))
    pts = _cracked_cloud(rng, sampler, n_points, center, ang, a, spacing, dom.exterior,
                         lambda x: dom.boundary_distance(x) > 0.5 * spacing)
    part = build_voronoi_partition(PointCloud(pts), dom)
    e1 = np.array([np.cos(ang), np.sin(ang)])
    c = np.asarray(center)
    crack = _segments_on_line(part, c - 0.5 * a * e1, c + 0.5 * a * e1, tol=1e-7)
    bcs = {"bottom": BoundarySpec(u2=0.0), "top": BoundarySpec(traction=(0.0, stress))}
    pins = [(_nearest(part.points, (W / 2, 0.0)), 0, 0.0)]
    return Model(part, Material(E, nu), bcs, pins=pins, released=crack, name="oblique_crack_plate",
                 meta=dict(beta=beta, crack_angle=float(ang), crack_center=center, a=a))


def cracked_disk(diameter: float = 100.0, a: float = 30.0, beta: float = 45.0, n_points: int = 4000,
                 E: float = 15e3, nu: float = 0.21, pressure: float = 1.0, load_arc: float = 10.0,
                 n_arc: int = 256, seed: int = DEFAULT_SEED) -> Model:
    """Disk with a central crack under diametral compression (qualitative demo).

    The line loads are smeared as uniform pressure over ``load_arc`` degrees
    at the top and bottom; the load magnitude is not taken from any test.
    """
    rng = np.random.default_rng(seed)
    R = diameter / 2
    ang = np.radians(beta)
    spacing = np.sqrt(np.pi * R * R / n_points)

    def sampler(r, m):
        rad = R * np.sqrt(r.uniform(0, 1, m))
        th = r.uniform(0, 2 * np.pi, m)
        return np.column_stack([rad * np.cos(th), rad * np.sin(th)])

    ts = np.linspace(0, 2 * np.pi, n_arc, endpoint=False)
    ring = np.column_stack([R * np.cos(ts), R * np.sin(ts)])
    rim = np.linspace(0, 2 * np.pi, int(np.ceil(2 * np.pi * R / spacing)), endpoint=False)
    pts = _cracked_cloud(rng, sampler, n_points, (0.0, 0.0), ang, a, spacing,
                         np.column_stack([R * np.cos(rim), R * np.sin(rim)]),
                         lambda x: np.hypot(*x.T) < R - 0.5 * spacing)
    mid = 0.5 * (ts + np.roll(ts, -1))
    mid[-1] = 0.5 * (ts[-1] + 2 * np.pi)
    half = np.radians(load_arc) / 2
    tags = ["top" if abs(m - np.pi / 2) < half else "bottom" if abs(m - 1.5 * np.pi) < half else FREE for m in mid]
    dom = Domain(ring, tags)
    part = build_voronoi_partition(PointCloud(pts), dom)
    e1 = np.array([np.cos(ang), np.sin(ang)])
    crack = _segments_on_line(part, -0.5 * a * e1, 0.5 * a * e1, tol=1e-7)

    def push(x, nrm):
        return -pressure * nrm

    bcs = {"top": BoundarySpec(traction=push), "bottom": BoundarySpec(traction=push)}
    P = part.points
    pins = [(_nearest(P, (0, R)), 0, 0.0), (_nearest(P, (0, -R)), 0, 0.0),
            (_nearest(P, (R, 0)), 1, 0.0), (_nearest(P, (-R, 0)), 1, 0.0)]
    return Model(part, Material(E, nu), bcs, pins=pins, released=crack, name="cracked_disk",
                 meta=dict(beta=beta, crack_angle=float(ang), a=a))
