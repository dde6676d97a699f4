"""Model builders for the verification and fracture problems.

Every builder returns a :class:`~fpm2d.assembly.Model`; ``build_benchmark``
dispatches by name.  Regular layouts include the boundary: an ``nx x ny``
grid on [x0, x1] places points at ``x0 + i (x1 - x0) / (nx - 1)``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .approximation import Material
from .assembly import BoundarySpec, Model
from .fields import (AnalyticField, cantilever_field, hole_field, mode1_field, patch_field,
                     ring_field)
from .geometry import FREE, Domain, PointCloud, build_voronoi_partition, partition_from_mesh

DEFAULT_SEED = 20240601

# reference values quoted for comparison in reports
MIXED_MODE_REFERENCE = {"K_I": 34.0, "K_II": 4.55}
COOK_REFERENCE_U2 = 19.869
HOLE_SCF_EXACT = 3.0


def regular_grid(x0, x1, y0, y1, nx: int, ny: int) -> np.ndarray:
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])


def parse_resolution(res) -> tuple[int, ...]:
    """'41x6' -> (41, 6); '793' -> (793,); tuples pass through."""
    if isinstance(res, str):
        return tuple(int(v) for v in res.lower().split("x"))
    if np.isscalar(res):
        return (int(res),)
    return tuple(int(v) for v in res)


def _traction_from(field: AnalyticField) -> Callable:
    def t(x, n):
        s = field.stress(x)
        return np.column_stack([s[:, 0] * n[0] + s[:, 2] * n[1], s[:, 2] * n[0] + s[:, 1] * n[1]])
    return t


def _u(field: AnalyticField, comp: int) -> Callable:
    return lambda x: field.displacement(x)[:, comp]


# ----------------------------------------------------------------------------
# patch test


def patch(resolution="3x3", layout: str = "regular", seed: int = DEFAULT_SEED,
          E: float = 1.0, nu: float = 0.3) -> Model:
    """Unit square, exact linear field imposed by tractions plus three constraints."""
    field = patch_field(E, nu)
    res = parse_resolution(resolution)
    if layout == "regular":
        nx, ny = (res * 2)[:2] if len(res) == 1 else res
        pts = regular_grid(0, 1, 0, 1, nx, ny)
    elif layout == "random":
        n = int(np.prod(res))
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0.02, 0.98, size=(n, 2))
    else:
        raise ValueError(f"unknown layout {layout!r}")
    tags = ("bottom", "right", "top", "left")
    dom = Domain.rectangle(0, 1, 0, 1, tags)
    part = build_voronoi_partition(PointCloud(pts), dom)
    t = _traction_from(field)
    bcs = {k: BoundarySpec(traction=t) for k in tags}
    # both components at the point nearest the origin, one at the farthest point
    i0 = int(np.argmin(np.hypot(*pts.T)))
    d = np.hypot(*(pts - pts[i0]).T)
    i1 = int(np.argmax(d))
    dx, dy = pts[i1] - pts[i0]
    c1 = 1 if abs(dx) >= abs(dy) else 0
    u0 = field.displacement(pts[[i0]])[0]
    u1 = field.displacement(pts[[i1]])[0]
    pins = [(i0, 0, u0[0]), (i0, 1, u0[1]), (i1, c1, u1[c1])]
    return Model(part, field.material, bcs, pins, exact=field, name="patch",
                 meta=dict(resolution=resolution, layout=layout, seed=seed))


# ----------------------------------------------------------------------------
# cantilever


def cantilever(resolution="41x6", nu: float = 0.3, E: float = 1e5, P: float = 1.0,
               H: float = 1.0, L: float = 8.0, layout: str = "regular", seed: int = DEFAULT_SEED) -> Model:
    """Beam with exact displacements on both ends and free long edges."""
    field = cantilever_field(P, E, nu, H, L)
    nx, ny = parse_resolution(resolution)
    pts = regular_grid(0, L, 0, H, nx, ny)
    if layout == "random":
        rng = np.random.default_rng(seed)
        hx, hy = L / (nx - 1), H / (ny - 1)
        inner = (pts[:, 0] > 0) & (pts[:, 0] < L) & (pts[:, 1] > 0) & (pts[:, 1] < H)
        pts[inner] += rng.uniform(-0.3, 0.3, size=(inner.sum(), 2)) * [hx, hy]
    dom = Domain.rectangle(0, L, 0, H, (FREE, "end", FREE, "root"))
    part = build_voronoi_partition(PointCloud(pts), dom)
    bcs = {"root": BoundarySpec(u1=_u(field, 0), u2=_u(field, 1)),
           "end": BoundarySpec(u1=_u(field, 0), u2=_u(field, 1))}
    return Model(part, field.material, bcs, exact=field, name="cantilever",
                 meta=dict(resolution=f"{nx}x{ny}", h=L / (nx - 1)))


# ----------------------------------------------------------------------------
# ring quarter


def _arc(r: float, t0: float, t1: float, angles=(), n_min: int = 64) -> np.ndarray:
    """Vertices of a circular arc from t0 to t1 including the given angles."""
    fine = np.linspace(t0, t1, n_min + 1)
    lo, hi = min(t0, t1), max(t0, t1)
    extra = [a for a in angles if lo <= a <= hi]
    ts = np.unique(np.round(np.concatenate([fine, extra]), 14))
    if t1 < t0:
        ts = ts[::-1]
    return np.column_stack([r * np.cos(ts), r * np.sin(ts)])


def ring_quarter(resolution="15x21", a: float = 1.0, b: float = 2.0, p: float = 1.0,
                 E: float = 1e5, nu: float = 0.3) -> Model:
    """Quarter ring with symmetry edges and radial tension p on r = b.

    ``resolution`` is (radial count) x (angular count) of a polar grid.
    """
    field = ring_field(a, b, p, E, nu)
    nr, nt = parse_resolution(resolution)
    rs = np.linspace(a, b, nr)
    ts = np.linspace(0, np.pi / 2, nt)
    R, T = np.meshgrid(rs, ts, indexing="ij")
    pts = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    pts[np.abs(pts) < 1e-14] = 0.0
    outer = _arc(b, 0, np.pi / 2, ts, 8 * nt)
    inner = _arc(a, np.pi / 2, 0, ts, 8 * nt)
    ring = np.vstack([outer, inner])
    tags = (["outer"] * (len(outer) - 1) + ["left"] + ["inner"] * (len(inner) - 1) + ["bottom"])
    dom = Domain(ring, tags)
    part = build_voronoi_partition(PointCloud(pts), dom)

    def radial(x, n):
        r = np.hypot(x[:, 0], x[:, 1])[:, None]
        return p * x / r

    bcs = {"outer": BoundarySpec(traction=radial), "left": BoundarySpec(u1=0.0),
           "bottom": BoundarySpec(u2=0.0)}
    return Model(part, field.material, bcs, exact=field, name="ring_quarter",
                 meta=dict(resolution=f"{nr}x{nt}", h=(b - a) / (nr - 1)))


# ----------------------------------------------------------------------------
# plate with a circular hole (quarter model)

# (grid count per side, arc count, clearance factor) tuned to the point totals
_HOLE_LAYOUTS = {43: (7, 7, 0.5), 217: (16, 15, 0.3), 793: (31, 29, 0.15)}


def hole_layout(n_side: int, n_arc: int, clearance: float = 0.5, a: float = 1.0, w: float = 2.0) -> np.ndarray:
    """Uniform grid on [0, w]^2 outside r = a(1 + clearance h) plus points on the arc."""
    h = w / (n_side - 1)
    grid = regular_grid(0, w, 0, w, n_side, n_side)
    keep = np.hypot(*grid.T) > a + clearance * h
    ts = np.linspace(0, np.pi / 2, n_arc)
    arc = np.column_stack([a * np.cos(ts), a * np.sin(ts)])
    arc[np.abs(arc) < 1e-14] = 0.0
    return np.vstack([grid[keep], arc])


def _hole_counts(target: int) -> tuple[int, int, float]:
    if target in _HOLE_LAYOUTS:
        return _HOLE_LAYOUTS[target]
    best = None
    for n in range(4, 200):
        h = 2.0 / (n - 1)
        m = max(3, int(round(np.pi / 2 / h)) + 1)
        cnt = len(hole_layout(n, m))
        if best is None or abs(cnt - target) < abs(best[0] - target):
            best = (cnt, n, m)
    return best[1], best[2], 0.5


def hole_quarter(resolution=793, a: float = 1.0, p: float = 1.0, E: float = 1.0, nu: float = 0.3,
                 w: float = 2.0) -> Model:
    """Quarter of an infinite plate with a hole; exact displacements on the far edges.

    ``resolution`` is the approximate total point count.
    """
    field = hole_field(a, p, E, nu)
    (target,) = parse_resolution(resolution)
    n, m, c = _hole_counts(target)
    pts = hole_layout(n, m, c, a, w)
    ts = np.linspace(0, np.pi / 2, m)
    arc = _arc(a, np.pi / 2, 0, ts, 16 * m)
    ring = np.vstack([[[a, 0.0], [w, 0.0], [w, w], [0.0, w]], arc[:-1]])
    ring[np.abs(ring) < 1e-14] = 0.0
    tags = ["bottom", "far", "far", "left"] + ["hole"] * (len(arc) - 1)
    dom = Domain(ring, tags)
    part = build_voronoi_partition(PointCloud(pts), dom)
    bcs = {"bottom": BoundarySpec(u2=0.0), "left": BoundarySpec(u1=0.0),
           "far": BoundarySpec(u1=_u(field, 0), u2=_u(field, 1))}
    probe = int(np.argmin(np.hypot(pts[:, 0], pts[:, 1] - a)))
    return Model(part, field.material, bcs, exact=field, name="hole_quarter",
                 meta=dict(resolution=len(pts), scf_point=probe))


def stress_concentration(solution, model: Model) -> float:
    """sigma_11 of the subdomain whose point sits at (0, a), over p."""
    p = model.meta["scf_point"]
    return float(solution.stress[p, 0] / model.exact.params["p"])


# ----------------------------------------------------------------------------
# cracked plates


def _segments_on_line(part, p0, p1, tol: float = 1e-9) -> np.ndarray:
    """Internal segments lying on the straight segment p0-p1."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    d = p1 - p0
    L = np.hypot(*d)
    t = d / L
    nrm = np.array([-t[1], t[0]])
    out = []
    for s in range(part.n_segments):
        a, b = part.seg_p0[s] - p0, part.seg_p1[s] - p0
        if abs(a @ nrm) > tol * L or abs(b @ nrm) > tol * L:
            continue
        sa, sb = a @ t, b @ t
        if min(sa, sb) >= -tol * L and max(sa, sb) <= L * (1 + tol):
            out.append(s)
    return np.array(out, dtype=np.int64)


def mode1_square(resolution="40x40", b: float = 10.0, K_I: float = 1.0, E: float = 1.0, nu: float = 0.3) -> Model:
    """Edge-cracked square with the exact mode-I displacements on all sides.

    The crack runs along x2 = b/2 from x1 = 0 to the tip at (b/2, b/2).
    """
    nx, ny = parse_resolution(resolution)
    tip = (b / 2, b / 2)
    field = mode1_field(K_I, E, nu, "stress", tip=tip)
    pts = regular_grid(0, b, 0, b, nx, ny)
    dom = Domain.rectangle(0, b, 0, b, ("outer",) * 4)
    part = build_voronoi_partition(PointCloud(pts), dom)
    crack = _segments_on_line(part, (0, b / 2), tip)
    bcs = {"outer": BoundarySpec(u1=_u(field, 0), u2=_u(field, 1))}
    h = b / (nx - 1)
    return Model(part, field.material, bcs, exact=field, released=crack, name="mode1_square",
                 meta=dict(resolution=f"{nx}x{ny}", h=h, tip=tip, crack_angle=0.0,
                           contour=(5 * h, 9 * h)))


def mixed_mode_plate(resolution="36x80", W: float = 7.0, L: float = 16.0, a: float = 3.5,
                     t: float = 1.0, E: float = 1.0, nu: float = 0.3) -> Model:
    """Edge-cracked plate, fixed bottom and tangential traction on the top edge."""
    nx, ny = parse_resolution(resolution)
    pts = regular_grid(0, W, 0, L, nx, ny)
    dom = Domain.rectangle(0, W, 0, L, ("fixed", FREE, "shear", FREE))
    part = build_voronoi_partition(PointCloud(pts), dom)
    crack = _segments_on_line(part, (0, L / 2), (a, L / 2))
    bcs = {"fixed": BoundarySpec(u1=0.0, u2=0.0), "shear": BoundarySpec(traction=(t, 0.0))}
    return Model(part, Material(E, nu), bcs, released=crack, name="mixed_mode_plate",
                 meta=dict(resolution=f"{nx}x{ny}", tip=(a, L / 2), crack_angle=0.0,
                           contour=(1.6, 3.2), reference=MIXED_MODE_REFERENCE))


# ----------------------------------------------------------------------------
# Cook's membrane

COOK_CORNERS = np.array([[0.0, 0.0], [48.0, 44.0], [48.0, 60.0], [0.0, 44.0]])


def quad_mesh(corners: np.ndarray, nx: int, ny: int):
    """Structured quadrilateral mesh of a bilinearly mapped unit square."""
    s, t = np.linspace(0, 1, nx + 1), np.linspace(0, 1, ny + 1)
    S, T = np.meshgrid(s, t, indexing="xy")
    S, T = S.ravel(), T.ravel()
    P = corners
    nodes = ((1 - S) * (1 - T))[:, None] * P[0] + (S * (1 - T))[:, None] * P[1] \
        + (S * T)[:, None] * P[2] + ((1 - S) * T)[:, None] * P[3]
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    elems = [[idx[j, i], idx[j, i + 1], idx[j + 1, i + 1], idx[j + 1, i]]
             for j in range(ny) for i in range(nx)]
    return nodes, elems, idx


def cook(resolution="8x8", E: float = 1.0, nu: float = 0.3, plane: str = "stress", F: float = 1.0 / 16) -> Model:
    """Cook's skew membrane: clamped left edge, uniform shear traction F on the right edge."""
    nx, ny = parse_resolution(resolution)
    nodes, elems, idx = quad_mesh(COOK_CORNERS, nx, ny)
    tags = {}
    for j in range(ny):
        tags[(idx[j, 0], idx[j + 1, 0])] = "clamped"
        tags[(idx[j, nx], idx[j + 1, nx])] = "load"
    part, cloud = partition_from_mesh(nodes, elems, tags,
                                      placement_priority=lambda tag: 1 if tag == "clamped" else 0)
    bcs = {"clamped": BoundarySpec(u1=0.0, u2=0.0), "load": BoundarySpec(traction=(0.0, F))}
    return Model(part, Material(E, nu, plane), bcs, name="cook",
                 meta=dict(resolution=f"{nx}x{ny}", point_A=(48.0, 60.0), reference=COOK_REFERENCE_U2))


def cook_tip_displacement(solution) -> float:
    """u2 at point A = (48, 60) from the trial function of the cell containing it."""
    return float(solution.displacement_at([[48.0, 60.0]])[0, 1])


# ----------------------------------------------------------------------------

BUILDERS: dict[str, Callable[..., Model]] = {
    "patch": patch,
    "cantilever": cantilever,
    "ring_quarter": ring_quarter,
    "hole_quarter": hole_quarter,
    "mode1_square": mode1_square,
    "mixed_mode_plate": mixed_mode_plate,
    "cook": cook,
}


def build_benchmark(name: str, resolution=None, **options) -> Model:
    """Model for a named benchmark at the given resolution."""
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(BUILDERS)}") from None
    if resolution is not None:
        options["resolution"] = resolution
    return builder(**options)
