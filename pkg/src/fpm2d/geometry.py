"""Domain partitions for the Fragile Points Method.

A partition assigns one polygonal subdomain to every point, together with the
internal segments shared by two subdomains and the external segments lying on
the domain boundary.  Partitions are built either from a Voronoi diagram of
the point cloud clipped to the domain, or from a conforming element mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
import shapely
from scipy.spatial import Voronoi, cKDTree
from shapely.geometry import LineString, Polygon

FREE = "free"


class PartitionError(ValueError):
    """Raised when a point cloud or mesh cannot be turned into a partition."""


def polygon_area(poly: np.ndarray) -> float:
    """Signed shoelace area (positive for counter-clockwise vertices)."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(poly: np.ndarray) -> np.ndarray:
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def _segment_distance(q: np.ndarray, p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """Distances from every query point in ``q`` (n,2) to every segment (m,2)->(n,m)."""
    d = p1 - p0
    L2 = np.einsum("ij,ij->i", d, d)
    L2 = np.where(L2 > 0, L2, 1.0)
    rel = q[:, None, :] - p0[None, :, :]
    t = np.clip(np.einsum("nmk,mk->nm", rel, d) / L2, 0.0, 1.0)
    foot = p0[None] + t[..., None] * d[None]
    return np.linalg.norm(q[:, None, :] - foot, axis=2)


@dataclass
class Domain:
    """Polygonal problem domain with one boundary tag per edge.

    ``exterior`` is traversed counter-clockwise, each hole clockwise; edge ``k``
    of a ring runs from vertex ``k`` to vertex ``k+1`` (cyclically).
    """

    exterior: np.ndarray
    exterior_tags: list[str]
    holes: list[np.ndarray] = field(default_factory=list)
    hole_tags: list[list[str]] = field(default_factory=list)

    def __post_init__(self):
        self.exterior = np.asarray(self.exterior, dtype=float)
        if polygon_area(self.exterior) < 0:
            self.exterior = self.exterior[::-1].copy()
            self.exterior_tags = _reverse_tags(self.exterior_tags)
        holes, tags = [], []
        for h, t in zip(self.holes, self.hole_tags or [[FREE] * len(h) for h in self.holes]):
            h = np.asarray(h, dtype=float)
            if polygon_area(h) > 0:
                h, t = h[::-1].copy(), _reverse_tags(t)
            holes.append(h)
            tags.append(list(t))
        self.holes, self.hole_tags = holes, tags
        if len(self.exterior_tags) != len(self.exterior):
            raise ValueError("need one tag per exterior edge")

    @classmethod
    def rectangle(cls, x0, x1, y0, y1, tags=(FREE, FREE, FREE, FREE)) -> "Domain":
        """Axis-aligned box; ``tags`` are (bottom, right, top, left)."""
        pts = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float)
        return cls(pts, list(tags))

    @cached_property
    def polygon(self) -> Polygon:
        return Polygon(self.exterior, [h for h in self.holes])

    @property
    def area(self) -> float:
        return self.polygon.area

    @cached_property
    def diameter(self) -> float:
        lo, hi = self.exterior.min(axis=0), self.exterior.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray, list[str]]:
        p0, p1, tags = [], [], []
        for ring, rt in [(self.exterior, self.exterior_tags)] + list(zip(self.holes, self.hole_tags)):
            p0.append(ring)
            p1.append(np.roll(ring, -1, axis=0))
            tags.extend(rt)
        return np.vstack(p0), np.vstack(p1), tags

    def tag_at(self, q: np.ndarray) -> list[str]:
        """Tag of the boundary edge nearest to each query point."""
        p0, p1, tags = self.edges
        d = _segment_distance(np.atleast_2d(q), p0, p1)
        return [tags[k] for k in d.argmin(axis=1)]

    def boundary_distance(self, q: np.ndarray) -> np.ndarray:
        p0, p1, _ = self.edges
        return _segment_distance(np.atleast_2d(q), p0, p1).min(axis=1)


def _reverse_tags(tags):
    # reversing vertex order maps edge k (v_k -> v_k+1) onto edge n-2-k
    tags = list(tags)
    return tags[-2::-1] + tags[-1:]


@dataclass
class PointCloud:
    coords: np.ndarray
    boundary: np.ndarray | None = None

    def __post_init__(self):
        self.coords = np.ascontiguousarray(self.coords, dtype=float).reshape(-1, 2)
        if self.boundary is None:
            self.boundary = np.zeros(len(self.coords), dtype=bool)

    def __len__(self):
        return len(self.coords)


@dataclass
class Partition:
    """Subdomains, internal segments and tagged external segments.

    Internal segment ``s`` separates ``left[s]`` and ``right[s]``; its unit
    normal points from the left subdomain into the right one.
    """

    points: np.ndarray
    cells: list[np.ndarray]
    left: np.ndarray
    right: np.ndarray
    seg_p0: np.ndarray
    seg_p1: np.ndarray
    ext_owner: np.ndarray
    ext_p0: np.ndarray
    ext_p1: np.ndarray
    ext_tags: list[str]
    domain_area: float
    diameter: float

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.ext_owner = np.asarray(self.ext_owner, dtype=np.int64)
        self.seg_p0 = np.asarray(self.seg_p0, dtype=float).reshape(-1, 2)
        self.seg_p1 = np.asarray(self.seg_p1, dtype=float).reshape(-1, 2)
        self.ext_p0 = np.asarray(self.ext_p0, dtype=float).reshape(-1, 2)
        self.ext_p1 = np.asarray(self.ext_p1, dtype=float).reshape(-1, 2)
        d = self.seg_p1 - self.seg_p0
        self.seg_length = np.hypot(d[:, 0], d[:, 1])
        n = np.column_stack([d[:, 1], -d[:, 0]]) / np.where(self.seg_length > 0, self.seg_length, 1)[:, None]
        towards = self.points[self.right] - self.points[self.left]
        flip = np.einsum("ij,ij->i", n, towards) < 0
        n[flip] *= -1
        self.seg_normal = n
        e = self.ext_p1 - self.ext_p0
        self.ext_length = np.hypot(e[:, 0], e[:, 1])
        self.ext_normal = np.column_stack([e[:, 1], -e[:, 0]]) / np.where(self.ext_length > 0, self.ext_length, 1)[:, None]

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_segments(self) -> int:
        return len(self.left)

    @cached_property
    def areas(self) -> np.ndarray:
        return np.array([polygon_area(c) for c in self.cells])

    @cached_property
    def centroids(self) -> np.ndarray:
        return np.array([polygon_centroid(c) for c in self.cells])

    @cached_property
    def seg_midpoint(self) -> np.ndarray:
        return 0.5 * (self.seg_p0 + self.seg_p1)

    @cached_property
    def point_segments(self) -> list[np.ndarray]:
        """Internal segment ids touching each subdomain."""
        lists = [[] for _ in range(self.n_points)]
        for s, (a, b) in enumerate(zip(self.left, self.right)):
            lists[a].append(s)
            lists[b].append(s)
        return [np.array(x, dtype=np.int64) for x in lists]

    @cached_property
    def point_external(self) -> list[np.ndarray]:
        lists = [[] for _ in range(self.n_points)]
        for k, o in enumerate(self.ext_owner):
            lists[o].append(k)
        return [np.array(x, dtype=np.int64) for x in lists]

    @cached_property
    def _vertex_ids(self) -> tuple[np.ndarray, np.ndarray]:
        ends = np.vstack([self.seg_p0, self.seg_p1, self.ext_p0, self.ext_p1])
        ids = _merge_close(ends, 1e-9 * self.diameter)
        uniq, inv = np.unique(ids, return_inverse=True)
        verts = np.zeros((len(uniq), 2))
        verts[inv] = ends
        return verts, inv

    @property
    def vertex_table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Merged vertex coordinates and the vertex ids of each internal segment's ends."""
        verts, inv = self._vertex_ids
        m = self.n_segments
        return verts, inv[:m], inv[m:2 * m]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        """Merged vertex ids lying on the external boundary."""
        _, inv = self._vertex_ids
        return np.unique(inv[2 * self.n_segments:])

    def flipped(self, segment: int) -> "Partition":
        """Copy with the left/right designation of one internal segment swapped."""
        left, right = self.left.copy(), self.right.copy()
        left[segment], right[segment] = right[segment], left[segment]
        return Partition(self.points, self.cells, left, right, self.seg_p0, self.seg_p1,
                         self.ext_owner, self.ext_p0, self.ext_p1, self.ext_tags,
                         self.domain_area, self.diameter)

    def locate(self, q: np.ndarray) -> np.ndarray:
        """Subdomain containing each query point (-1 when outside all cells)."""
        q = np.atleast_2d(q)
        tree = self._strtree
        pts = shapely.points(q)
        idx_q, idx_c = tree.query(pts, predicate="intersects")
        out = np.full(len(q), -1, dtype=np.int64)
        # first hit wins; points on shared edges resolve to the lower cell id
        order = np.lexsort((idx_c, idx_q))
        idx_q, idx_c = idx_q[order], idx_c[order]
        first = np.ones(len(idx_q), dtype=bool)
        first[1:] = idx_q[1:] != idx_q[:-1]
        out[idx_q[first]] = idx_c[first]
        return out

    @cached_property
    def shapely_cells(self) -> np.ndarray:
        return np.array([shapely.Polygon(c) for c in self.cells], dtype=object)

    @cached_property
    def shapely_union(self):
        return shapely.union_all(self.shapely_cells)

    @cached_property
    def _strtree(self):
        return shapely.STRtree(self.shapely_cells)

    def check(self, rtol: float = 1e-10) -> None:
        """Validate the tiling and segment invariants; raises PartitionError."""
        total = self.areas.sum()
        if abs(total - self.domain_area) > rtol * max(self.domain_area, 1e-300):
            raise PartitionError(f"cells cover area {total!r}, domain area {self.domain_area!r}")
        if np.any(self.areas <= 0):
            raise PartitionError(f"degenerate cells: {np.flatnonzero(self.areas <= 0).tolist()}")
        if np.any(self.seg_length <= 0):
            raise PartitionError("zero-length internal segment")


def _merge_close(xy: np.ndarray, tol: float) -> np.ndarray:
    """Cluster ids so that points closer than ``tol`` share an id."""
    tree = cKDTree(xy)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    parent = np.arange(len(xy))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return np.array([find(i) for i in range(len(xy))])


def _clean_ring(ring: np.ndarray, tol: float) -> np.ndarray:
    keep = [ring[0]]
    for p in ring[1:]:
        if np.hypot(*(p - keep[-1])) > tol:
            keep.append(p)
    if len(keep) > 1 and np.hypot(*(keep[0] - keep[-1])) <= tol:
        keep.pop()
    out = np.array(keep)
    if polygon_area(out) < 0:
        out = out[::-1]
    return out


def _ring_coords(poly: Polygon) -> np.ndarray:
    return np.asarray(poly.exterior.coords)[:-1]


def check_cloud(cloud: PointCloud, domain: Domain) -> None:
    pts = cloud.coords
    if len(pts) == 0:
        raise PartitionError("empty point cloud")
    tol = 1e-12 * domain.diameter
    ids = _merge_close(pts, max(tol, 1e-300))
    dup = np.flatnonzero(ids != np.arange(len(pts)))
    if len(dup):
        pairs = [(int(ids[d]), int(d)) for d in dup]
        raise PartitionError(f"duplicate points (kept, duplicate): {pairs}")
    region = domain.polygon.buffer(1e-9 * domain.diameter)
    inside = shapely.contains_xy(region, pts[:, 0], pts[:, 1])
    if not inside.all():
        raise PartitionError(f"points outside the domain: {np.flatnonzero(~inside).tolist()}")


def build_voronoi_partition(cloud: PointCloud | np.ndarray, domain: Domain) -> Partition:
    """Voronoi cells of the cloud clipped to the domain polygon.

    Internal segments are the clipped Voronoi ridges, external segments are
    the cell edges lying on the domain boundary and inherit the tag of the
    domain edge they lie on.
    """
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(cloud)
    check_cloud(cloud, domain)
    pts = cloud.coords
    n = len(pts)
    dpoly = domain.polygon
    diam = domain.diameter
    tol = 1e-10 * diam

    if n == 1:
        cells = [_clean_ring(_ring_coords(dpoly), tol)]
        left = right = np.zeros(0, dtype=np.int64)
        seg_p0 = seg_p1 = np.zeros((0, 2))
    else:
        lo, hi = domain.exterior.min(axis=0), domain.exterior.max(axis=0)
        c, big = 0.5 * (lo + hi), 10.0 * diam
        far = c + big * np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]], dtype=float)
        vor = Voronoi(np.vstack([pts, far]))
        raw = []
        for i in range(n):
            region = vor.regions[vor.point_region[i]]
            if -1 in region or len(region) < 3:
                raise PartitionError(f"unbounded Voronoi region for point {i}")
            raw.append(Polygon(vor.vertices[region]).convex_hull)
        clipped = shapely.intersection(np.array(raw, dtype=object), dpoly)
        cells = []
        for i, g in enumerate(clipped):
            cells.append(_clean_ring(_ring_coords(_pick_piece(g, pts[i], i)), tol))

        rp = vor.ridge_points
        rv = vor.ridge_vertices
        mask = (rp[:, 0] < n) & (rp[:, 1] < n)
        left, right, seg_p0, seg_p1 = [], [], [], []
        lines, owners = [], []
        for (a, b), verts in zip(rp[mask], np.asarray(rv, dtype=object)[mask]):
            if -1 in verts:
                raise PartitionError("unbounded ridge between interior points")
            lines.append(LineString(vor.vertices[list(verts)]))
            owners.append((min(a, b), max(a, b)))
        pieces = shapely.intersection(np.array(lines, dtype=object), dpoly)
        for (a, b), g in zip(owners, pieces):
            for ls in _line_parts(g):
                xy = np.asarray(ls.coords)
                if np.hypot(*(xy[-1] - xy[0])) <= tol:
                    continue
                left.append(a)
                right.append(b)
                seg_p0.append(xy[0])
                seg_p1.append(xy[-1])
        order = np.lexsort((right, left)) if left else np.zeros(0, dtype=int)
        left = np.asarray(left, dtype=np.int64)[order]
        right = np.asarray(right, dtype=np.int64)[order]
        seg_p0 = np.asarray(seg_p0).reshape(-1, 2)[order]
        seg_p1 = np.asarray(seg_p1).reshape(-1, 2)[order]

    ext_owner, ext_p0, ext_p1 = [], [], []
    for i, ring in enumerate(cells):
        a, b = ring, np.roll(ring, -1, axis=0)
        mid = 0.5 * (a + b)
        on = domain.boundary_distance(mid) <= 1e-8 * diam
        for k in np.flatnonzero(on):
            ext_owner.append(i)
            ext_p0.append(a[k])
            ext_p1.append(b[k])
    ext_p0 = np.asarray(ext_p0).reshape(-1, 2)
    ext_p1 = np.asarray(ext_p1).reshape(-1, 2)
    tags = domain.tag_at(0.5 * (ext_p0 + ext_p1)) if len(ext_p0) else []
    part = Partition(pts, cells, left, right, seg_p0, seg_p1, ext_owner, ext_p0, ext_p1,
                     tags, domain.area, diam)
    part.check()
    return part


def _pick_piece(g, p: np.ndarray, i: int) -> Polygon:
    if isinstance(g, Polygon):
        return g
    polys = [q for q in getattr(g, "geoms", []) if isinstance(q, Polygon) and q.area > 0]
    if not polys:
        raise PartitionError(f"empty cell for point {i}")
    big = [q for q in polys if q.area > 1e-14 * sum(x.area for x in polys)]
    if len(big) > 1:
        raise PartitionError(f"Voronoi cell of point {i} is split by the domain; add points near it")
    return big[0]


def _line_parts(g):
    if g.is_empty:
        return []
    if isinstance(g, LineString):
        return [g]
    out = []
    for q in getattr(g, "geoms", []):
        out.extend(_line_parts(q))
    return out


def partition_from_mesh(
    nodes: np.ndarray,
    elements: Sequence[Sequence[int]],
    edge_tags: Mapping[tuple[int, int], str] | None = None,
    placement_priority: Callable[[str], int] | None = None,
) -> tuple[Partition, PointCloud]:
    """Turn a conforming element mesh into an FPM partition.

    Interior elements carry their point at the centroid.  Elements with a
    tagged boundary edge carry it at the midpoint of their highest-priority,
    then longest, tagged boundary edge.  ``edge_tags`` maps node-id pairs (any
    order) to a tag; untagged boundary edges are ``"free"`` and never attract
    the point.
    """
    nodes = np.asarray(nodes, dtype=float)
    edge_tags = {tuple(sorted(k)): v for k, v in (edge_tags or {}).items()}
    prio = placement_priority or (lambda tag: 0)
    cells, conn = [], []
    for e, el in enumerate(elements):
        el = list(el)
        ring = nodes[el]
        a = polygon_area(ring)
        if abs(a) <= 1e-14 * max(1.0, np.ptp(ring, axis=0).max() ** 2):
            raise PartitionError(f"degenerate (zero-area) element {e}")
        if a < 0:
            el = el[::-1]
            ring = ring[::-1]
        cells.append(ring.copy())
        conn.append(el)

    owners: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for e, el in enumerate(conn):
        for k in range(len(el)):
            a, b = el[k], el[(k + 1) % len(el)]
            owners.setdefault((min(a, b), max(a, b)), []).append((e, a, b))
    bad = [k for k, v in owners.items() if len(v) > 2]
    if bad:
        raise PartitionError(f"edge shared by more than two elements: {bad[0]}")

    geoms = np.array([shapely.Polygon(c) for c in cells], dtype=object)
    tree = shapely.STRtree(geoms)
    extent = np.ptp(nodes, axis=0).max()
    for key, own in owners.items():
        if len(own) == 1:
            e, a, b = own[0]
            pa, pb = nodes[a], nodes[b]
            d = pb - pa
            nrm = np.array([d[1], -d[0]]) / np.hypot(*d)
            probe = 0.5 * (pa + pb) + 1e-7 * extent * nrm
            hit = tree.query(shapely.points(probe), predicate="within")
            if len(hit):
                raise PartitionError(f"non-conforming edge {key} of element {e} (hanging node)")

    points = np.array([polygon_centroid(c) for c in cells])
    boundary = np.zeros(len(cells), dtype=bool)
    for e, el in enumerate(conn):
        best = None
        for k in range(len(el)):
            a, b = el[k], el[(k + 1) % len(el)]
            key = (min(a, b), max(a, b))
            if len(owners[key]) != 1:
                continue
            tag = edge_tags.get(key, FREE)
            if tag == FREE:
                continue
            rank = (prio(tag), np.hypot(*(nodes[b] - nodes[a])))
            if best is None or rank > best[0]:
                best = (rank, a, b)
        if best is not None:
            points[e] = 0.5 * (nodes[best[1]] + nodes[best[2]])
            boundary[e] = True

    left, right, p0, p1 = [], [], [], []
    ext_owner, e0, e1, tags = [], [], [], []
    for key, own in sorted(owners.items()):
        if len(own) == 2:
            (ea, a, b), (eb, _, _) = own
            lo, hi = min(ea, eb), max(ea, eb)
            left.append(lo)
            right.append(hi)
            p0.append(nodes[a])
            p1.append(nodes[b])
        else:
            e, a, b = own[0]
            ext_owner.append(e)
            e0.append(nodes[a])
            e1.append(nodes[b])
            tags.append(edge_tags.get(key, FREE))
    order = np.lexsort((right, left))
    area = float(sum(polygon_area(c) for c in cells))
    part = Partition(points, cells, np.array(left)[order], np.array(right)[order],
                     np.array(p0).reshape(-1, 2)[order], np.array(p1).reshape(-1, 2)[order],
                     ext_owner, e0, e1, tags, area, float(np.hypot(*np.ptp(nodes, axis=0))))
    part.check()
    return part, PointCloud(points, boundary)


@dataclass(frozen=True)
class SupportSet:
    point: int
    members: tuple[int, ...]
    rings: int


class Adjacency:
    """Point adjacency through uncracked internal segments."""

    def __init__(self, partition: Partition, released: set[int] | frozenset[int] = frozenset()):
        self.partition = partition
        self.released = frozenset(released)
        nb = [set() for _ in range(partition.n_points)]
        for s, (a, b) in enumerate(zip(partition.left.tolist(), partition.right.tolist())):
            if s in self.released:
                continue
            nb[a].add(b)
            nb[b].add(a)
        self.ring1 = [tuple(sorted(x)) for x in nb]

    def support(self, point: int, rings: int = 1) -> tuple[int, ...]:
        first = self.ring1[point]
        if rings == 1:
            return first
        out = set(first)
        for j in first:
            out.update(self.ring1[j])
        out.discard(point)
        return tuple(sorted(out))


def neighbor_support(partition: Partition, crack, point: int, rings: int = 1) -> SupportSet:
    """Points whose subdomains connect to ``point`` through uncracked segments.

    ``crack`` is anything exposing ``released`` (a set of segment ids), or an
    iterable of released segment ids, or None.
    """
    if rings not in (1, 2):
        raise ValueError("rings must be 1 or 2")
    released = getattr(crack, "released", crack) or ()
    adj = Adjacency(partition, frozenset(released))
    return SupportSet(point, adj.support(point, rings), rings)
