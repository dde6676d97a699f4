"""Point and boundary stiffness, load vector, global assembly and constraints.

The discrete weak form is

    sum_E int_E B^T D B                                   (point stiffness)
  - sum_e int_e ({sigma(u) n} [v] + {sigma(v) n} [u])      (consistency terms)
  + sum_e eta / h_e int_e [u][v]                          (penalty term)

over subdomains E and uncracked internal segments e, with displacement
boundary conditions imposed strongly at the points lying on them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .approximation import (Material, RecoveryMatrix, ShapeSet, n_basis, recover_point,
                            warn_penalty)
from .geometry import FREE, Adjacency, Partition, _segment_distance
from .quadrature import QuadratureRule, polygon_rule, segment_rule


class ConstraintError(ValueError):
    pass


Value = float | Callable[[np.ndarray], np.ndarray] | None


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary condition attached to an edge tag.

    ``u1``/``u2`` prescribe a displacement component (a constant or a
    callable of the (n, 2) coordinates).  ``traction`` is a constant vector
    or a callable ``t(x, normal) -> (n, 2)``; it acts only on components that
    are not prescribed.
    """

    u1: Value = None
    u2: Value = None
    traction: Sequence[float] | Callable | None = None

    @property
    def prescribes(self) -> tuple[bool, bool]:
        return self.u1 is not None, self.u2 is not None


def _eval_value(v: Value, x: np.ndarray) -> np.ndarray:
    if callable(v):
        return np.asarray(v(x), float).reshape(len(x))
    return np.full(len(x), float(v))


@dataclass
class Model:
    """A partitioned elasticity problem ready for discretization."""

    partition: Partition
    material: Material
    bcs: Mapping[str, BoundarySpec] = field(default_factory=dict)
    # extra point constraints (point id, component, value)
    pins: Sequence[tuple[int, int, float]] = ()
    body_force: np.ndarray | None = None
    exact: object | None = None
    released: Sequence[int] = ()
    name: str = "model"
    meta: dict = field(default_factory=dict)


@dataclass
class GlobalSystem:
    """Assembled stiffness, load and strong constraints."""

    K: sp.csr_matrix
    Q: np.ndarray
    fixed: np.ndarray
    values: np.ndarray
    eta: float

    @property
    def n_dofs(self) -> int:
        return self.K.shape[0]

    def dof(self, point: int, comp: int) -> int:
        return 2 * point + comp


@dataclass
class ReducedSystem:
    K: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    values: np.ndarray
    n_dofs: int

    def expand(self, q_free: np.ndarray) -> np.ndarray:
        q = np.zeros(self.n_dofs)
        q[self.free] = q_free
        q[self.fixed] = self.values
        return q


# ----------------------------------------------------------------------------
# packing helpers shared by both kernel implementations


def _pack(recs: Sequence[RecoveryMatrix], centers: np.ndarray, nb: int):
    npts = np.array([len(r.dof_points) for r in recs], dtype=np.int64)
    sizes = 2 * nb * 2 * npts
    coff = np.zeros(len(recs), dtype=np.int64)
    np.cumsum(sizes[:-1], out=coff[1:])
    cflat = np.concatenate([np.ascontiguousarray(r.C, dtype=float).ravel() for r in recs]) if recs else np.zeros(0)
    return np.ascontiguousarray(centers, dtype=float), npts, coff, cflat


def _stack_rules(rules: Sequence[QuadratureRule]):
    qptr = np.zeros(len(rules) + 1, dtype=np.int64)
    np.cumsum([len(r.weights) for r in rules], out=qptr[1:])
    if rules:
        qxy = np.ascontiguousarray(np.vstack([r.points for r in rules]))
        qw = np.ascontiguousarray(np.concatenate([r.weights for r in rules]))
    else:
        qxy, qw = np.zeros((0, 2)), np.zeros(0)
    return qptr, qxy, qw


def _offsets(sizes: np.ndarray) -> tuple[np.ndarray, int]:
    off = np.zeros(len(sizes), dtype=np.int64)
    if len(sizes):
        np.cumsum(sizes[:-1], out=off[1:])
    return off, int(sizes.sum())


def point_stiffness(recs: Sequence[RecoveryMatrix], centers: np.ndarray, rules: Sequence[QuadratureRule],
                    D: np.ndarray, kern=None) -> list[np.ndarray]:
    """K_E = int_E B^T D B for each recovery, integrated with its rule."""
    kern = kern or kernels.get()
    if not recs:
        return []
    nb = n_basis(recs[0].order)
    center, npts, coff, cflat = _pack(recs, centers, nb)
    qptr, qxy, qw = _stack_rules(rules)
    sizes = (2 * npts) ** 2
    ooff, total = _offsets(sizes)
    out = np.zeros(total)
    items = np.arange(len(recs), dtype=np.int64)
    kern.point_blocks(center, npts, coff, cflat, nb, items, qptr, qxy, qw,
                      np.ascontiguousarray(D, dtype=float), ooff, out)
    return [out[o:o + s].reshape(2 * n, 2 * n) for o, s, n in zip(ooff, sizes, npts)]


def boundary_stiffness(rec_left: Sequence[RecoveryMatrix], rec_right: Sequence[RecoveryMatrix],
                       center_left: np.ndarray, center_right: np.ndarray,
                       normals: np.ndarray, lengths: np.ndarray, rules: Sequence[QuadratureRule],
                       D: np.ndarray, eta: float, c_cons: float = 1.0, c_pen: float = 1.0,
                       kern=None) -> list[tuple[np.ndarray, np.ndarray]]:
    """K_h for each segment on the union of both sides' dof points.

    Returns (union point ids, block) pairs.  ``c_cons`` and ``c_pen`` scale the
    consistency and penalty terms (1, 1 for the full operator).
    """
    kern = kern or kernels.get()
    ns = len(rec_left)
    if ns == 0:
        return []
    if np.any(np.asarray(lengths) <= 0):
        raise ValueError("zero-length internal segment")
    nb = n_basis(rec_left[0].order)
    recs = list(rec_left) + list(rec_right)
    center, npts, coff, cflat = _pack(recs, np.vstack([center_left, center_right]), nb)
    left = np.arange(ns, dtype=np.int64)
    right = left + ns
    unions, lmaps, rmaps = [], [], []
    for rl, rr in zip(rec_left, rec_right):
        u = np.union1d(rl.dof_points, rr.dof_points)
        unions.append(u)
        lmaps.append(np.searchsorted(u, rl.dof_points))
        rmaps.append(np.searchsorted(u, rr.dof_points))
    usize = np.array([len(u) for u in unions], dtype=np.int64)
    lmap_off, _ = _offsets(npts[:ns])
    rmap_off, _ = _offsets(npts[ns:])
    lmap = np.concatenate(lmaps).astype(np.int64)
    rmap = np.concatenate(rmaps).astype(np.int64)
    qptr, qxy, qw = _stack_rules(rules)
    pen = c_pen * eta / np.asarray(lengths, float)
    sizes = (2 * usize) ** 2
    ooff, total = _offsets(sizes)
    out = np.zeros(total)
    kern.segment_blocks(center, npts, coff, cflat, nb, left, right,
                        np.ascontiguousarray(normals, dtype=float), np.ascontiguousarray(pen),
                        float(c_cons), qptr, qxy, qw, np.ascontiguousarray(D, dtype=float),
                        usize, lmap_off, lmap, rmap_off, rmap, ooff, out)
    return [(u, out[o:o + s].reshape(2 * len(u), 2 * len(u))) for u, o, s in zip(unions, ooff, sizes)]


def _point_dofs(pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.int64)
    return np.column_stack([2 * pts, 2 * pts + 1]).ravel()


def _scatter(blocks: Sequence[tuple[np.ndarray, np.ndarray]], n: int, sign: float = 1.0) -> sp.csr_matrix:
    if not blocks:
        return sp.csr_matrix((n, n))
    rows, cols, vals = [], [], []
    for pts, Kb in blocks:
        d = _point_dofs(pts)
        rows.append(np.repeat(d, len(d)))
        cols.append(np.tile(d, len(d)))
        vals.append(sign * Kb.ravel())
    M = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return M.tocsr()


# ----------------------------------------------------------------------------


class Discretization:
    """FPM discretization of a model with incrementally updatable cracks.

    Holds per-point recoveries and per-point / per-segment stiffness blocks so
    that releasing internal segments only recomputes the few points whose
    supports change.
    """

    def __init__(self, model: Model, order: int = 1, backend: str = "gfd", eta: float | None = None,
                 rings: int | None = None, csrbf_factor: float = 1.5, kernel: str | None = None,
                 segment_points: int | None = None, warn: bool = True):
        self.model = model
        self.partition = model.partition
        self.material = model.material
        self.order = order
        self.nb = n_basis(order)
        self.backend = backend
        self.rings = rings
        self.csrbf_factor = csrbf_factor
        self.eta = float(model.material.E if eta is None else eta)
        if not self.eta > 0:
            raise ValueError("penalty must be positive")
        if warn:
            warn_penalty(self.eta, model.material.E)
        self.kern = kernels.get(kernel)
        self.segment_points = segment_points or (1 if order == 1 else 2)
        self.D = model.material.D
        part = self.partition
        self.released: set[int] = set()
        self.adjacency = Adjacency(part, self.released)
        self.point_rules = [polygon_rule(c, 1 if order == 1 else 2) for c in part.cells]
        self.seg_rules = [segment_rule(a, b, self.segment_points) for a, b in zip(part.seg_p0, part.seg_p1)]
        self.recoveries: list[RecoveryMatrix] = [self._recover(p) for p in range(part.n_points)]
        self.ke: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self.kh: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._compute_points(range(part.n_points))
        self._compute_segments(range(part.n_segments))
        self._K = None
        if len(model.released):
            self.release(model.released)

    # -- construction ---------------------------------------------------------

    def _recover(self, p: int) -> RecoveryMatrix:
        return recover_point(self.partition.points, self.adjacency, p, self.order, self.backend,
                             self.rings, self.csrbf_factor)

    def _compute_points(self, pts) -> None:
        pts = list(pts)
        recs = [self.recoveries[p] for p in pts]
        blocks = point_stiffness(recs, self.partition.points[pts], [self.point_rules[p] for p in pts],
                                 self.D, self.kern)
        for p, r, Kb in zip(pts, recs, blocks):
            self.ke[p] = (r.dof_points, Kb)

    def _segment_blocks(self, segs, c_cons: float = 1.0, c_pen: float = 1.0):
        part = self.partition
        segs = np.asarray(list(segs), dtype=np.int64)
        L, R = part.left[segs], part.right[segs]
        return boundary_stiffness([self.recoveries[i] for i in L], [self.recoveries[i] for i in R],
                                  part.points[L], part.points[R], part.seg_normal[segs],
                                  part.seg_length[segs], [self.seg_rules[s] for s in segs],
                                  self.D, self.eta, c_cons, c_pen, self.kern)

    def _compute_segments(self, segs) -> None:
        segs = [s for s in segs if s not in self.released]
        for s, blk in zip(segs, self._segment_blocks(segs)):
            self.kh[s] = blk

    def shapes(self, p: int) -> ShapeSet:
        return ShapeSet(self.recoveries[p], self.partition.points[p])

    @property
    def n_dofs(self) -> int:
        return 2 * self.partition.n_points

    # -- global matrices --------------------------------------------------------

    @property
    def K(self) -> sp.csr_matrix:
        if self._K is None:
            self._K = self.assemble_stiffness()
        return self._K

    def assemble_stiffness(self) -> sp.csr_matrix:
        n = self.n_dofs
        blocks = list(self.ke.values()) + [self.kh[s] for s in sorted(self.kh)]
        return _scatter(blocks, n)

    def penalty_matrix(self) -> sp.csr_matrix:
        """Assembled pure-penalty part (unit multiplier, current eta)."""
        segs = [s for s in range(self.partition.n_segments) if s not in self.released]
        return _scatter(self._segment_blocks(segs, c_cons=0.0, c_pen=1.0), self.n_dofs)

    def bulk_matrix(self) -> sp.csr_matrix:
        return _scatter(list(self.ke.values()), self.n_dofs)

    # -- cracks -------------------------------------------------------------

    def release(self, segments: Sequence[int] | int) -> dict:
        """Release internal segments and update K incrementally.

        Returns a summary with the points whose recovery changed and the
        sparse stiffness correction that was added to K.
        """
        if np.isscalar(segments):
            segments = [int(segments)]
        part = self.partition
        segments = [int(s) for s in segments]
        for s in segments:
            if not 0 <= s < part.n_segments:
                raise ValueError(f"segment {s} is not an internal segment")
            if s in self.released:
                raise ValueError(f"segment {s} is already released")
        if len(set(segments)) != len(segments):
            raise ValueError("duplicate segment in release list")
        K = self.K
        removed = [self.kh.pop(s) for s in segments]
        old_adj = self.adjacency
        cand = set()
        for s in segments:
            for p in (int(part.left[s]), int(part.right[s])):
                cand.add(p)
                cand.update(old_adj.ring1[p])
        self.released.update(segments)
        self.adjacency = Adjacency(part, self.released)
        changed = []
        for p in sorted(cand):
            r = self._recover(p)
            old = self.recoveries[p]
            if (r.method != old.method or not np.array_equal(r.dof_points, old.dof_points)
                    or not np.array_equal(r.C, old.C)):
                self.recoveries[p] = r
                changed.append(p)
        minus = list(removed)
        plus = []
        if changed:
            minus += [self.ke[p] for p in changed]
            self._compute_points(changed)
            plus += [self.ke[p] for p in changed]
            segs = sorted({int(s) for p in changed for s in part.point_segments[p]} - self.released)
            minus += [self.kh[s] for s in segs]
            self._compute_segments(segs)
            plus += [self.kh[s] for s in segs]
        else:
            segs = []
        delta = _scatter(plus, self.n_dofs) - _scatter(minus, self.n_dofs)
        self._K = (K + delta).tocsr()
        return {"segments": segments, "changed_points": changed, "updated_segments": segs, "delta": delta}

    # -- loads and constraints ----------------------------------------------------

    def load_vector(self, scale: float = 1.0, gauss: int = 3) -> np.ndarray:
        return load_vector(self.partition, self.model.bcs, [self.shapes(p) for p in range(self.partition.n_points)],
                           self.model.body_force, scale=scale, gauss=gauss,
                           point_rules=self.point_rules)

    def constraints(self, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        return strong_constraints(self.partition, self.model.bcs, self.model.pins, scale)

    def system(self, scale: float = 1.0) -> GlobalSystem:
        fixed, values = self.constraints(scale)
        return GlobalSystem(self.K, self.load_vector(scale), fixed, values, self.eta)


def load_vector(partition: Partition, bcs: Mapping[str, BoundarySpec], shapes: Sequence[ShapeSet],
                body_force=None, scale: float = 1.0, gauss: int = 3,
                point_rules: Sequence[QuadratureRule] | None = None,
                segment_tractions: Mapping[int, Sequence[float]] | None = None,
                released: Sequence[int] = ()) -> np.ndarray:
    """Q = sum_E int N^T f + sum_{Gamma_t} int N^T t.

    ``segment_tractions`` exists to reject tractions on internal segments:
    cracked faces are traction free, and intact internal segments carry none.
    """
    n = partition.n_points
    Q = np.zeros(2 * n)
    if segment_tractions:
        bad = sorted(set(segment_tractions) & set(released))
        if bad:
            raise ValueError(f"traction prescribed on cracked segment(s) {bad}; crack faces are traction free")
        raise ValueError("tractions are only accepted on external boundary segments")
    if body_force is not None:
        f = np.broadcast_to(np.asarray(body_force, float), (n, 2))
        rules = point_rules or [polygon_rule(c, 2) for c in partition.cells]
        for p in range(n):
            if not np.any(f[p]):
                continue
            rl = rules[p]
            N = shapes[p].N(rl.points)
            Q[shapes[p].dofs] += scale * np.einsum("q,qia,i->a", rl.weights, N, f[p])
    for k, tag in enumerate(partition.ext_tags):
        spec = bcs.get(tag)
        if spec is None or spec.traction is None:
            continue
        rl = segment_rule(partition.ext_p0[k], partition.ext_p1[k], gauss)
        if callable(spec.traction):
            t = np.asarray(spec.traction(rl.points, partition.ext_normal[k]), float).reshape(-1, 2)
        else:
            t = np.broadcast_to(np.asarray(spec.traction, float), (len(rl.weights), 2))
        t = t.copy()
        for c, pres in enumerate(spec.prescribes):
            if pres:
                t[:, c] = 0.0
        p = int(partition.ext_owner[k])
        N = shapes[p].N(rl.points)
        Q[shapes[p].dofs] += scale * np.einsum("q,qia,qi->a", rl.weights, N, t)
    return Q


def strong_constraints(partition: Partition, bcs: Mapping[str, BoundarySpec],
                       pins: Sequence[tuple[int, int, float]] = (), scale: float = 1.0,
                       tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Collect (dof, value) pairs for points lying on displacement-tagged edges.

    A point is constrained by an edge when it lies on that edge.  A subdomain
    with a displacement-tagged edge whose point is elsewhere is reported with
    a warning and left unconstrained.
    """
    vals: dict[int, float] = {}

    def put(d: int, v: float):
        if d in vals and not np.isclose(vals[d], v, rtol=1e-9, atol=1e-12):
            raise ConstraintError(f"conflicting prescriptions on dof {d}: {vals[d]!r} vs {v!r}")
        vals[d] = v

    pts = partition.points
    dist_tol = tol * partition.diameter
    missed = set()
    for k, tag in enumerate(partition.ext_tags):
        spec = bcs.get(tag)
        if spec is None or not any(spec.prescribes):
            continue
        p = int(partition.ext_owner[k])
        d = _segment_distance(pts[p:p + 1], partition.ext_p0[k:k + 1], partition.ext_p1[k:k + 1])[0, 0]
        if d > dist_tol:
            missed.add(p)
            continue
        x = pts[p:p + 1]
        for c, v in enumerate((spec.u1, spec.u2)):
            if v is not None:
                put(2 * p + c, scale * float(_eval_value(v, x)[0]))
    for p, c, v in pins:
        put(2 * int(p) + int(c), scale * float(v))
    if missed:
        warnings.warn(f"{len(missed)} subdomain(s) have displacement-tagged edges but their point is "
                      f"not on them; left unconstrained: {sorted(missed)[:10]}", stacklevel=2)
    fixed = np.array(sorted(vals), dtype=np.int64)
    return fixed, np.array([vals[d] for d in fixed], float)


def assemble(model: Model, order: int = 1, backend: str = "gfd", eta: float | None = None, **kw) -> GlobalSystem:
    """Build the discretization of ``model`` and return its global system."""
    return Discretization(model, order, backend, eta, **kw).system()


def apply_constraints(system: GlobalSystem) -> ReducedSystem:
    """Symmetric elimination: K_ff q_f = Q_f - K_fc q_c."""
    n = system.n_dofs
    fixed = np.asarray(system.fixed, dtype=np.int64)
    if len(np.unique(fixed)) != len(fixed):
        # duplicates must agree
        vals: dict[int, float] = {}
        for d, v in zip(fixed, system.values):
            if d in vals and vals[d] != v:
                raise ConstraintError(f"conflicting prescriptions on dof {d}")
            vals[d] = v
        fixed = np.array(sorted(vals), dtype=np.int64)
        values = np.array([vals[d] for d in fixed])
    else:
        values = np.asarray(system.values, float)
    if np.any((fixed < 0) | (fixed >= n)):
        raise ConstraintError("constraint dof out of range")
    mask = np.ones(n, dtype=bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    K = system.K.tocsr()
    Kff = K[free][:, free]
    rhs = system.Q[free] - K[free][:, fixed] @ values
    return ReducedSystem(Kff.tocsr(), rhs, free, fixed, values, n)
