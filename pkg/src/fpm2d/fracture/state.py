"""Crack bookkeeping: released segments, traction-free faces and crack tips."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..assembly import Discretization
from ..geometry import Partition


@dataclass(frozen=True)
class CrackFace:
    """One traction-free face of a released segment, seen from ``owner``."""

    segment: int
    owner: int
    p0: tuple[float, float]
    p1: tuple[float, float]
    # outward normal of the owner subdomain on this face
    normal: tuple[float, float]


@dataclass(frozen=True)
class CrackTip:
    vertex: int
    position: tuple[float, float]
    # uncracked internal segments meeting at the vertex, ascending
    candidates: tuple[int, ...]


@dataclass(frozen=True)
class HistoryEntry:
    step: int
    segment: int
    value: float
    load: float
    criterion: str


@dataclass
class CrackState:
    """Released segments, their faces, the current tips and a release log.

    The state never changes the number of unknowns: a release only removes
    couplings between the two subdomains on either side of the segment.
    """

    partition: Partition
    released: set[int] = field(default_factory=set)
    faces: dict[int, tuple[CrackFace, CrackFace]] = field(default_factory=dict)
    history: list[HistoryEntry] = field(default_factory=list)

    @classmethod
    def from_discretization(cls, disc: Discretization) -> "CrackState":
        st = cls(disc.partition)
        for s in sorted(disc.released):
            st._mark(s)
        return st

    def _mark(self, s: int) -> None:
        part = self.partition
        L, R = int(part.left[s]), int(part.right[s])
        p0, p1 = tuple(part.seg_p0[s]), tuple(part.seg_p1[s])
        n = part.seg_normal[s]
        self.faces[s] = (CrackFace(s, L, p0, p1, (float(n[0]), float(n[1]))),
                         CrackFace(s, R, p1, p0, (float(-n[0]), float(-n[1]))))
        self.released.add(s)

    @property
    def tips(self) -> list[CrackTip]:
        return find_tips(self.partition, self.released)

    def record(self, step: int, segment: int, value: float, load: float, criterion: str) -> None:
        self.history.append(HistoryEntry(step, int(segment), float(value), float(load), criterion))


def release_segment(state: CrackState, disc: Discretization, segments) -> dict:
    """Release internal segments in both the crack state and the discretization.

    Returns the summary of :meth:`Discretization.release`, including the
    sparse stiffness correction ``delta``.
    """
    if state.partition is not disc.partition:
        raise ValueError("crack state and discretization use different partitions")
    if np.isscalar(segments):
        segments = [int(segments)]
    info = disc.release(segments)
    for s in info["segments"]:
        state._mark(s)
    return info


def find_tips(partition: Partition, released) -> list[CrackTip]:
    """Vertices where exactly one released segment meets uncracked internal ones.

    Vertices on the external boundary are never tips: a crack that reaches
    the boundary has split the body there.
    """
    released = set(int(s) for s in released)
    if not released:
        return []
    verts, v0, v1 = partition.vertex_table
    nv = len(verts)
    cracked = np.zeros(nv, dtype=np.int64)
    rel = np.fromiter(released, dtype=np.int64)
    np.add.at(cracked, v0[rel], 1)
    np.add.at(cracked, v1[rel], 1)
    on_boundary = np.zeros(nv, dtype=bool)
    on_boundary[partition.boundary_vertices] = True
    tips = []
    for v in np.flatnonzero((cracked == 1) & ~on_boundary):
        segs = np.flatnonzero((v0 == v) | (v1 == v))
        cand = tuple(int(s) for s in segs if int(s) not in released)
        if cand:
            tips.append(CrackTip(int(v), (float(verts[v, 0]), float(verts[v, 1])), cand))
    return tips
