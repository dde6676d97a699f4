"""Mesh readers: the line-oriented ``.fpm`` text format and the node/element subset of ``.inp``.

Both produce a :class:`Mesh` that :func:`mesh_model` turns into a model via
the mesh-derived partition.  The text format is described in
``docs/formats.md``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .approximation import Material
from .assembly import BoundarySpec, Model
from .geometry import FREE, partition_from_mesh


class MeshFormatError(ValueError):
    """Malformed mesh file; the message names the file and line."""


@dataclass
class Mesh:
    nodes: np.ndarray
    elements: list[list[int]]
    node_ids: list[int]
    element_ids: list[int]
    # boundary edges (0-based node index pair) -> tag
    edge_tags: dict[tuple[int, int], str] = field(default_factory=dict)
    material: Material | None = None
    bcs: dict[str, BoundarySpec] = field(default_factory=dict)
    source: str = ""

    def boundary_edges(self) -> list[tuple[int, int]]:
        """Edges used by exactly one element, as (a, b) in element orientation."""
        count: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for el in self.elements:
            for k in range(len(el)):
                a, b = el[k], el[(k + 1) % len(el)]
                count.setdefault((min(a, b), max(a, b)), []).append((a, b))
        return [v[0] for v in count.values() if len(v) == 1]

    def tag_edges(self, tag: str, box) -> int:
        """Tag every boundary edge with both end nodes inside ``box`` = (x0, y0, x1, y1).

        Returns the number of edges tagged.
        """
        x0, y0, x1, y1 = (float(v) for v in box)
        eps = 1e-9 * max(1.0, float(np.ptp(self.nodes, axis=0).max()))
        inside = ((self.nodes[:, 0] >= x0 - eps) & (self.nodes[:, 0] <= x1 + eps)
                  & (self.nodes[:, 1] >= y0 - eps) & (self.nodes[:, 1] <= y1 + eps))
        n = 0
        for a, b in self.boundary_edges():
            if inside[a] and inside[b]:
                self.edge_tags[(min(a, b), max(a, b))] = tag
                n += 1
        return n


def _index(ids: list[int], what: str, where: str) -> dict[int, int]:
    lut: dict[int, int] = {}
    for k, i in enumerate(ids):
        if i in lut:
            raise MeshFormatError(f"{where}: duplicate {what} id {i}")
        lut[i] = k
    return lut


def _bc_from_words(words: list[str], where: str) -> BoundarySpec:
    kw: dict[str, float] = {}
    for w in words:
        if "=" not in w:
            raise MeshFormatError(f"{where}: expected key=value, got {w!r}")
        k, v = w.split("=", 1)
        if k not in ("u1", "u2", "t1", "t2"):
            raise MeshFormatError(f"{where}: unknown boundary key {k!r}")
        try:
            kw[k] = float(v)
        except ValueError:
            raise MeshFormatError(f"{where}: bad number {v!r}") from None
    trac = None
    if "t1" in kw or "t2" in kw:
        trac = (kw.get("t1", 0.0), kw.get("t2", 0.0))
    return BoundarySpec(u1=kw.get("u1"), u2=kw.get("u2"), traction=trac)


def parse_fpm(text: str, source: str = "<string>") -> Mesh:
    """Parse the ``.fpm`` text format."""
    nodes: list[tuple[float, float]] = []
    node_ids: list[int] = []
    raw_elems: list[tuple[list[int], str]] = []
    elem_ids: list[int] = []
    raw_edges: list[tuple[int, int, str, str]] = []
    material = None
    bcs: dict[str, BoundarySpec] = {}
    section = None
    tag = ""
    for ln, line in enumerate(text.splitlines(), 1):
        where = f"{source}:{ln}"
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        key = words[0].upper()
        if key == "NODE":
            section = "node"
        elif key == "ELEMENT":
            section = "element"
        elif key == "EDGESET":
            if len(words) != 2:
                raise MeshFormatError(f"{where}: EDGESET needs exactly one tag")
            section, tag = "edge", words[1]
        elif key == "MATERIAL":
            if len(words) not in (3, 4):
                raise MeshFormatError(f"{where}: MATERIAL E nu [stress|strain]")
            try:
                material = Material(float(words[1]), float(words[2]), *(words[3:]))
            except ValueError as exc:
                raise MeshFormatError(f"{where}: {exc}") from None
            section = None
        elif key == "BC":
            if len(words) < 3:
                raise MeshFormatError(f"{where}: BC tag key=value ...")
            bcs[words[1]] = _bc_from_words(words[2:], where)
            section = None
        elif section == "node":
            if len(words) != 3:
                raise MeshFormatError(f"{where}: node line needs 'id x1 x2'")
            try:
                node_ids.append(int(words[0]))
                nodes.append((float(words[1]), float(words[2])))
            except ValueError:
                raise MeshFormatError(f"{where}: bad node line {line!r}") from None
        elif section == "element":
            try:
                vals = [int(w) for w in words]
            except ValueError:
                raise MeshFormatError(f"{where}: bad element line {line!r}") from None
            if len(vals) < 4:
                raise MeshFormatError(f"{where}: element needs an id and at least 3 nodes")
            elem_ids.append(vals[0])
            raw_elems.append((vals[1:], where))
        elif section == "edge":
            try:
                a, b = (int(w) for w in words)
            except ValueError:
                raise MeshFormatError(f"{where}: edge line needs two node ids") from None
            raw_edges.append((a, b, tag, where))
        else:
            raise MeshFormatError(f"{where}: data line outside any section")
    return _finish(nodes, node_ids, raw_elems, elem_ids, raw_edges, material, bcs, source)


def _finish(nodes, node_ids, raw_elems, elem_ids, raw_edges, material, bcs, source) -> Mesh:
    if not nodes:
        raise MeshFormatError(f"{source}: no nodes")
    if not raw_elems:
        raise MeshFormatError(f"{source}: no elements")
    nlut = _index(node_ids, "node", source)
    _index(elem_ids, "element", source)
    elements = []
    for conn, where in raw_elems:
        try:
            elements.append([nlut[i] for i in conn])
        except KeyError as exc:
            raise MeshFormatError(f"{where}: unknown node id {exc.args[0]}") from None
    mesh = Mesh(np.array(nodes, dtype=float), elements, list(node_ids), list(elem_ids),
                material=material, bcs=bcs, source=source)
    boundary = {(min(a, b), max(a, b)) for a, b in mesh.boundary_edges()}
    for a, b, tag, where in raw_edges:
        try:
            key = tuple(sorted((nlut[a], nlut[b])))
        except KeyError as exc:
            raise MeshFormatError(f"{where}: unknown node id {exc.args[0]}") from None
        if key not in boundary:
            raise MeshFormatError(f"{where}: edge ({a}, {b}) is not a boundary edge of the mesh")
        mesh.edge_tags[key] = tag
    return mesh


# corner-node counts for element families whose extra nodes follow the corners
_CORNERS = {3: 3, 4: 4, 6: 3, 8: 4, 9: 4}


def parse_inp(text: str, source: str = "<string>") -> Mesh:
    """Read *NODE and *ELEMENT blocks of an ``.inp`` deck; other keywords are skipped.

    Only the corner nodes of six-, eight- and nine-node elements are kept.
    A third node coordinate, if present, is ignored.
    """
    nodes, node_ids, raw_elems, elem_ids = [], [], [], []
    section = None
    pending: list[str] = []
    pending_where = ""
    for ln, line in enumerate(text.splitlines(), 1):
        where = f"{source}:{ln}"
        s = line.strip()
        if not s or s.startswith("**"):
            continue
        if s.startswith("*"):
            if pending:
                raise MeshFormatError(f"{pending_where}: element record continues into a keyword line")
            kw = s[1:].split(",")[0].strip().upper()
            section = {"NODE": "node", "ELEMENT": "element"}.get(kw)
            continue
        if section is None:
            continue
        words = [w.strip() for w in s.split(",")]
        if section == "node":
            words = [w for w in words if w]
            if len(words) not in (3, 4):
                raise MeshFormatError(f"{where}: *NODE line needs 'id, x, y[, z]'")
            try:
                node_ids.append(int(words[0]))
                nodes.append((float(words[1]), float(words[2])))
            except ValueError:
                raise MeshFormatError(f"{where}: bad node line {s!r}") from None
        else:
            if not pending:
                pending_where = where
            cont = s.endswith(",")
            pending.extend(w for w in words if w)
            if cont:
                continue
            try:
                vals = [int(w) for w in pending]
            except ValueError:
                raise MeshFormatError(f"{pending_where}: bad element line") from None
            pending = []
            conn = vals[1:]
            if len(conn) not in _CORNERS:
                raise MeshFormatError(f"{pending_where}: unsupported element with {len(conn)} nodes")
            elem_ids.append(vals[0])
            raw_elems.append((conn[:_CORNERS[len(conn)]], pending_where))
    if pending:
        raise MeshFormatError(f"{pending_where}: unterminated element record")
    return _finish(nodes, node_ids, raw_elems, elem_ids, [], None, {}, source)


def read_mesh(path: str | os.PathLike) -> Mesh:
    """Dispatch on the extension: ``.inp`` for the card format, anything else as ``.fpm`` text."""
    path = os.fspath(path)
    with open(path) as fh:
        text = fh.read()
    if path.lower().endswith(".inp"):
        return parse_inp(text, path)
    return parse_fpm(text, path)


def mesh_model(mesh: Mesh, material: Material | None = None, bcs: dict[str, BoundarySpec] | None = None,
               name: str | None = None) -> Model:
    """Model on the mesh-derived partition.

    Displacement-tagged edges attract boundary points before traction-tagged
    ones.  Arguments override what the mesh file declares.
    """
    mat = material or mesh.material or Material(1.0, 0.3)
    spec = dict(mesh.bcs)
    spec.update(bcs or {})
    unknown = sorted(set(mesh.edge_tags.values()) - set(spec) - {FREE})
    if unknown:
        raise MeshFormatError(f"edge tags without boundary conditions: {unknown}")

    def priority(tag: str) -> int:
        bc = spec.get(tag)
        return 1 if bc is not None and any(bc.prescribes) else 0

    part, _ = partition_from_mesh(mesh.nodes, mesh.elements, mesh.edge_tags, placement_priority=priority)
    label = name or (os.path.splitext(os.path.basename(mesh.source))[0] if mesh.source else "mesh")
    return Model(part, mat, spec, name=label, meta=dict(source=mesh.source))
