"""Metric graph data model, validation and normalization.

A metric graph is a set of vertices joined by oriented arcs.  Arc ``j`` is
identified with the interval ``[0, l_j]``; ``x = 0`` sits at the origin
vertex and ``x = l_j`` at the terminal vertex.  Parallel arcs and loops are
allowed.
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import MetricGraphError


@dataclass(frozen=True)
class Vertex:
    id: int
    x: float | None = None
    y: float | None = None


@dataclass(frozen=True)
class Arc:
    id: int
    origin: int
    terminal: int
    length: float


@dataclass(frozen=True)
class MetricGraph:
    """Immutable metric graph.

    Arcs are kept sorted by id; the position of an arc in ``arcs`` is its
    column block in the secular matrix and its slot in every per-arc array.
    """

    vertices: tuple[Vertex, ...]
    arcs: tuple[Arc, ...]
    _incidence: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices, key=lambda v: v.id)))
        object.__setattr__(self, "arcs", tuple(sorted(self.arcs, key=lambda a: a.id)))
        inc: dict[int, list[tuple[int, int]]] = defaultdict(list)
        for pos, arc in enumerate(self.arcs):
            inc[arc.origin].append((pos, 0))
            inc[arc.terminal].append((pos, 1))
        object.__setattr__(self, "_incidence", dict(inc))

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int, float]], coords=None) -> "MetricGraph":
        """Build a graph from ``(origin, terminal, length)`` triples; arc ids are 1..m."""
        arcs = [Arc(i + 1, int(a), int(b), float(l)) for i, (a, b, l) in enumerate(edges)]
        ids = sorted({a.origin for a in arcs} | {a.terminal for a in arcs})
        coords = coords or {}
        verts = [Vertex(v, *coords[v]) if v in coords else Vertex(v) for v in ids]
        return cls(tuple(verts), tuple(arcs))

    @property
    def m(self) -> int:
        return len(self.arcs)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([a.length for a in self.arcs], dtype=float)

    @property
    def total_length(self) -> float:
        return float(sum(a.length for a in self.arcs))

    @property
    def arc_ids(self) -> list[int]:
        return [a.id for a in self.arcs]

    @property
    def vertex_ids(self) -> list[int]:
        return [v.id for v in self.vertices]

    def arc_position(self, arc_id: int) -> int:
        for pos, arc in enumerate(self.arcs):
            if arc.id == arc_id:
                return pos
        raise KeyError(f"no arc with id {arc_id}")

    def arc(self, arc_id: int) -> Arc:
        return self.arcs[self.arc_position(arc_id)]

    def ends_at(self, vertex_id: int) -> list[tuple[int, int]]:
        """Arc ends at a vertex as ``(arc position, end)``; end 0 is x=0, end 1 is x=l."""
        return list(self._incidence.get(vertex_id, ()))

    def degree(self, vertex_id: int) -> int:
        return len(self._incidence.get(vertex_id, ()))

    def leaves(self) -> list[int]:
        return [v.id for v in self.vertices if self.degree(v.id) == 1]

    def with_lengths(self, new_lengths: dict[int, float]) -> "MetricGraph":
        """Copy of the graph with selected arc lengths replaced (keyed by arc id)."""
        arcs = tuple(
            replace(a, length=float(new_lengths[a.id])) if a.id in new_lengths else a
            for a in self.arcs
        )
        return MetricGraph(self.vertices, arcs)

    def components(self) -> list[set[int]]:
        adj: dict[int, set[int]] = defaultdict(set)
        for a in self.arcs:
            adj[a.origin].add(a.terminal)
            adj[a.terminal].add(a.origin)
        seen: set[int] = set()
        comps = []
        for v in self.vertex_ids:
            if v in seen:
                continue
            comp = {v}
            queue = deque([v])
            seen.add(v)
            while queue:
                u = queue.popleft()
                for w in adj[u]:
                    if w not in seen:
                        seen.add(w)
                        comp.add(w)
                        queue.append(w)
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        verts = []
        for v in self.vertices:
            rec = {"id": v.id}
            if v.x is not None:
                rec["x"] = v.x
            if v.y is not None:
                rec["y"] = v.y
            verts.append(rec)
        arcs = [{"id": a.id, "from": a.origin, "to": a.terminal, "length": a.length} for a in self.arcs]
        return {"vertices": verts, "arcs": arcs}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricGraph":
        try:
            verts = [Vertex(int(v["id"]), v.get("x"), v.get("y")) for v in data["vertices"]]
            arcs = [
                Arc(int(a["id"]), int(a["from"]), int(a["to"]), float(a["length"]))
                for a in data["arcs"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise MetricGraphError("BAD_GRAPH_FILE", f"malformed graph record: {exc}") from exc
        return cls(tuple(verts), tuple(arcs))

    def to_json(self) -> str:
        # json emits repr() of floats, which round-trips doubles exactly
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "MetricGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MetricGraphError("BAD_GRAPH_FILE", str(exc)) from exc
        return cls.from_dict(data)


def load_graph(path) -> MetricGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MetricGraphError("IO_ERROR", f"cannot read {path}: {exc.strerror}") from exc
    return MetricGraph.from_json(text)


def save_graph(graph: MetricGraph, path) -> None:
    Path(path).write_text(graph.to_json(), encoding="utf-8")


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    code: str
    message: str
    element: int | None = None


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> set[str]:
        return {i.code for i in self.issues}


def validate(graph: MetricGraph, allow_disconnected: bool = False) -> ValidationReport:
    """Collect every structural problem of ``graph``; never raises."""
    issues: list[Issue] = []
    vertex_ids = [v.id for v in graph.vertices]
    known = set(vertex_ids)
    if len(known) != len(vertex_ids):
        dup = sorted({v for v in vertex_ids if vertex_ids.count(v) > 1})
        for v in dup:
            issues.append(Issue("DUPLICATE_VERTEX_ID", f"vertex id {v} used more than once", v))
    if not graph.arcs:
        issues.append(Issue("EMPTY_GRAPH", "graph has no arcs"))

    seen_ids: set[int] = set()
    for a in graph.arcs:
        if a.id in seen_ids:
            issues.append(Issue("DUPLICATE_ARC_ID", f"arc id {a.id} used more than once", a.id))
        seen_ids.add(a.id)
        if not (a.length > 0) or not np.isfinite(a.length):
            issues.append(Issue("NONPOSITIVE_LENGTH", f"arc {a.id} has length {a.length}", a.id))
        for end in (a.origin, a.terminal):
            if end not in known:
                issues.append(
                    Issue("DANGLING_ENDPOINT", f"arc {a.id} references missing vertex {end}", a.id)
                )

    for v in vertex_ids:
        d = graph.degree(v)
        if d == 2:
            issues.append(Issue("DEGREE_TWO_VERTEX", f"vertex {v} has degree 2", v))
        elif d == 0 and graph.n > 1:
            issues.append(Issue("ISOLATED_VERTEX", f"vertex {v} has no arcs", v))

    if not allow_disconnected:
        comps = graph.components()
        if len(comps) > 1:
            for comp in sorted(comps, key=min)[1:]:
                issues.append(
                    Issue("DISCONNECTED", f"component containing vertex {min(comp)} is detached", min(comp))
                )
    return ValidationReport(tuple(issues))


# -- normalization --------------------------------------------------------------


def merge_degree_two(graph: MetricGraph) -> MetricGraph:
    """Replace every chain through degree-2 vertices by a single arc.

    The merged arc runs from the far end of the first chain arc to the far
    end of the last one and takes the smallest id in the chain.  Surviving
    arcs are renumbered 1..m in the order of those ids, so a graph without
    degree-2 vertices and ids 1..m comes back unchanged.
    """
    arcs = {a.id: a for a in graph.arcs}
    inc: dict[int, list[int]] = defaultdict(list)
    for a in arcs.values():
        inc[a.origin].append(a.id)
        inc[a.terminal].append(a.id)
    vertices = {v.id: v for v in graph.vertices}
    merged = False

    queue = deque(v for v in sorted(vertices) if len(inc[v]) == 2)
    while queue:
        v = queue.popleft()
        ends = inc[v]
        if len(ends) != 2:
            continue
        ia, ib = ends
        if ia == ib:
            raise MetricGraphError(
                "CYCLE_OF_DEGREE_TWO", f"component through vertex {v} is a bare cycle"
            )
        a, b = arcs[ia], arcs[ib]
        far_a = a.origin if a.terminal == v else a.terminal
        far_b = b.terminal if b.origin == v else b.origin
        new = Arc(min(ia, ib), far_a, far_b, a.length + b.length)
        del arcs[ia], arcs[ib]
        arcs[new.id] = new
        for far, old in ((far_a, ia), (far_b, ib)):
            inc[far].remove(old)
            inc[far].append(new.id)
        del inc[v]
        del vertices[v]
        merged = True

    if not merged:
        return graph
    ordered = sorted(arcs.values(), key=lambda a: a.id)
    renumbered = tuple(replace(a, id=i + 1) for i, a in enumerate(ordered))
    return MetricGraph(tuple(vertices.values()), renumbered)


def glue_vertices(graph: MetricGraph, keep: int, drop: int) -> MetricGraph:
    """Identify vertex ``drop`` with vertex ``keep``."""
    if keep == drop:
        return graph
    arcs = tuple(
        replace(
            a,
            origin=keep if a.origin == drop else a.origin,
            terminal=keep if a.terminal == drop else a.terminal,
        )
        for a in graph.arcs
    )
    verts = tuple(v for v in graph.vertices if v.id != drop)
    return MetricGraph(verts, arcs)


def disjoint_union(g1: MetricGraph, g2: MetricGraph) -> tuple[MetricGraph, dict[int, int], dict[int, int]]:
    """Place two graphs side by side.

    Returns the union together with the vertex-id and arc-id maps applied to
    the second graph (the first keeps its ids).
    """
    voff = max(g1.vertex_ids, default=0)
    aoff = max(g1.arc_ids, default=0)
    vmap = {v.id: v.id + voff for v in g2.vertices}
    amap = {a.id: a.id + aoff for a in g2.arcs}
    verts = g1.vertices + tuple(replace(v, id=vmap[v.id]) for v in g2.vertices)
    arcs = g1.arcs + tuple(
        Arc(amap[a.id], vmap[a.origin], vmap[a.terminal], a.length) for a in g2.arcs
    )
    return MetricGraph(verts, arcs), vmap, amap
