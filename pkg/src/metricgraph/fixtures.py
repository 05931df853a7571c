"""Fixture graphs and the random needle generator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MetricGraphError
from .graph import Arc, MetricGraph, Vertex, merge_degree_two

G14_LENGTHS = (
    11.91371443,
    7.08276253,
    6.0,
    2.236067977,
    4.123105626,
    1.414213562,
    2.0,
    1.0,
    4.7169892,
    4.472135955,
    2.0,
    2.0,
    1.414213562,
    4.472135955,
)

# IEEE 14-bus branch list with the degree-2 buses 1, 3, 10, 11, 12, 14
# merged away.  Surviving buses 2, 4, 5, 6, 7, 8, 9, 13 are renumbered
# 1..8, so the only leaf (bus 8) becomes vertex 6.  Arc labels were fixed by
# matching the published resonant frequencies of this graph.
G14_INCIDENCE = (
    (1, 3),  # 1: bus 2-1-5
    (1, 2),  # 2: bus 2-3-4
    (1, 2),  # 3: bus 2-4
    (1, 3),  # 4: bus 2-5
    (2, 3),  # 5: bus 4-5
    (2, 5),  # 6: bus 4-7
    (2, 7),  # 7: bus 4-9
    (3, 4),  # 8: bus 5-6
    (4, 7),  # 9: bus 6-11-10-9
    (4, 8),  # 10: bus 6-12-13
    (4, 8),  # 11: bus 6-13
    (5, 6),  # 12: bus 7-8
    (5, 7),  # 13: bus 7-9
    (7, 8),  # 14: bus 9-14-13
)

PUMPKIN_DEMO_LENGTHS = (
    2.236067977,
    1.414213562,
    1.732050807,
    math.pi,
    11 * math.pi,
    5.167771571,
    9.424777960,
    3.605551275,
    5.693156148,
)

# Only the lengths of this graph are published; the incidence below is our
# own, with arcs 4 and 7 running in parallel between vertices 2 and 3.
PUMPKIN_DEMO_INCIDENCE = (
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (4, 5),
    (2, 6),
    (2, 3),
    (3, 6),
    (4, 6),
)


def load_g14() -> MetricGraph:
    return MetricGraph.from_edges(
        (a, b, l) for (a, b), l in zip(G14_INCIDENCE, G14_LENGTHS)
    )


def load_pumpkin_demo() -> MetricGraph:
    return MetricGraph.from_edges(
        (a, b, l) for (a, b), l in zip(PUMPKIN_DEMO_INCIDENCE, PUMPKIN_DEMO_LENGTHS)
    )


# -- Buffon needles ----------------------------------------------------------------


@dataclass(frozen=True)
class LengthLaw:
    """Needle length distribution: ``fixed`` (value), ``uniform`` (low, high) or ``exponential`` (mean)."""

    kind: str = "fixed"
    a: float = 1.0
    b: float = 1.0

    @classmethod
    def parse(cls, spec) -> "LengthLaw":
        if isinstance(spec, LengthLaw):
            return spec
        if isinstance(spec, (int, float)):
            return cls("fixed", float(spec))
        if isinstance(spec, dict):
            kind = spec.get("kind", "fixed")
            if kind == "fixed":
                return cls("fixed", float(spec.get("length", 1.0)))
            if kind == "uniform":
                return cls("uniform", float(spec["low"]), float(spec["high"]))
            if kind == "exponential":
                return cls("exponential", float(spec["mean"]))
        raise MetricGraphError("INVALID_ARGS", f"unknown length law {spec!r}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(size, self.a)
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size)
        return rng.exponential(self.a, size)


def _needle_crossings(p: np.ndarray, q: np.ndarray, tol: float = 1e-12):
    """Pairwise proper crossings of segments ``p[i] -> q[i]``.

    Yields ``(i, j, t_i, t_j)`` with both segment parameters strictly inside
    ``(tol, 1 - tol)``; parallel pairs never cross.
    """
    d = q - p
    n = len(p)
    i, j = np.triu_indices(n, 1)
    di, dj = d[i], d[j]
    denom = di[:, 0] * dj[:, 1] - di[:, 1] * dj[:, 0]
    r = p[j] - p[i]
    with np.errstate(divide="ignore", invalid="ignore"):
        ti = (r[:, 0] * dj[:, 1] - r[:, 1] * dj[:, 0]) / denom
        tj = (r[:, 0] * di[:, 1] - r[:, 1] * di[:, 0]) / denom
    hit = (
        (np.abs(denom) > 1e-300)
        & (ti > tol) & (ti < 1 - tol)
        & (tj > tol) & (tj < 1 - tol)
    )
    return i[hit], j[hit], ti[hit], tj[hit]


def _trim_short_leaves(graph: MetricGraph, eps: float) -> MetricGraph:
    while True:
        short = [
            a for a in graph.arcs
            if a.length < eps and (graph.degree(a.origin) == 1 or graph.degree(a.terminal) == 1)
            and a.origin != a.terminal
        ]
        if not short or len(short) == graph.m:
            return graph
        drop = {a.id for a in short}
        arcs = tuple(a for a in graph.arcs if a.id not in drop)
        used = {a.origin for a in arcs} | {a.terminal for a in arcs}
        verts = tuple(v for v in graph.vertices if v.id in used)
        graph = merge_degree_two(MetricGraph(verts, arcs))


def generate_buffon(
    needle_count: int,
    box_side: float,
    length_law=1.0,
    seed: int = 0,
    trim_epsilon: float = 0.0,
) -> MetricGraph:
    """Random needle graph.

    Needles with uniform centers in ``[0, box_side]^2`` and uniform angles
    are cut at their mutual crossings.  The largest connected piece is kept,
    degree-2 chains are merged and leaves shorter than ``trim_epsilon`` are
    pruned.  Vertices carry the crossing/endpoint coordinates.
    """
    if needle_count < 2:
        raise MetricGraphError("INVALID_ARGS", "need at least two needles")
    if not box_side > 0:
        raise MetricGraphError("INVALID_ARGS", "box_side must be positive")
    law = LengthLaw.parse(length_law)
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, box_side, size=(needle_count, 2))
    theta = rng.uniform(0.0, math.pi, size=needle_count)
    lengths = law.sample(rng, needle_count)
    half = 0.5 * lengths[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    p, q = centers - half, centers + half

    ii, jj, ti, tj = _needle_crossings(p, q)
    if len(ii) == 0:
        raise MetricGraphError("EMPTY_GRAPH", "no two needles intersect")

    coords: dict[int, tuple[float, float]] = {}
    stops: list[list[tuple[float, int]]] = [[] for _ in range(needle_count)]
    for c, (a, b, sa, sb) in enumerate(zip(ii, jj, ti, tj)):
        vid = c + 1
        xy = p[a] + sa * (q[a] - p[a])
        coords[vid] = (float(xy[0]), float(xy[1]))
        stops[a].append((float(sa), vid))
        stops[b].append((float(sb), vid))

    next_id = len(ii) + 1
    edges = []
    for nd in range(needle_count):
        if not stops[nd]:
            continue
        pts = [(0.0, next_id)]
        coords[next_id] = (float(p[nd, 0]), float(p[nd, 1]))
        next_id += 1
        pts += sorted(stops[nd])
        pts.append((1.0, next_id))
        coords[next_id] = (float(q[nd, 0]), float(q[nd, 1]))
        next_id += 1
        for (s0, v0), (s1, v1) in zip(pts, pts[1:]):
            edges.append((v0, v1, (s1 - s0) * float(lengths[nd])))

    raw = MetricGraph(
        tuple(Vertex(v, *coords[v]) for v in sorted(coords)),
        tuple(Arc(i + 1, a, b, l) for i, (a, b, l) in enumerate(edges)),
    )
    keep = max(raw.components(), key=lambda c: (len(c), -min(c)))
    arcs = tuple(a for a in raw.arcs if a.origin in keep)
    verts = tuple(v for v in raw.vertices if v.id in keep)
    arcs = tuple(Arc(i + 1, a.origin, a.terminal, a.length) for i, a in enumerate(arcs))
    graph = merge_degree_two(MetricGraph(verts, arcs))
    if trim_epsilon > 0:
        graph = _trim_short_leaves(graph, trim_epsilon)
    return graph
