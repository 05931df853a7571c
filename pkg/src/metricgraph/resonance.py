"""Exactly localized eigenvectors: existence, construction and tuning.

A mode that vanishes at every vertex and balances fluxes on a small set of
arcs extends by zero to the whole graph.  Three shapes admit such modes:

* cycles (polygons) with ``l_j = n_j pi / k`` and ``sum n_j`` even,
* pumpkins (parallel arcs between two vertices) with all ``n_j`` of one parity,
* clusters of leaves on a common vertex with ``l_j = o_j pi / (2k)``, ``o_j`` odd.

A single arc, a single leaf, two arcs meeting at one vertex and a
three-arc star never carry one; :func:`certify_nonexistence` checks this by
the rank of the localization constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MetricGraphError
from .graph import MetricGraph, glue_vertices
from .spectral import Eigenpair, ModeCoefficients, mode_residual, normalize

KINDS = ("cycle", "pumpkin", "leaves")
N_MAX = 64
REL_TOL = 1e-9
RESIDUAL_TOL = 1e-10

CITATIONS = {
    "cycle": "polygon resonance: l_j/n_j equal, sum of n_j even",
    "pumpkin": "pumpkin resonance: l_j/n_j equal, n_j of one parity",
    "leaves": "connected-leaves resonance: l_j/o_j equal, o_j odd",
}


@dataclass(frozen=True)
class ResonanceSpec:
    kind: str
    arc_ids: tuple[int, ...]
    integers: tuple[int, ...]
    k: float
    multiplicity: int = 1

    def to_dict(self) -> dict:
        return {"kind": self.kind, "arcs": list(self.arc_ids), "n": list(self.integers), "k": self.k}

    @classmethod
    def from_dict(cls, data: dict) -> "ResonanceSpec":
        kind = data["kind"]
        n = tuple(int(v) for v in data["n"])
        mult = 1 if kind == "cycle" else len(n) - 1
        return cls(kind, tuple(int(a) for a in data["arcs"]), n, float(data["k"]), mult)

    def with_arcs(self, arc_ids) -> "ResonanceSpec":
        return ResonanceSpec(self.kind, tuple(arc_ids), self.integers, self.k, self.multiplicity)


# -- integer searches --------------------------------------------------------------


def _search(lengths, n_max, rel_tol, step, accept):
    """First ``n_1 = 1, 1+step, ...`` whose commensurate tuple passes ``accept``."""
    lengths = [float(l) for l in lengths]
    if any(not l > 0 for l in lengths):
        raise MetricGraphError("INVALID_ARGS", "lengths must be positive")
    l1 = lengths[0]
    for n1 in range(1, n_max + 1, step):
        unit = l1 / n1
        ns = [n1]
        for l in lengths[1:]:
            nj = int(round(l / unit))
            if nj < 1 or nj > n_max or abs(l / nj - unit) > rel_tol * unit:
                break
            ns.append(nj)
        else:
            if accept(ns):
                return tuple(ns)
    return None


def check_cycle(lengths, n_max: int = N_MAX, rel_tol: float = REL_TOL, arc_ids=None):
    """Resonance of a polygon, or ``None``.

    Tuples are enumerated by increasing ``n_1``, so when the primitive tuple
    has an odd sum its double is the one returned.  Two lengths describe a
    2-cycle, which is a pumpkin.
    """
    if len(lengths) == 2:
        return check_pumpkin(lengths, n_max, rel_tol, arc_ids)
    if len(lengths) < 3:
        raise MetricGraphError("INVALID_ARGS", "a polygon needs at least 3 arcs")
    ns = _search(lengths, n_max, rel_tol, 1, lambda ns: sum(ns) % 2 == 0)
    if ns is None:
        return None
    ids = tuple(arc_ids) if arc_ids is not None else tuple(range(1, len(lengths) + 1))
    return ResonanceSpec("cycle", ids, ns, ns[0] * math.pi / float(lengths[0]), 1)


def check_pumpkin(lengths, n_max: int = N_MAX, rel_tol: float = REL_TOL, arc_ids=None):
    """Resonance of parallel arcs, or ``None``; the eigenspace has dimension p-1."""
    if len(lengths) < 2:
        raise MetricGraphError("INVALID_ARGS", "a pumpkin needs at least 2 arcs")
    ns = _search(lengths, n_max, rel_tol, 1, lambda ns: len({n % 2 for n in ns}) == 1)
    if ns is None:
        return None
    ids = tuple(arc_ids) if arc_ids is not None else tuple(range(1, len(lengths) + 1))
    return ResonanceSpec("pumpkin", ids, ns, ns[0] * math.pi / float(lengths[0]), len(ns) - 1)


def check_leaves(lengths, n_max: int = N_MAX, rel_tol: float = REL_TOL, arc_ids=None):
    """Resonance of leaves hanging from one vertex, or ``None``.

    The integers are the odd multipliers ``o_j`` with ``k l_j = o_j pi / 2``.
    """
    if len(lengths) < 2:
        raise MetricGraphError("INVALID_ARGS", "need at least 2 leaves")
    ns = _search(lengths, n_max, rel_tol, 2, lambda ns: all(n % 2 == 1 for n in ns))
    if ns is None:
        return None
    ids = tuple(arc_ids) if arc_ids is not None else tuple(range(1, len(lengths) + 1))
    return ResonanceSpec("leaves", ids, ns, ns[0] * math.pi / (2 * float(lengths[0])), len(ns) - 1)


CHECKS = {"cycle": check_cycle, "pumpkin": check_pumpkin, "leaves": check_leaves}


def check_shape(graph: MetricGraph, arc_ids, kind: str, n_max: int = N_MAX, rel_tol: float = REL_TOL):
    """Verify the arcs form ``kind`` in ``graph`` and run the matching check.

    Cycle arcs may be listed in any order; the returned spec lists them in
    traversal order starting from the first one given.
    """
    kind = _shape_kind(kind, arc_ids)
    if kind == "cycle":
        arc_ids = order_cycle(graph, arc_ids)
    shape_orientation(graph, arc_ids, kind)
    lengths = [graph.arc(a).length for a in arc_ids]
    return CHECKS[kind](lengths, n_max, rel_tol, arc_ids)


# -- shapes ------------------------------------------------------------------------


def _shape_kind(kind: str, arc_ids) -> str:
    if kind not in KINDS:
        raise MetricGraphError("INVALID_ARGS", f"unknown shape {kind!r}")
    if kind == "cycle" and len(arc_ids) == 2:
        return "pumpkin"
    return kind


def order_cycle(graph: MetricGraph, arc_ids) -> tuple[int, ...]:
    """Reorder the arcs of a polygon into a closed walk starting at ``arc_ids[0]``."""
    ids = list(arc_ids)
    if len(set(ids)) != len(ids) or len(ids) < 3:
        raise MetricGraphError("SHAPE_MISMATCH", "a polygon needs at least 3 distinct arcs")
    try:
        arcs = {a: graph.arc(a) for a in ids}
    except KeyError as exc:
        raise MetricGraphError("SHAPE_MISMATCH", str(exc)) from exc
    first = arcs[ids[0]]
    order, cur = [ids[0]], first.terminal
    rest = ids[1:]
    while rest:
        nxt = [a for a in rest if cur in (arcs[a].origin, arcs[a].terminal)]
        if not nxt:
            raise MetricGraphError("SHAPE_MISMATCH", f"arcs {ids} do not form a cycle")
        a = nxt[0]
        order.append(a)
        rest.remove(a)
        cur = arcs[a].terminal if arcs[a].origin == cur else arcs[a].origin
    return tuple(order)


def shape_orientation(graph: MetricGraph, arc_ids, kind: str) -> list[bool]:
    """Traversal direction of each arc (True = along its orientation).

    Cycles are walked in the listed order; pumpkin arcs run from the common
    origin of the first arc; leaves run away from the shared vertex.
    Raises ``SHAPE_MISMATCH`` when the arcs do not form the shape.
    """
    ids = list(arc_ids)
    if len(set(ids)) != len(ids):
        raise MetricGraphError("SHAPE_MISMATCH", "repeated arc ids")
    try:
        arcs = [graph.arc(a) for a in ids]
    except KeyError as exc:
        raise MetricGraphError("SHAPE_MISMATCH", str(exc)) from exc
    if any(a.origin == a.terminal for a in arcs):
        raise MetricGraphError("SHAPE_MISMATCH", "loops are not supported in shapes")

    if kind == "cycle":
        first, second = arcs[0], arcs[1]
        shared = {first.origin, first.terminal} & {second.origin, second.terminal}
        if len(shared) != 1:
            raise MetricGraphError("SHAPE_MISMATCH", f"arcs {ids[0]} and {ids[1]} are not consecutive")
        (join,) = shared
        start = first.origin if first.terminal == join else first.terminal
        cur, dirs, visited = start, [], {start}
        for a in arcs:
            if a.origin == cur:
                dirs.append(True)
                cur = a.terminal
            elif a.terminal == cur:
                dirs.append(False)
                cur = a.origin
            else:
                raise MetricGraphError("SHAPE_MISMATCH", f"arc {a.id} does not continue the cycle")
            if cur in visited and cur != start:
                raise MetricGraphError("SHAPE_MISMATCH", "cycle revisits a vertex")
            visited.add(cur)
        if cur != start:
            raise MetricGraphError("SHAPE_MISMATCH", "arcs do not close into a cycle")
        return dirs

    if kind == "pumpkin":
        u, w = arcs[0].origin, arcs[0].terminal
        dirs = []
        for a in arcs:
            if (a.origin, a.terminal) == (u, w):
                dirs.append(True)
            elif (a.origin, a.terminal) == (w, u):
                dirs.append(False)
            else:
                raise MetricGraphError("SHAPE_MISMATCH", f"arc {a.id} is not parallel to arc {ids[0]}")
        return dirs

    common = {arcs[0].origin, arcs[0].terminal}
    for a in arcs[1:]:
        common &= {a.origin, a.terminal}
    if len(common) != 1:
        raise MetricGraphError("SHAPE_MISMATCH", "leaves do not share exactly one vertex")
    (hub,) = common
    dirs = []
    for a in arcs:
        tip = a.terminal if a.origin == hub else a.origin
        if graph.degree(tip) != 1:
            raise MetricGraphError("SHAPE_MISMATCH", f"arc {a.id} is not a leaf")
        dirs.append(a.origin == hub)
    return dirs


# -- construction -------------------------------------------------------------------


def _arc_coeffs(kind: str, n: int, forward: bool, a: float) -> tuple[float, float]:
    """(A, B) in arc coordinates for amplitude ``a`` of ``sin(ky)`` in traversal coordinates."""
    if forward:
        return a, 0.0
    if kind == "leaves":
        # sin(k(l - x)) = sin(kl) cos(kx) with kl = n pi / 2
        return 0.0, a * (-1.0) ** ((n - 1) // 2)
    # sin(k(l - x)) = -cos(kl) sin(kx) with kl = n pi
    return -a * (-1.0) ** n, 0.0


def _assemble(graph: MetricGraph, spec: ResonanceSpec, dirs, amps) -> ModeCoefficients:
    X = np.zeros(2 * graph.m)
    for arc_id, n, fwd, a in zip(spec.arc_ids, spec.integers, dirs, amps):
        pos = graph.arc_position(arc_id)
        X[2 * pos], X[2 * pos + 1] = _arc_coeffs(spec.kind, n, fwd, a)
    return ModeCoefficients(spec.k, X)


def _verified(graph: MetricGraph, k: float, modes, meta) -> Eigenpair:
    worst = max(mode_residual(graph, mode) for mode in modes)
    if not worst < RESIDUAL_TOL:
        raise MetricGraphError(
            "NOT_RESONANT", f"constructed mode has residual {worst:.3e} at k={k!r}"
        )
    return Eigenpair(k, modes, worst, meta)


def construct_mode(graph: MetricGraph, spec: ResonanceSpec) -> Eigenpair:
    """Exact localized eigenvector(s) for ``spec`` embedded in ``graph``.

    Cycles get one mode with amplitudes propagated as
    ``a_{j+1} = a_j (-1)^{n_j}`` along the traversal.  Pumpkins and leaf
    clusters get the p-1 modes ``e_1 - e_j`` of the zero-sum hyperplane,
    each with equal amplitude on two arcs (not mutually orthogonal).
    """
    kind = _shape_kind(spec.kind, spec.arc_ids)
    if kind == "cycle":
        order = order_cycle(graph, spec.arc_ids)
        lookup = dict(zip(spec.arc_ids, spec.integers))
        spec = ResonanceSpec(kind, order, tuple(lookup[a] for a in order), spec.k, 1)
    else:
        spec = ResonanceSpec(kind, spec.arc_ids, spec.integers, spec.k, spec.multiplicity)
    dirs = shape_orientation(graph, spec.arc_ids, kind)
    p = len(spec.arc_ids)
    meta = {"kind": kind, "arcs": list(spec.arc_ids)}
    if kind == "cycle":
        amps = [1.0]
        for n in spec.integers[:-1]:
            amps.append(amps[-1] * (-1.0) ** n)
        if amps[-1] * (-1.0) ** spec.integers[-1] != amps[0]:
            raise MetricGraphError("NOT_RESONANT", "cycle integers have an odd sum")
        modes = [normalize(_assemble(graph, spec, dirs, amps), graph)]
    else:
        modes = []
        for j in range(1, p):
            amps = np.zeros(p)
            amps[0], amps[j] = 1.0, -1.0
            modes.append(normalize(_assemble(graph, spec, dirs, amps), graph))
    return _verified(graph, spec.k, modes, meta)


# -- tuning ------------------------------------------------------------------------


def _nearest_with_parity(x: float, parity: int) -> int:
    n = int(math.floor(x))
    cands = [c for c in (n - 1, n, n + 1, n + 2) if c >= 1 and c % 2 == parity]
    return min(cands, key=lambda c: (abs(c - x), c))


def _tuned_integers(kind: str, phases: np.ndarray) -> tuple[int, ...]:
    """Integers nearest to ``phases`` (lengths in units of pi/k) meeting the parity rule."""
    if kind == "leaves":
        return tuple(_nearest_with_parity(2 * x, 1) for x in phases)
    if kind == "pumpkin":
        best = None
        for parity in (1, 0):
            ns = [_nearest_with_parity(x, parity) for x in phases]
            cost = sum(abs(n - x) for n, x in zip(ns, phases))
            if best is None or cost < best[0] - 1e-12:
                best = (cost, ns)
        return tuple(best[1])
    ns = [max(1, int(round(x))) for x in phases]
    if sum(ns) % 2:
        # cheapest single +-1 move in absolute length
        moves = []
        for j, x in enumerate(phases):
            for step in (1, -1):
                if ns[j] + step >= 1:
                    moves.append((abs(ns[j] + step - x) - abs(ns[j] - x), j, step))
        _, j, step = min(moves)
        ns[j] += step
    return tuple(ns)


def tune_lengths(graph: MetricGraph, arc_ids, shape: str, k_target: float):
    """Retune the listed arcs so ``shape`` resonates at ``k_target``.

    Each arc becomes ``n_j pi / k_target`` (``o_j pi / (2 k_target)`` for
    leaves) with integers nearest to the current lengths subject to the
    shape's parity rule.  Returns ``(tuned_graph, spec)``.
    """
    if not k_target > 0:
        raise MetricGraphError("INVALID_ARGS", "k_target must be positive")
    kind = _shape_kind(shape, arc_ids)
    if kind == "cycle":
        arc_ids = order_cycle(graph, arc_ids)
    shape_orientation(graph, arc_ids, kind)
    lengths = np.array([graph.arc(a).length for a in arc_ids])
    phases = k_target * lengths / math.pi
    ns = _tuned_integers(kind, phases)
    unit = math.pi / k_target / (2.0 if kind == "leaves" else 1.0)
    new = {}
    for arc_id, n, old in zip(arc_ids, ns, lengths):
        target = n * unit
        if abs(target - old) > 1e-12 * old:
            new[arc_id] = target
    tuned = graph.with_lengths(new) if new else graph
    mult = 1 if kind == "cycle" else len(ns) - 1
    return tuned, ResonanceSpec(kind, tuple(arc_ids), ns, float(k_target), mult)


# -- composites ----------------------------------------------------------------------


def _flux_imbalance(graph: MetricGraph, mode: ModeCoefficients) -> dict[int, float]:
    """Net outgoing derivative and worst vertex value per vertex."""
    k, L = mode.k, graph.lengths
    out = {}
    for v in graph.vertex_ids:
        flux, val = 0.0, 0.0
        for pos, end in graph.ends_at(v):
            A, B = mode.amps[2 * pos], mode.amps[2 * pos + 1]
            if end == 0:
                flux += k * A
                val = max(val, abs(B))
            else:
                c, s = math.cos(k * L[pos]), math.sin(k * L[pos])
                flux += -k * (A * c - B * s)
                val = max(val, abs(A * s + B * c))
        out[v] = max(abs(flux), val)
    return out


def join_composite(
    spec_a: ResonanceSpec, spec_b: ResonanceSpec, graph: MetricGraph, glue: tuple[int, int]
) -> tuple[MetricGraph, Eigenpair]:
    """Glue two localized structures at one vertex each.

    ``graph`` holds both structures (possibly as separate components);
    ``glue = (vertex_a, vertex_b)`` are identified, keeping ``vertex_a``.
    The union of the two modes, scaled to equal peak amplitude, is checked
    vertex by vertex and against ``M(k)``.  Returns the glued graph and the
    composite eigenpair.
    """
    if abs(spec_a.k - spec_b.k) > 1e-12 * max(1.0, abs(spec_a.k)):
        raise MetricGraphError("K_MISMATCH", f"k differs: {spec_a.k!r} vs {spec_b.k!r}")
    if set(spec_a.arc_ids) & set(spec_b.arc_ids):
        raise MetricGraphError("SHAPE_MISMATCH", "components share arcs")
    va, vb = glue
    for spec, v in ((spec_a, va), (spec_b, vb)):
        ends = {e for a in spec.arc_ids for e in (graph.arc(a).origin, graph.arc(a).terminal)}
        if v not in ends:
            raise MetricGraphError("SHAPE_MISMATCH", f"vertex {v} is not on arcs {list(spec.arc_ids)}")

    # build each component mode on the unglued graph so orientations are intact
    parts = [construct_mode(graph, spec_a).modes[0], construct_mode(graph, spec_b).modes[0]]
    parts = [mode.scaled(1.0 / np.max(np.abs(mode.amps))) for mode in parts]
    joined = glue_vertices(graph, va, vb)
    union = ModeCoefficients(spec_a.k, parts[0].amps + parts[1].amps)

    members = set(spec_a.arc_ids) | set(spec_b.arc_ids)
    imbalance = _flux_imbalance(joined, union)
    scale = union.k * np.max(np.abs(union.amps))
    for v, bad in imbalance.items():
        if bad > RESIDUAL_TOL * scale:
            external = [
                joined.arcs[pos].id for pos, _ in joined.ends_at(v) if joined.arcs[pos].id not in members
            ]
            code = "EXTERNAL_EDGE" if external else "NOT_RESONANT"
            raise MetricGraphError(code, f"vertex {v} is unbalanced (external arcs {external})")

    mode = normalize(union, joined)
    meta = {"kind": "composite", "arcs": sorted(members), "parts": [spec_a.to_dict(), spec_b.to_dict()]}
    return joined, _verified(joined, spec_a.k, [mode], meta)


# -- non-existence -----------------------------------------------------------------

CONFIGS = {"single_arc": 1, "leaf": 1, "two_connected_arcs": 2, "degree3_star": 3}


@dataclass(frozen=True)
class Certificate:
    config: str
    lengths: tuple[float, ...]
    k: float
    rank: int
    unknowns: int
    singular_values: tuple[float, ...] = field(repr=False)

    @property
    def full_rank(self) -> bool:
        return self.rank == self.unknowns

    def text(self) -> str:
        verdict = "no localized eigenvector" if self.full_rank else "nontrivial solutions exist"
        return f"rank {self.rank}/{self.unknowns}: {verdict}"


def localization_constraints(config: str, lengths, k: float) -> np.ndarray:
    """Constraint matrix acting on ``(A_1, B_1, ...)`` for a candidate localized mode.

    Derivative rows are divided by ``k``.  single_arc: value and slope vanish
    at both ends.  leaf: value and slope vanish at the attached end, slope
    vanishes at the free end.  two_connected_arcs: values vanish at the
    shared vertex and fluxes balance there; each far end is met by that arc
    alone, so value and slope vanish.  degree3_star: Kirchhoff at the hub,
    value and slope zero at every far end.
    """
    if config not in CONFIGS:
        raise MetricGraphError("INVALID_ARGS", f"unknown configuration {config!r}")
    lengths = [float(l) for l in lengths]
    if len(lengths) != CONFIGS[config]:
        raise MetricGraphError("INVALID_ARGS", f"{config} takes {CONFIGS[config]} length(s)")
    if not k > 0 or any(not l > 0 for l in lengths):
        raise MetricGraphError("INVALID_ARGS", "k and lengths must be positive")
    p = len(lengths)
    cs = [(math.cos(k * l), math.sin(k * l)) for l in lengths]

    def row(j, a, b):
        r = np.zeros(2 * p)
        r[2 * j], r[2 * j + 1] = a, b
        return r

    rows = []
    if config in ("single_arc", "leaf"):
        c, s = cs[0]
        rows.append(row(0, 0.0, 1.0))  # V(0)
        rows.append(row(0, 1.0, 0.0))  # V_x(0)
        if config == "single_arc":
            rows.append(row(0, s, c))  # V(l)
        rows.append(row(0, c, -s))  # V_x(l)
    elif config == "two_connected_arcs":
        rows += [row(0, 0.0, 1.0), row(1, 0.0, 1.0)]
        rows.append(row(0, 1.0, 0.0) + row(1, 1.0, 0.0))
        for j, (c, s) in enumerate(cs):
            rows += [row(j, s, c), row(j, c, -s)]
    else:
        rows.append(sum(row(j, 1.0, 0.0) for j in range(p)))
        for j, (c, s) in enumerate(cs):
            rows += [row(j, c, -s), row(j, s, c)]
    return np.array(rows)


def certify_nonexistence(config: str, lengths, k: float, rtol: float = 1e-10) -> Certificate:
    """Numerical rank of the localization constraints; full rank rules the mode out."""
    C = localization_constraints(config, lengths, k)
    sv = np.linalg.svd(C, compute_uv=False)
    rank = int(np.sum(sv > rtol * sv[0]))
    return Certificate(config, tuple(float(l) for l in lengths), float(k), rank, C.shape[1], tuple(sv))
