"""Secular matrix, resonance scan and null-space eigenvectors.

On arc ``j`` an eigenvector is ``A_j sin kx + B_j cos kx``.  Imposing
continuity and the Kirchhoff flux balance at every vertex gives a square
system ``M(k) X = 0`` with ``X = (A_1, B_1, ..., A_m, B_m)``; resonant
frequencies are the ``k`` where ``M(k)`` is singular.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MetricGraphError
from .graph import MetricGraph

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_TOL = 1e-8
REFINE_WIDTH = 1e-12
SUBCELLS = 16


@dataclass(frozen=True)
class SecularMatrix:
    k: float
    entries: np.ndarray
    # one (vertex id, "continuity" | "kirchhoff") tag per row
    row_map: tuple[tuple[int, str], ...]


@dataclass(frozen=True)
class ModeCoefficients:
    k: float
    amps: np.ndarray  # (A_1, B_1, ..., A_m, B_m)

    @property
    def A(self) -> np.ndarray:
        return self.amps[0::2]

    @property
    def B(self) -> np.ndarray:
        return self.amps[1::2]

    @property
    def m(self) -> int:
        return len(self.amps) // 2

    def scaled(self, factor: float) -> "ModeCoefficients":
        return ModeCoefficients(self.k, self.amps * factor)

    def evaluate(self, arc_pos: int, x) -> np.ndarray:
        """Field on the arc at position ``arc_pos`` at local coordinates ``x``."""
        x = np.asarray(x, dtype=float)
        a, b = self.amps[2 * arc_pos], self.amps[2 * arc_pos + 1]
        if self.k == 0:
            return np.full_like(x, b)
        return a * np.sin(self.k * x) + b * np.cos(self.k * x)


@dataclass
class Eigenpair:
    k: float
    modes: list[ModeCoefficients]
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def multiplicity(self) -> int:
        return len(self.modes)

    def to_dict(self) -> dict:
        return {"k": self.k, "modes": [mode.amps.tolist() for mode in self.modes]}

    @classmethod
    def from_dict(cls, data: dict) -> "Eigenpair":
        k = float(data["k"])
        return cls(k, [ModeCoefficients(k, np.asarray(v, dtype=float)) for v in data["modes"]])


# -- assembly -------------------------------------------------------------------


def _end_rows(k: float, length: float, end: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """Coefficients of (A, B) for the field value and outgoing derivative at an arc end."""
    if end == 0:
        return (0.0, 1.0), (k, 0.0)
    c, s = math.cos(k * length), math.sin(k * length)
    return (s, c), (-k * c, k * s)


def assemble_secular(graph: MetricGraph, k: float) -> SecularMatrix:
    """Assemble ``M(k)``: per vertex, d-1 continuity rows and one Kirchhoff row.

    Continuity rows compare every incident arc end with the reference end,
    the lowest-indexed one (end x=0 before x=l for a loop).
    """
    if not k > 0:
        raise MetricGraphError("INVALID_K", f"k must be positive, got {k}")
    m = graph.m
    M = np.zeros((2 * m, 2 * m))
    row_map = []
    lengths = graph.lengths
    row = 0
    for v in graph.vertex_ids:
        ends = sorted(graph.ends_at(v))
        if not ends:
            continue
        evals = [(pos, *_end_rows(k, lengths[pos], end)) for pos, end in ends]
        ref_pos, ref_val, _ = evals[0]
        for pos, val, _ in evals[1:]:
            M[row, 2 * ref_pos : 2 * ref_pos + 2] += ref_val
            M[row, 2 * pos : 2 * pos + 2] -= val
            row_map.append((v, "continuity"))
            row += 1
        for pos, _, der in evals:
            M[row, 2 * pos : 2 * pos + 2] += der
        row_map.append((v, "kirchhoff"))
        row += 1
    if row != 2 * m:
        raise MetricGraphError("INVALID_GRAPH", f"assembled {row} rows for {m} arcs")
    return SecularMatrix(k, M, tuple(row_map))


def sigma_min(graph: MetricGraph, k: float) -> float:
    """Smallest singular value of ``M(k)`` relative to the largest one."""
    sv = np.linalg.svd(assemble_secular(graph, k).entries, compute_uv=False)
    return float(sv[-1] / sv[0])


# -- inner products --------------------------------------------------------------


def edge_norm_closed_form(A: float, B: float, k: float, l: float) -> float:
    """Squared L2 norm of ``A sin kx + B cos kx`` over ``[0, l]``."""
    if not (k > 0 and l > 0):
        raise MetricGraphError("INVALID_ARGS", f"need k > 0 and l > 0, got k={k}, l={l}")
    return (
        (A * A + B * B) * l / 2.0
        + math.sin(2 * k * l) * (-A * A + B * B) / (4 * k)
        + A * B * (1 - math.cos(2 * k * l)) / (2 * k)
    )


def _int_cos(w, l):
    # int_0^l cos(w x) dx, exact at w = 0
    return l * np.sinc(w * l / np.pi)


def _int_sin(w, l):
    # int_0^l sin(w x) dx = 2 sin^2(wl/2)/w, written to stay finite at w = 0
    return 0.5 * w * l * l * np.sinc(w * l / (2 * np.pi)) ** 2


def arc_products(V: ModeCoefficients, W: ModeCoefficients, lengths: np.ndarray) -> np.ndarray:
    """Per-arc integrals of ``V_j W_j``, exact for any pair of frequencies."""
    a, b = V.k, W.k
    A1, B1, A2, B2 = V.A, V.B, W.A, W.B
    if a == 0:
        A1 = np.zeros_like(A1)
    if b == 0:
        A2 = np.zeros_like(A2)
    cm, cp = _int_cos(a - b, lengths), _int_cos(a + b, lengths)
    sm, sp = _int_sin(a - b, lengths), _int_sin(a + b, lengths)
    ss = 0.5 * (cm - cp)
    cc = 0.5 * (cm + cp)
    sc = 0.5 * (sp + sm)  # sin(ax) cos(bx)
    cs = 0.5 * (sp - sm)  # cos(ax) sin(bx)
    return A1 * A2 * ss + B1 * B2 * cc + A1 * B2 * sc + B1 * A2 * cs


def arc_norms(V: ModeCoefficients, lengths: np.ndarray) -> np.ndarray:
    """Per-arc squared norms ``<V_j, V_j>``."""
    if V.k == 0:
        return V.B**2 * lengths
    k = V.k
    A, B = V.A, V.B
    return (
        (A * A + B * B) * lengths / 2.0
        + np.sin(2 * k * lengths) * (B * B - A * A) / (4 * k)
        + A * B * (1 - np.cos(2 * k * lengths)) / (2 * k)
    )


def inner_product(V: ModeCoefficients, W: ModeCoefficients, graph: MetricGraph) -> float:
    if V.m != graph.m or W.m != graph.m:
        raise MetricGraphError(
            "GRAPH_MISMATCH", f"modes have {V.m} and {W.m} arcs, graph has {graph.m}"
        )
    return float(np.sum(arc_products(V, W, graph.lengths)))


def graph_norm(V: ModeCoefficients, graph: MetricGraph) -> float:
    return math.sqrt(max(float(np.sum(arc_norms(V, graph.lengths))), 0.0))


def normalize(V: ModeCoefficients, graph: MetricGraph) -> ModeCoefficients:
    nrm = graph_norm(V, graph)
    if nrm < 1e-14:
        raise MetricGraphError("ZERO_MODE", "cannot normalize a mode of zero norm")
    return V.scaled(1.0 / nrm)


def orthonormalize(modes: list[ModeCoefficients], graph: MetricGraph) -> list[ModeCoefficients]:
    """Orthonormal basis (graph inner product) of the span of same-``k`` modes."""
    if not modes:
        return []
    gram = np.array([[inner_product(p, q, graph) for q in modes] for p in modes])
    w, U = np.linalg.eigh(gram)
    keep = w > 1e-12 * max(w.max(), 1e-300)
    X = np.array([mode.amps for mode in modes])  # (r, 2m)
    coeffs = U[:, keep] / np.sqrt(w[keep])
    basis = (coeffs.T @ X)[::-1]
    k = modes[0].k
    out = []
    for row in basis:
        # sign convention: largest coefficient positive
        if row[np.argmax(np.abs(row))] < 0:
            row = -row
        out.append(ModeCoefficients(k, row))
    return out


def constant_mode(graph: MetricGraph) -> ModeCoefficients:
    amps = np.zeros(2 * graph.m)
    amps[1::2] = 1.0 / math.sqrt(graph.total_length)
    return ModeCoefficients(0.0, amps)


# -- null space and scan ---------------------------------------------------------


def extract_modes(graph: MetricGraph, k_q: float, tol: float = DEFAULT_TOL) -> Eigenpair:
    """Null space of ``M(k_q)``, orthonormal in the graph inner product.

    Singular values below ``tol`` times the largest one count toward the
    null space.
    """
    k_q = float(k_q)
    if k_q == 0:
        return Eigenpair(0.0, [constant_mode(graph)], 0.0)
    M = assemble_secular(graph, k_q).entries
    _, sv, vt = np.linalg.svd(M)
    rel = sv / sv[0]
    if rel[-1] >= tol:
        raise MetricGraphError(
            "NOT_RESONANT", f"k={k_q!r} is not resonant (sigma_min/sigma_max={rel[-1]:.3e})"
        )
    null = vt[rel < tol]
    modes = orthonormalize([ModeCoefficients(k_q, row) for row in null], graph)
    return Eigenpair(k_q, modes, float(rel[-1]))


def default_grid_step(graph: MetricGraph) -> float:
    return math.pi / (20.0 * graph.total_length)


def _golden_min(f, a: float, b: float, width: float) -> tuple[float, float]:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _sub_brackets(f, a: float, b: float, cells: int = SUBCELLS) -> list[tuple[float, float]]:
    """Local minima of ``f`` on a finer grid over ``[a, b]``.

    Two roots closer than the coarse step share one coarse bracket; the
    finer pass separates them.
    """
    x = np.linspace(a, b, cells + 1)
    y = np.array([f(v) for v in x])
    out = [
        (x[i - 1], x[i + 1])
        for i in range(1, cells)
        if y[i] <= y[i - 1] and y[i] <= y[i + 1]
    ]
    if y[0] < y[1]:
        out.append((x[0], x[1]))
    if y[-1] < y[-2]:
        out.append((x[-2], x[-1]))
    return out or [(a, b)]


def scan_spectrum(
    graph: MetricGraph,
    k_min: float,
    k_max: float,
    grid_step: float | None = None,
    tol: float = DEFAULT_TOL,
) -> list[Eigenpair]:
    """Resonant frequencies in ``[k_min, k_max]`` and their eigenvectors.

    ``sigma_min(M(k))`` is sampled on a uniform grid; every local minimum,
    including one in an end cell, is refined by golden-section search and
    accepted when the refined relative singular value drops below ``tol``.
    When ``k_min`` is 0 the constant mode is prepended.  An empty list
    means no eigenvalue was found in the range.
    """
    if not (0 <= k_min < k_max):
        raise MetricGraphError("INVALID_ARGS", f"need 0 <= k_min < k_max, got {k_min}, {k_max}")
    step = grid_step or default_grid_step(graph)
    if step <= 0:
        raise MetricGraphError("INVALID_ARGS", f"grid_step must be positive, got {step}")

    n = max(int(math.ceil((k_max - k_min) / step)), 2)
    grid = np.linspace(k_min, k_max, n + 1)
    if grid[0] == 0:
        grid[0] = min(1e-3 * step, 1e-6)
    f = lambda k: sigma_min(graph, k)  # noqa: E731
    vals = np.array([f(k) for k in grid])

    brackets = [
        (grid[i - 1], grid[i + 1])
        for i in range(1, len(grid) - 1)
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]
    ]
    # a minimum in the first or last cell shows up as a monotone end; the
    # first cell is skipped at k = 0, where sigma_min tends to zero anyway
    if k_min > 0 and vals[0] < vals[1]:
        brackets.append((grid[0], grid[1]))
    if vals[-1] < vals[-2]:
        brackets.append((grid[-2], grid[-1]))
    roots: list[tuple[float, float]] = []
    for a, b in brackets:
        for lo, hi in _sub_brackets(f, a, b):
            k, s = _golden_min(f, lo, hi, REFINE_WIDTH)
            if s < tol:
                roots.append((k, s))
    roots.sort()
    dedup: list[tuple[float, float]] = []
    for k, s in roots:
        if dedup and k - dedup[-1][0] < 10 * REFINE_WIDTH:
            if s < dedup[-1][1]:
                dedup[-1] = (k, s)
            continue
        dedup.append((k, s))

    pairs = []
    if k_min == 0:
        pairs.append(Eigenpair(0.0, [constant_mode(graph)], 0.0))
    for k, s in dedup:
        pair = extract_modes(graph, k, tol)
        pairs.append(pair)
    if not pairs:
        log.info("NO_EIGENVALUES in [%g, %g]", k_min, k_max)
    return pairs


def mode_residual(graph: MetricGraph, mode: ModeCoefficients) -> float:
    """``||M(k) X|| / ||X||`` for a single mode."""
    M = assemble_secular(graph, mode.k).entries
    return float(np.linalg.norm(M @ mode.amps) / np.linalg.norm(mode.amps))
