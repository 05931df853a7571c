"""How concentrated an eigenvector is on the arcs of the graph."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MetricGraphError
from .graph import MetricGraph
from .spectral import ModeCoefficients, arc_norms

ZERO_NORM = 1e-14
BAND_EDGES = (0.06, 0.12, 0.2)
BAND_NAMES = ("band0", "band1", "band2", "band3")


def _checked_norms(mode: ModeCoefficients, graph: MetricGraph) -> np.ndarray:
    if mode.m != graph.m:
        raise MetricGraphError("GRAPH_MISMATCH", f"mode has {mode.m} arcs, graph has {graph.m}")
    norms = np.maximum(arc_norms(mode, graph.lengths), 0.0)
    if math.sqrt(norms.sum()) < ZERO_NORM:
        raise MetricGraphError("ZERO_MODE", "mode has zero graph norm")
    return norms


def edge_energy_ratio(mode: ModeCoefficients, graph: MetricGraph) -> np.ndarray:
    """Share ``e(j)`` of the mode's squared L2 norm carried by each arc."""
    norms = _checked_norms(mode, graph)
    return norms / norms.sum()


def localization_criterion(mode: ModeCoefficients, graph: MetricGraph) -> tuple[float, np.ndarray]:
    """Length-normalized energy densities and their maximum.

    Returns ``(criterion, densities)``.  For a mode with equal amplitude on
    ``p`` arcs, every active density is ``1/p``.
    """
    dens = _checked_norms(mode, graph) / graph.lengths
    dens = dens / dens.sum()
    return float(dens.max()), dens


def _int_sin4(k: float, phase: np.ndarray, l: np.ndarray) -> np.ndarray:
    # int_0^l sin^4(kx + phase) dx, from sin^4 = 3/8 - cos(2u)/2 + cos(4u)/8
    end = k * l + phase
    return (
        3.0 * l / 8.0
        - (np.sin(2 * end) - np.sin(2 * phase)) / (4 * k)
        + (np.sin(4 * end) - np.sin(4 * phase)) / (32 * k)
    )


def arc_quartics(mode: ModeCoefficients, lengths: np.ndarray) -> np.ndarray:
    """Per-arc ``int V_j^4 dx``."""
    A, B = mode.A, mode.B
    if mode.k == 0:
        return B**4 * lengths
    # A sin + B cos = R sin(kx + phi)
    R2 = A * A + B * B
    phi = np.arctan2(B, A)
    return R2 * R2 * _int_sin4(mode.k, phi, lengths)


def ipr(mode: ModeCoefficients, graph: MetricGraph) -> float:
    """Inverse participation ratio ``sum int V^4 / (sum int V^2)^2``."""
    norms = _checked_norms(mode, graph)
    return float(arc_quartics(mode, graph.lengths).sum() / norms.sum() ** 2)


def band_of(e: float) -> str:
    for edge, name in zip(BAND_EDGES, BAND_NAMES):
        if e < edge:
            return name
    return BAND_NAMES[-1]


@dataclass(frozen=True)
class LocalizationReport:
    q: int
    k: float
    e: np.ndarray
    E: np.ndarray
    criterion: float
    ipr: float
    arc_ids: tuple[int, ...]

    @property
    def bands(self) -> list[str]:
        return classify_bands(self)

    @property
    def active_edges(self) -> list[int]:
        """Arc ids whose ratio reaches the lowest colored band."""
        return [j for j, e in zip(self.arc_ids, self.e) if e >= BAND_EDGES[0]]

    @property
    def approximately_localized(self) -> bool:
        """One arc holds at least half the mass and every other arc under 5%."""
        order = np.sort(self.e)[::-1]
        return bool(order[0] >= 0.5 and (len(order) == 1 or order[1] < 0.05))

    def summary(self) -> dict:
        return {
            "q": self.q,
            "k": self.k,
            "criterion": self.criterion,
            "ipr": self.ipr,
            "active_edges": self.active_edges,
        }


def classify_bands(report: LocalizationReport) -> list[str]:
    return [band_of(float(e)) for e in report.e]


def localization_report(mode: ModeCoefficients, graph: MetricGraph, q: int = 0) -> LocalizationReport:
    e = edge_energy_ratio(mode, graph)
    crit, dens = localization_criterion(mode, graph)
    return LocalizationReport(q, mode.k, e, dens, crit, ipr(mode, graph), tuple(graph.arc_ids))
