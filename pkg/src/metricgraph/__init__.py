"""Spectral analysis and wave dynamics on metric graphs."""

from .errors import MetricGraphError
from .graph import Arc, MetricGraph, Vertex, load_graph, merge_degree_two, save_graph, validate
from .localization import LocalizationReport, localization_report
from .resonance import ResonanceSpec, certify_nonexistence, construct_mode, join_composite, tune_lengths
from .spectral import Eigenpair, ModeCoefficients, assemble_secular, extract_modes, scan_spectrum

__all__ = [
    "Arc",
    "Eigenpair",
    "LocalizationReport",
    "MetricGraph",
    "MetricGraphError",
    "ModeCoefficients",
    "ResonanceSpec",
    "Vertex",
    "assemble_secular",
    "certify_nonexistence",
    "construct_mode",
    "extract_modes",
    "join_composite",
    "load_graph",
    "localization_report",
    "merge_degree_two",
    "save_graph",
    "scan_spectrum",
    "tune_lengths",
    "validate",
]
