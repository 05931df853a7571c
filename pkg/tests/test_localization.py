import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import quad_g14, triangle_g14, two_leaf_host
from metricgraph.errors import MetricGraphError
from metricgraph.fixtures import load_g14
from metricgraph.localization import (
    arc_quartics,
    band_of,
    classify_bands,
    edge_energy_ratio,
    ipr,
    localization_criterion,
    localization_report,
)
from metricgraph.resonance import check_shape, construct_mode
from metricgraph.spectral import ModeCoefficients, constant_mode, scan_spectrum

PI = math.pi


def _triangle_mode():
    g = triangle_g14()
    return g, construct_mode(g, check_shape(g, [6, 7, 13], "cycle")).modes[0]


def test_triangle_ratios_follow_lengths():
    g, mode = _triangle_mode()
    e = edge_energy_ratio(mode, g)
    pos = [g.arc_position(a) for a in (6, 7, 13)]
    np.testing.assert_allclose(e[pos], [2 / 12, 3 / 12, 7 / 12], atol=1e-12)
    assert np.delete(e, pos).max() < 1e-20


def test_single_arc_support():
    g = load_g14()
    amps = np.zeros(28)
    amps[2 * 3] = 1.0
    e = edge_energy_ratio(ModeCoefficients(0.9, amps), g)
    assert e[3] == 1.0 and e.sum() == 1.0


def test_zero_mode_raises():
    g = load_g14()
    for fn in (edge_energy_ratio, localization_criterion, ipr):
        with pytest.raises(MetricGraphError) as exc:
            fn(ModeCoefficients(1.0, np.zeros(28)), g)
        assert exc.value.code == "ZERO_MODE"


@pytest.mark.parametrize(
    "graph_fn, arcs, kind, expected",
    [
        (two_leaf_host, [1, 2], "leaves", 1 / 2),
        (triangle_g14, [6, 7, 13], "cycle", 1 / 3),
        (quad_g14, [5, 7, 8, 9], "cycle", 1 / 4),
    ],
)
def test_closed_form_criterion_and_ipr(graph_fn, arcs, kind, expected):
    g = graph_fn()
    mode = construct_mode(g, check_shape(g, arcs, kind)).modes[0]
    crit, dens = localization_criterion(mode, g)
    assert crit == pytest.approx(expected, abs=1e-10)
    active = [g.arc_position(a) for a in arcs]
    np.testing.assert_allclose(dens[active], expected, atol=1e-10)
    total = sum(g.arc(a).length for a in arcs)
    assert ipr(mode, g) == pytest.approx(3 / (2 * total), abs=1e-10)


def test_constant_mode_ipr():
    g = load_g14()
    assert ipr(constant_mode(g), g) == pytest.approx(1 / g.total_length, rel=1e-12)


def test_quartic_matches_quadrature():
    g = load_g14()
    rng = np.random.default_rng(8)
    mode = ModeCoefficients(1.17, rng.normal(size=28))
    got = arc_quartics(mode, g.lengths)
    for pos, l in enumerate(g.lengths):
        x = np.linspace(0.0, l, 400_001)
        v = mode.evaluate(pos, x) ** 4
        ref = (v.sum() - 0.5 * (v[0] + v[-1])) * (x[1] - x[0])
        assert got[pos] == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize(
    "e, band",
    [(0.0, "band0"), (0.05, "band0"), (0.06, "band1"), (0.1, "band1"), (0.12, "band2"),
     (0.19, "band2"), (0.2, "band3"), (0.58, "band3")],
)
def test_bands(e, band):
    assert band_of(e) == band


def test_report_fields():
    g, mode = _triangle_mode()
    rep = localization_report(mode, g, q=4)
    assert rep.criterion == pytest.approx(1 / 3, abs=1e-10)
    assert rep.active_edges == [6, 7, 13]
    assert classify_bands(rep) == rep.bands
    assert rep.bands[g.arc_position(13)] == "band3"
    assert rep.summary()["q"] == 4
    assert not rep.approximately_localized


@st.composite
def g14_modes(draw):
    k = draw(st.floats(0.05, 3.0))
    amps = draw(st.lists(st.floats(-5, 5), min_size=28, max_size=28))
    if max(abs(a) for a in amps) < 1e-3:
        amps[0] = 1.0
    return ModeCoefficients(k, np.array(amps))


@settings(max_examples=100, deadline=None)
@given(g14_modes(), st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3))
def test_ratio_properties(mode, c):
    g = load_g14()
    e = edge_energy_ratio(mode, g)
    crit, dens = localization_criterion(mode, g)
    assert np.all(e >= 0) and abs(e.sum() - 1) < 1e-10
    assert abs(dens.sum() - 1) < 1e-10
    assert crit == dens.max()
    scaled = mode.scaled(c)
    np.testing.assert_allclose(edge_energy_ratio(scaled, g), e, atol=1e-12)
    np.testing.assert_allclose(localization_criterion(scaled, g)[1], dens, atol=1e-12)


def test_g14_q2_has_dominant_edge():
    g = load_g14()
    pair = scan_spectrum(g, 0.2, 0.25)[0]
    e = edge_energy_ratio(pair.modes[0], g)
    assert 1 <= int(np.sum(e >= 0.5)) <= 2
