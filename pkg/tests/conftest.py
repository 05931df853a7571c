import math
import sys
from pathlib import Path

import pytest

from metricgraph.fixtures import load_g14
from metricgraph.graph import MetricGraph

sys.path.insert(0, str(Path(__file__).parent))

PI = math.pi


def neumann_arc(length=PI):
    return MetricGraph.from_edges([(1, 2, length)])


def triangle_g14():
    return load_g14().with_lengths({6: 2 * PI, 7: 3 * PI, 13: 7 * PI})


def quad_g14():
    return load_g14().with_lengths({5: 2 * PI, 7: 3 * PI, 8: 5 * PI, 9: 6 * PI})


def pumpkin_host(lengths=(PI, 3 * PI, 5 * PI)):
    """Parallel arcs between vertices 1 and 2, closed by a small tail at vertex 3."""
    edges = [(1, 2, l) for l in lengths]
    edges += [(1, 3, 1.3), (2, 3, 0.7), (3, 4, 2.2)]
    return MetricGraph.from_edges(edges)


def two_leaf_host():
    """Leaves 1 and 2 (lengths 1 and 3) on vertex 1, attached to a small tree."""
    return MetricGraph.from_edges(
        [(1, 2, 1.0), (1, 3, 3.0), (1, 4, 1.7), (4, 5, 1.1), (4, 6, 2.3)]
    )


@pytest.fixture
def g14():
    return load_g14()
