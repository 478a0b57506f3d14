import numpy as np
import pytest

from netflux import WeightedGraph, build_network

# Bridged diamond used throughout: 1-2, then 2-{3,4}, 3-4 bridge, {3,4}-5,
# 5-6, all unit length.  Degree 3 at vertices 2..5, degree 1 at 1 and 6.
WHEATSTONE = [
    ("1", "1", "2", 1.0),
    ("2", "2", "3", 1.0),
    ("3", "2", "4", 1.0),
    ("4", "3", "4", 1.0),
    ("5", "3", "5", 1.0),
    ("6", "4", "5", 1.0),
    ("7", "5", "6", 1.0),
]


@pytest.fixture(scope="session")
def wheatstone():
    return build_network(WeightedGraph.from_edge_list(WHEATSTONE))


@pytest.fixture(scope="session")
def ring():
    """A single self-loop of length one: the circle."""
    return build_network(WeightedGraph.from_edge_list([("r", "a", "a", 1.0)]))


@pytest.fixture(scope="session")
def single_edge():
    return build_network(WeightedGraph.from_edge_list([("e", "a", "b", 1.0)]))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260816)
