"""
Shared fixtures for the test suite.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from src.core.model import Hypergraph, canonical_coloring, make_rng, sample_planted_critical  # noqa: E402


@pytest.fixture
def two_edge_instance():
    """n=4, k=3, two edges: Z = 10, Z_e = 6."""
    return Hypergraph.from_edges(4, 3, [(0, 1, 2), (1, 2, 3)])


@pytest.fixture
def single_edge():
    return Hypergraph.from_edges(3, 3, [(0, 1, 2)])


@pytest.fixture
def sigma6():
    return canonical_coloring(6)


@pytest.fixture
def chain_instance():
    """
    sigma = 000111; (0,3,4) supported by 0, (0,1,3) by 3, (1,3,4) by 1.
    Whitening rounds: {2,4,5}, then {0,1}, then {3}.
    """
    return Hypergraph.from_edges(6, 3, [(0, 3, 4), (0, 1, 3), (1, 3, 4)])


@pytest.fixture
def blocked_instance():
    """
    sigma = 000111; vertices 0, 1, 3, 4 support edges among themselves only,
    so whitening stops at {2, 5}.
    """
    return Hypergraph.from_edges(6, 3, [(0, 3, 4), (0, 1, 3), (1, 3, 4), (0, 1, 4)])


@pytest.fixture
def planted_critical_factory():
    """Draws planted-critical instances with the canonical coloring."""
    def make(n, m1, m2, k, seed):
        sigma = canonical_coloring(n)
        return sample_planted_critical(n, m1, m2, k, sigma, make_rng(seed)), sigma
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
