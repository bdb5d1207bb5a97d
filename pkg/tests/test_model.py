"""
Tests for hypergraphs, colorings, samplers and the file format.
"""

import io
import itertools
import math

import numpy as np
import pytest
from scipy import stats

from src.core.errors import ParameterError
from src.core.model import (
    CRITICAL,
    MONOCHROMATIC,
    OTHER_BICHROMATIC,
    Hypergraph,
    canonical_coloring,
    classify_edges,
    count_bichromatic_edges,
    count_critical_edges,
    count_noncritical_edges,
    expansion_audit,
    format_coloring,
    hamming_distance,
    is_equitable,
    load_coloring,
    load_hypergraph,
    make_rng,
    parse_coloring,
    random_equitable_coloring,
    read_hypergraph,
    sample_binomial_planted,
    sample_planted,
    sample_planted_critical,
    sample_uniform,
    save_hypergraph,
    trial_rng,
    violations,
    write_hypergraph,
)


class TestHypergraph:
    def test_rows_are_sorted_and_read_only(self):
        H = Hypergraph.from_edges(5, 3, [(4, 2, 0), (1, 0, 2)])
        assert H.edge_list() == [(0, 1, 2), (0, 2, 4)]
        assert not H.edges.flags.writeable

    def test_invalid_edges(self):
        with pytest.raises(ParameterError):
            Hypergraph.from_edges(4, 3, [(0, 1, 1)])
        with pytest.raises(ParameterError):
            Hypergraph.from_edges(4, 3, [(0, 1, 4)])
        with pytest.raises(ParameterError):
            Hypergraph.from_edges(4, 3, [(0, 1, 2), (2, 1, 0)])
        with pytest.raises(ParameterError):
            Hypergraph.from_edges(4, 3, [(0, 1)])

    def test_equality_and_with_edge(self):
        H = Hypergraph.from_edges(5, 3, [(0, 1, 2)])
        G = H.with_edge((2, 3, 4))
        assert G.m == 2
        assert G == Hypergraph.from_edges(5, 3, [(2, 3, 4), (0, 1, 2)])
        assert hash(G) == hash(Hypergraph.from_edges(5, 3, [(2, 3, 4), (0, 1, 2)]))
        assert H != G

    def test_edge_masks(self):
        H = Hypergraph.from_edges(4, 3, [(0, 1, 3)])
        assert H.edge_masks() == [0b1011]


class TestColorings:
    def test_canonical_coloring(self):
        sigma = canonical_coloring(6)
        assert list(sigma) == [0, 0, 0, 1, 1, 1]
        assert is_equitable(sigma)
        with pytest.raises(ParameterError):
            canonical_coloring(5)

    def test_random_equitable(self, rng):
        sigma = random_equitable_coloring(20, rng)
        assert is_equitable(sigma)

    def test_hamming_distance(self):
        assert hamming_distance(np.array([0, 1, 1]), np.array([1, 1, 0])) == 2

    def test_parse_and_format(self):
        sigma = parse_coloring("0110")
        assert format_coloring(sigma) == "0110"
        with pytest.raises(ParameterError):
            parse_coloring("01a")
        with pytest.raises(ParameterError):
            parse_coloring("011", n=4)


class TestClassification:
    def test_labels_and_support(self, sigma6):
        H = Hypergraph.from_edges(6, 3, [(0, 1, 2), (0, 1, 3), (0, 3, 4), (3, 4, 5)])
        classes = classify_edges(H, sigma6)
        assert list(classes.labels) == [MONOCHROMATIC, CRITICAL, CRITICAL, MONOCHROMATIC]
        assert list(classes.support) == [-1, 3, 0, -1]
        assert list(classes.degrees) == [1, 0, 0, 1, 0, 0]
        assert violations(H, sigma6) == 2
        assert classes.label_names() == ['monochromatic', 'critical', 'critical', 'monochromatic']

    def test_other_bichromatic(self):
        sigma = canonical_coloring(8)
        H = Hypergraph.from_edges(8, 4, [(0, 1, 4, 5)])
        classes = classify_edges(H, sigma)
        assert classes.other_bichromatic == 1
        assert classes.degrees.sum() == 0

    def test_pool_counts_partition_bichromatic(self):
        for n0, n1, k in [(5, 5, 3), (6, 6, 4), (10, 10, 5)]:
            assert (count_critical_edges(n0, n1, k) + count_noncritical_edges(n0, n1, k)
                    == count_bichromatic_edges(n0, n1, k))


class TestSamplers:
    def test_uniform_is_deterministic_per_seed(self):
        assert sample_uniform(30, 40, 3, make_rng(5)) == sample_uniform(30, 40, 3, make_rng(5))
        assert sample_uniform(30, 40, 3, make_rng(5)) != sample_uniform(30, 40, 3, make_rng(6))

    def test_uniform_edge_count(self):
        H = sample_uniform(10, 120, 3, make_rng(1))
        assert H.m == 120 == math.comb(10, 3)

    def test_uniform_rejects_impossible_m(self):
        with pytest.raises(ParameterError):
            sample_uniform(5, 11, 3, make_rng(1))

    def test_uniform_chi_square(self):
        # single edges of H_3(6, 1) are uniform over the 20 triples
        triples = list(itertools.combinations(range(6), 3))
        index = {t: i for i, t in enumerate(triples)}
        counts = np.zeros(len(triples))
        for i in range(4000):
            H = sample_uniform(6, 1, 3, trial_rng(99, i))
            counts[index[H.edge_list()[0]]] += 1
        _, p_value = stats.chisquare(counts)
        assert p_value > 1e-4

    def test_planted_is_proper(self):
        sigma = canonical_coloring(20)
        H = sample_planted(20, 60, 4, sigma, make_rng(3))
        assert H.m == 60
        assert violations(H, sigma) == 0

    def test_planted_rejects_too_many_edges(self):
        sigma = np.array([0, 0, 0, 1], dtype=np.uint8)
        with pytest.raises(ParameterError):
            sample_planted(4, 4, 3, sigma, make_rng(1))

    def test_planted_critical_counts(self):
        sigma = canonical_coloring(40)
        H = sample_planted_critical(40, 30, 20, 5, sigma, make_rng(8))
        classes = classify_edges(H, sigma)
        assert classes.critical == 30
        assert classes.other_bichromatic == 20
        assert classes.monochromatic == 0
        assert classes.degrees.sum() == 30

    def test_planted_critical_needs_equitable_coloring(self):
        sigma = np.array([0, 0, 0, 1, 1, 0], dtype=np.uint8)
        with pytest.raises(ParameterError):
            sample_planted_critical(6, 1, 0, 3, sigma, make_rng(1))

    def test_planted_critical_k3_has_no_noncritical_pool(self):
        with pytest.raises(ParameterError):
            sample_planted_critical(10, 2, 1, 3, canonical_coloring(10), make_rng(1))

    def test_binomial_modes(self):
        sigma = canonical_coloring(10)
        exact = sample_binomial_planted(10, 0.3, 3, sigma, make_rng(2), mode='exact')
        counted = sample_binomial_planted(10, 0.3, 3, sigma, make_rng(2), mode='count')
        assert violations(exact, sigma) == 0
        assert violations(counted, sigma) == 0
        assert sample_binomial_planted(10, 1.0, 3, sigma, make_rng(2), mode='exact').m == \
            count_bichromatic_edges(5, 5, 3)
        with pytest.raises(ParameterError):
            sample_binomial_planted(10, 1.5, 3, sigma, make_rng(2))

    def test_binomial_count_mode_mean(self):
        sigma = canonical_coloring(12)
        pool = count_bichromatic_edges(6, 6, 3)
        sizes = [sample_binomial_planted(12, 0.2, 3, sigma, trial_rng(4, i), mode='count').m
                 for i in range(400)]
        stderr = math.sqrt(pool * 0.2 * 0.8 / len(sizes))
        assert abs(np.mean(sizes) - 0.2 * pool) < 4 * stderr

    def test_expansion_audit(self):
        H = Hypergraph.empty(10, 3)
        assert expansion_audit(H, [3, 5], 10, make_rng(1)) == {3: 1.0, 5: 1.0}
        with pytest.raises(ParameterError):
            expansion_audit(H, [11], 1, make_rng(1))


class TestSerialization:
    def test_stream_format(self):
        H = Hypergraph.from_edges(5, 3, [(0, 1, 2), (1, 3, 4)])
        buffer = io.StringIO()
        write_hypergraph(H, buffer)
        assert buffer.getvalue() == "5 3 2\n0 1 2\n1 3 4\n"
        buffer.seek(0)
        assert read_hypergraph(buffer) == H

    def test_files(self, tmp_path):
        H = sample_uniform(12, 15, 3, make_rng(11))
        path = tmp_path / "H.txt"
        save_hypergraph(H, path)
        assert load_hypergraph(path) == H

        coloring_path = tmp_path / "sigma.txt"
        coloring_path.write_text("# planted\n000111\n")
        assert list(load_coloring(coloring_path, 6)) == [0, 0, 0, 1, 1, 1]

    def test_malformed_files(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("4 3 2\n0 1 2\n")
        with pytest.raises(ParameterError):
            load_hypergraph(path)
        with pytest.raises(ParameterError):
            load_hypergraph(tmp_path / "missing.txt")
