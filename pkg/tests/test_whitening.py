"""
Tests for whitening, core, attachment, rigidity, residual census and entropy bounds.
"""

import math

import numpy as np
import pytest

from src.core.errors import ParameterError
from src.core.exact import Constraint, coloring_code, iter_solution_codes, nae_constraints
from src.core.model import Hypergraph, canonical_coloring, make_rng
from src.core.whitening import (
    LN2,
    attach,
    canonical_form,
    cluster_entropy_bounds,
    core,
    degree_histogram,
    residual_census,
    rigid_check,
    support_structure,
    u_census,
    whiten,
)


def _two_block_instance():
    """
    n=12, k=4, sigma = canonical. B = {0,1,2,6,7,8} supports six critical
    edges inside B; the non-critical edges {3,4,6,7}, {3,5,6,8}, {0,1,9,10}
    each have two whitened vertices.
    """
    edges = [
        (0, 1, 2, 6), (0, 1, 2, 7), (0, 1, 2, 8),
        (0, 6, 7, 8), (1, 6, 7, 8), (2, 6, 7, 8),
        (3, 4, 6, 7), (3, 5, 6, 8), (0, 1, 9, 10),
    ]
    return Hypergraph.from_edges(12, 4, edges), canonical_coloring(12)


def _star_partner_instance():
    """
    n=12, k=4, sigma = canonical. The block {0,1,2,6,7,8} never whitens;
    {3,6,7,9} is supported by 3 alone, so 3 joins U as a star centre with
    partner 9. The non-critical edge {4,5,8,9} has the free pair 4, 5 and
    the star partner 9 under one outside colour.
    """
    edges = [
        (0, 1, 2, 6), (0, 1, 2, 7), (0, 1, 2, 8),
        (0, 6, 7, 8), (1, 6, 7, 8), (2, 6, 7, 8),
        (3, 6, 7, 9), (4, 5, 8, 9),
    ]
    return Hypergraph.from_edges(12, 4, edges), canonical_coloring(12)


def _agreeing_solutions(H, sigma, C):
    ref = np.uint64(coloring_code(sigma))
    mask = np.uint64(sum(1 << v for v in C))
    return sum(int(np.count_nonzero(((codes ^ ref) & mask) == 0))
               for codes in iter_solution_codes(H.n, nae_constraints(H)))


class TestWhitening:
    def test_chain_trace(self, chain_instance, sigma6):
        result = whiten(chain_instance, sigma6)
        assert result.rounds == [(0, [2, 4, 5]), (1, [0, 1]), (2, [3])]
        assert result.U == set(range(6))
        assert result.S0 == {2, 4, 5}
        assert result.S1 == set()
        assert len(result.H_U) == 3
        assert result.extra_edges == 3
        assert result.trace_rows() == [(0, 2), (0, 4), (0, 5), (1, 0), (1, 1), (2, 3)]

    def test_blocked_instance(self, blocked_instance, sigma6):
        result = whiten(blocked_instance, sigma6)
        assert result.U == {2, 5}
        assert result.rounds == [(0, [2, 5])]
        assert result.H_U == []

    def test_star_vertex(self, blocked_instance, sigma6):
        H = blocked_instance.with_edge((2, 3, 5))
        result = whiten(H, sigma6)
        assert result.rounds == [(0, [5]), (1, [2])]
        assert result.S0 == {5}
        assert result.S1 == {2}
        assert result.extra_edges == 0
        assert [proj for _, proj in result.H_U] == [(2, 5)]

    def test_improper_coloring_warns(self, sigma6):
        H = Hypergraph.from_edges(6, 3, [(0, 1, 2)])
        assert whiten(H, sigma6).warnings

    @staticmethod
    def _check_orders(H, sigma, orders):
        st = support_structure(H, sigma)
        reference = whiten(H, sigma, structure=st)
        reference_core = core(H, sigma, 4, structure=st).C
        reference_attach = attach(H, sigma, reference_core, structure=st).A
        rng = make_rng(H.m)
        for _ in range(orders):
            order = list(rng.permutation(H.n))
            result = whiten(H, sigma, order=order, structure=st)
            assert result.U == reference.U
            assert [set(vs) for _, vs in result.rounds] == [set(vs) for _, vs in reference.rounds]
            assert core(H, sigma, 4, order=order, structure=st).C == reference_core
            assert attach(H, sigma, reference_core, order=order, structure=st).A == reference_attach

    def test_order_independence(self, planted_critical_factory):
        H, sigma = planted_critical_factory(200, 300, 100, 5, seed=3)
        self._check_orders(H, sigma, 20)

    @pytest.mark.slow
    @pytest.mark.parametrize('seed', range(100))
    def test_order_independence_many_instances(self, planted_critical_factory, seed):
        H, sigma = planted_critical_factory(200, 300, 100, 5, seed=1000 + seed)
        self._check_orders(H, sigma, 20)

    @staticmethod
    def _check_monotone(H, sigma, seed, additions=20):
        rng = make_rng(seed)
        present = set(H.edge_list())
        U = whiten(H, sigma).U
        added = 0
        while added < additions:
            edge = tuple(sorted(int(v) for v in rng.choice(H.n, size=H.k, replace=False)))
            if edge in present:
                continue
            present.add(edge)
            H = H.with_edge(edge)
            bigger = whiten(H, sigma).U
            assert bigger <= U
            U = bigger
            added += 1

    def test_adding_edges_shrinks_whitening(self, planted_critical_factory):
        H, sigma = planted_critical_factory(120, 150, 60, 4, seed=9)
        self._check_monotone(H, sigma, seed=10)

    @pytest.mark.slow
    @pytest.mark.parametrize('seed', range(50))
    def test_adding_edges_shrinks_whitening_many_instances(self, planted_critical_factory, seed):
        H, sigma = planted_critical_factory(120, 150, 60, 4, seed=2000 + seed)
        self._check_monotone(H, sigma, seed=3000 + seed)

    def test_u_census(self, blocked_instance, sigma6):
        result = whiten(blocked_instance, sigma6)
        census = u_census(result, blocked_instance, sigma6)
        assert (census.U, census.S0, census.S1, census.rest) == (2, 2, 0, 0)
        assert census.lam == pytest.approx(4 / 6)
        rows = census.rows()
        assert rows[0][0] == 'U_fraction'
        assert rows[0][1] == pytest.approx(2 / 6)

    def test_u_census_expansion_audit(self, planted_critical_factory):
        H, sigma = planted_critical_factory(60, 40, 20, 5, seed=1)
        census = u_census(whiten(H, sigma), H, sigma, audit_sizes=[3], audit_samples=5, rng=make_rng(2))
        assert set(census.expansion) == {3}
        assert census.rows()[-1][0] == 'expansion_3'

    def test_degree_histogram(self, chain_instance, sigma6):
        histogram = degree_histogram(chain_instance, sigma6)
        assert list(histogram) == pytest.approx([0.5, 0.5])
        assert degree_histogram(chain_instance, sigma6, max_l=3).tolist() == pytest.approx([0.5, 0.5, 0.0, 0.0])


class TestCore:
    def test_blocked_core(self, blocked_instance, sigma6):
        result = core(blocked_instance, sigma6, l=2)
        assert result.C == {0, 1, 3, 4}
        assert result.removed_trace == [2, 5]

    def test_chain_core_is_empty(self, chain_instance, sigma6):
        result = core(chain_instance, sigma6, l=2)
        assert result.C == set()
        assert result.removed_trace == [2, 4, 5, 0, 1, 3]

    def test_parameter_checks(self, chain_instance, sigma6):
        with pytest.raises(ParameterError):
            core(chain_instance, sigma6, l=3)
        with pytest.raises(ParameterError):
            core(chain_instance, sigma6, l=0)

    def test_two_block_core(self):
        H, sigma = _two_block_instance()
        assert core(H, sigma, l=2).C == {0, 1, 2, 6, 7, 8}
        assert core(H, sigma, l=4).C == set()

    def test_attach(self, blocked_instance, chain_instance, sigma6):
        assert attach(blocked_instance, sigma6, {3, 4}).A == {0, 1, 3, 4}
        assert attach(chain_instance, sigma6, {3, 4}).A == {0, 1, 3, 4}
        assert attach(chain_instance, sigma6, set()).A == set()
        with pytest.raises(ParameterError):
            attach(chain_instance, sigma6, {6})

    def test_attach_contains_core(self, planted_critical_factory):
        H, sigma = planted_critical_factory(200, 600, 100, 5, seed=12)
        st = support_structure(H, sigma)
        C = core(H, sigma, 4, structure=st).C
        A = attach(H, sigma, C, structure=st).A
        assert C <= A
        shuffled = list(make_rng(13).permutation(H.n))
        assert attach(H, sigma, C, order=shuffled, structure=st).A == A


class TestRigidity:
    def test_trivial_threshold(self, blocked_instance, sigma6):
        assert rigid_check(blocked_instance, sigma6, range(6), 1)

    def test_complement_breaks_large_threshold(self, blocked_instance, sigma6):
        assert not rigid_check(blocked_instance, sigma6, range(6), 7)

    def test_isolated_vertex_is_not_rigid(self, blocked_instance, sigma6):
        assert not rigid_check(blocked_instance, sigma6, {2}, 2)
        assert rigid_check(blocked_instance, sigma6, {2}, 1)

    def test_empty_set(self, blocked_instance, sigma6):
        assert rigid_check(blocked_instance, sigma6, [], 5)


class TestResidualCensus:
    def test_isolated_residual_vertices(self, blocked_instance, sigma6):
        census = residual_census(blocked_instance, sigma6, {0, 1, 3, 4})
        assert census.residual_vertices == 2
        assert len(census.components) == 1
        component = census.components[0]
        assert (component.multiplicity, component.vertex_count, component.z) == (2, 1, 2)
        assert census.entropy_estimate == pytest.approx(2 * LN2)

    def test_two_block_projected(self):
        H, sigma = _two_block_instance()
        census = residual_census(H, sigma, {0, 1, 2, 6, 7, 8}, mode='projected')
        assert sorted(c.vertex_count for c in census.components) == [1, 2, 3]
        assert census.entropy_estimate == pytest.approx(math.log(8))

    def test_two_block_conditioned(self):
        H, sigma = _two_block_instance()
        C = {0, 1, 2, 6, 7, 8}
        census = residual_census(H, sigma, C, mode='conditioned')
        assert census.entropy_estimate == pytest.approx(math.log(30))
        assert _agreeing_solutions(H, sigma, C) == 30

    def test_conditioned_matches_enumeration(self, planted_critical_factory):
        rng = make_rng(21)
        for seed in range(5):
            H, sigma = planted_critical_factory(14, 12, 0, 3, seed=seed)
            C = set(int(v) for v in rng.choice(14, size=5, replace=False))
            census = residual_census(H, sigma, C, mode='conditioned')
            assert census.entropy_estimate == pytest.approx(math.log(_agreeing_solutions(H, sigma, C)))

    def test_whole_vertex_set(self, chain_instance, sigma6):
        census = residual_census(chain_instance, sigma6, range(6), mode='conditioned')
        assert census.components == []
        assert census.entropy_estimate == 0.0
        assert census.to_dict()['residual_vertices'] == 0

    def test_unknown_mode(self, chain_instance, sigma6):
        with pytest.raises(ParameterError):
            residual_census(chain_instance, sigma6, set(), mode='other')

    def test_canonical_form_isomorphism(self):
        path_a = [Constraint(0b011), Constraint(0b110)]
        path_b = [Constraint(0b101), Constraint(0b110)]
        triangle = [Constraint(0b011), Constraint(0b110), Constraint(0b101)]
        assert canonical_form(3, path_a) == canonical_form(3, path_b)
        assert canonical_form(3, path_a) != canonical_form(3, triangle)


class TestEntropyBounds:
    def test_blocked_instance(self, blocked_instance, sigma6):
        bounds = cluster_entropy_bounds(blocked_instance, sigma6)
        assert bounds.upper == pytest.approx(2 * LN2 / 6)
        assert bounds.lower == pytest.approx(2 * LN2 / 6)

    def test_star_partner_is_not_free(self, blocked_instance, sigma6):
        H = blocked_instance.with_edge((2, 3, 5))
        bounds = cluster_entropy_bounds(H, sigma6)
        assert bounds.S0 == 1
        assert bounds.upper_total == pytest.approx(LN2)
        assert bounds.lower_total == pytest.approx(LN2)

    def test_two_block_matching(self):
        H, sigma = _two_block_instance()
        bounds = cluster_entropy_bounds(H, sigma)
        assert bounds.S0 == 6
        assert bounds.e2_prime == 3
        assert bounds.matching == 2
        assert bounds.exceptional == 1
        assert bounds.e2_unblocked == 1
        assert bounds.upper_total == pytest.approx(4 * LN2)
        assert bounds.lower_total == pytest.approx(4 * LN2)

    def test_star_partner_blocks_pair(self):
        H, sigma = _star_partner_instance()
        result = whiten(H, sigma)
        assert result.rounds == [(0, [4, 5, 9, 10, 11]), (1, [3])]
        assert result.S1 == {3}
        bounds = cluster_entropy_bounds(H, sigma, result)
        assert bounds.S0 == 5
        assert bounds.e2_prime == 1
        assert bounds.matching == 1
        assert bounds.f2_seeds == 1
        assert bounds.exceptional == 4
        assert bounds.e2_unblocked == 0
        assert bounds.upper_total == pytest.approx(4 * LN2)
        assert bounds.lower_total == pytest.approx(LN2)

    def test_edgeless(self):
        bounds = cluster_entropy_bounds(Hypergraph.empty(8, 3), canonical_coloring(8))
        assert bounds.upper == pytest.approx(LN2)
        assert bounds.lower == pytest.approx(LN2)
        assert bounds.exceptional == 0

    def test_lower_never_exceeds_upper(self, planted_critical_factory):
        for seed in range(5):
            H, sigma = planted_critical_factory(300, 500, 150, 5, seed=seed)
            bounds = cluster_entropy_bounds(H, sigma)
            assert bounds.lower <= bounds.upper + 1e-12
            assert bounds.upper <= bounds.S0 * LN2 / H.n + 1e-12
