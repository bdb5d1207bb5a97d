"""
Tests for rate functions, overlap parameters and thresholds.
"""

import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from src.core import analytic
from src.core.analytic import (
    LN2,
    Params,
    RateFunctionSet,
    binary_entropy,
    binomial_point_rate,
    chernoff_phi,
    cluster_crossing,
    critical_first_moment_rate,
    critical_probability_rate,
    exact_first_moment,
    first_moment_rate,
    laplace_sum,
    local_cluster_rate,
    log_exact_first_moment,
    maximize_psi,
    overlap_params,
    pair_rate,
    psi,
    psi_values,
    q_values,
    thresholds,
)
from src.core.errors import DomainError, ParameterError


class TestElementaryRates:
    def test_entropy_and_phi_fixed_points(self):
        assert binary_entropy(0.5) == LN2
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert chernoff_phi(0.0) == 0.0

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            binary_entropy(1.5)
        with pytest.raises(DomainError):
            chernoff_phi(-1.0)
        with pytest.raises(DomainError):
            psi(5, 1.0, 0.0)
        with pytest.raises(ParameterError):
            first_moment_rate(2, 1.0)

    def test_psi_at_half_is_first_moment_rate(self):
        rng = np.random.default_rng(7)
        for k in range(3, 26):
            for r in rng.uniform(0.0, 2.0 ** (k - 1) * LN2, size=20):
                expected = LN2 + r * math.log1p(-(2.0 ** (1 - k)))
                assert abs(psi(k, r, 0.5) - expected) <= 1e-12 * max(1.0, abs(expected))
                assert abs(first_moment_rate(k, r) - expected) <= 1e-12 * max(1.0, abs(expected))

    def test_psi_symmetry(self):
        for k in (3, 6, 11):
            for x in (0.01, 0.2, 0.37, 0.49):
                assert psi(k, 3.0, x) == pytest.approx(psi(k, 3.0, 1.0 - x), abs=1e-14)

    def test_psi_values_matches_scalar(self):
        xs = np.linspace(0.05, 0.95, 19)
        vector = psi_values(7, 30.0, xs)
        for x, v in zip(xs, vector):
            assert v == pytest.approx(psi(7, 30.0, float(x)), rel=1e-12, abs=1e-15)

    def test_binomial_point_rate_at_mean_is_zero(self):
        assert binomial_point_rate(1000.0, 0.3, 0.0) == 0.0

    def test_binomial_point_rate_tracks_log_pmf(self):
        # leading order: ln Pr[Bin(n,p) = np + t] = rate + O(ln n)
        from scipy import stats
        n, p = 100000, 0.3
        for t in (-2000.0, 1500.0):
            exact = stats.binom.logpmf(int(n * p + t), n, p)
            rate = binomial_point_rate(float(n), p, t)
            assert abs(exact - rate) < math.log(n)

    def test_binomial_point_rate_at_n1000(self):
        from scipy import stats
        for t in (50.0, -50.0):
            exact = stats.binom.logpmf(int(300 + t), 1000, 0.3)
            assert abs(exact - binomial_point_rate(1000.0, 0.3, t)) <= 6.0

    def test_psi_curvature_at_half(self):
        k = 25
        r = 2.0 ** (k - 1) * LN2 - LN2
        h = 1e-4
        first = (psi(k, r, 0.5 + h) - psi(k, r, 0.5 - h)) / (2 * h)
        second = (psi(k, r, 0.5 + h) - 2 * psi(k, r, 0.5) + psi(k, r, 0.5 - h)) / h ** 2
        assert abs(first) <= 1e-6
        assert second == pytest.approx(-4.0, abs=0.1)

    def test_binomial_point_rate_domain(self):
        with pytest.raises(DomainError):
            binomial_point_rate(10.0, 0.0, 0.0)
        with pytest.raises(DomainError):
            binomial_point_rate(10.0, 0.5, 5.0)


class TestFirstMoment:
    def test_exact_small_value(self):
        assert exact_first_moment(4, 2, 3) == 10.0

    def test_no_edges_gives_all_colorings(self):
        assert exact_first_moment(12, 0, 3) == 2.0 ** 12
        assert log_exact_first_moment(12, 0, 3) == pytest.approx(12 * LN2, abs=1e-12)

    def test_log_space_branch_agrees_with_exact_branch(self):
        # C(60, 3) = 34220 is summed exactly; evaluate the same sum in log space
        n, m, k = 60, 80, 3
        exact = log_exact_first_moment(n, m, k)
        total = math.comb(n, k)
        terms = []
        for j in range(n + 1):
            allowed = total - math.comb(j, k) - math.comb(n - j, k)
            if allowed >= m:
                terms.append(analytic._log_comb(np.float64(n), float(j))
                             + analytic._log_comb(np.float64(allowed), float(m)))
        approx = float(logsumexp(terms)) - float(analytic._log_comb(np.float64(total), float(m)))
        assert approx == pytest.approx(exact, rel=1e-9)

    def test_exact_first_moment_rate_converges(self):
        k, r = 4, 2.0
        rates = [log_exact_first_moment(n, int(r * n), k) / n for n in (40, 80)]
        target = first_moment_rate(k, r)
        assert abs(rates[1] - target) < abs(rates[0] - target)

    def test_invalid_edge_count(self):
        with pytest.raises(ParameterError):
            exact_first_moment(4, 5, 3)

    def test_critical_rates(self):
        assert critical_probability_rate(10, 300.0, 0.0) == pytest.approx(0.0, abs=1e-15)
        assert critical_probability_rate(10, 300.0, 0.01) < 0.0
        assert critical_first_moment_rate(10, 300.0, 0.0) == pytest.approx(first_moment_rate(10, 300.0))


class TestThresholds:
    def test_k20_values(self):
        report = thresholds(20)
        scale = 2.0 ** 19 * LN2
        assert abs(report.r_second - (scale - (1.0 + LN2) / 2.0)) <= 0.05
        assert abs(report.r_first_exact - (scale - LN2 / 2.0)) <= 2.0 ** -18
        assert report.r_cond == pytest.approx(scale - LN2)

    def test_k10_condensation_density(self):
        report = thresholds(10)
        assert report.r_cond == pytest.approx(354.198, abs=1e-3)
        assert report.to_dict()['k'] == 10

    @pytest.mark.parametrize("k", range(6, 26))
    def test_ordering(self, k):
        report = thresholds(k)
        assert report.r_second < report.r_cond < report.r_first_exact
        assert abs(report.r_first_bisect - report.r_first_exact) < 1e-6

    def test_first_moment_rate_at_condensation(self):
        report = thresholds(10)
        assert first_moment_rate(10, report.r_cond) == pytest.approx(6.7734e-4, rel=1e-4)

    def test_local_cluster_rate_value(self):
        assert local_cluster_rate(10, 10 * LN2) == pytest.approx(6.5628e-4, rel=1e-4)

    def test_maximize_psi_k7(self):
        k = 7
        r = thresholds(k).r_second - 0.5
        x, _ = maximize_psi(k, r, 2.0 ** (-k / 2), 1.0 - 2.0 ** (-k / 2))
        assert x == pytest.approx(0.5, abs=1e-6)

    def test_maximize_psi_finds_half_below_second_moment(self):
        x, value = maximize_psi(10, 300.0, 0.0, 1.0)
        assert x == pytest.approx(0.5, abs=1e-6)
        assert value == pytest.approx(first_moment_rate(10, 300.0), abs=1e-12)


def _flip_table(k):
    """
    Exhaustive oracle: for each sigma pattern class and number of flipped
    vertices j, the number of (pattern, flip set) pairs landing in each
    class. Classes: 0 monochromatic, 1 critical, 2 other bichromatic.
    """
    def label(ones):
        if ones in (0, k):
            return 0
        if ones in (1, k - 1):
            return 1
        return 2

    table = np.zeros((3, k + 1, 3), dtype=np.int64)
    patterns = [label(sum(p)) for p in itertools.product((0, 1), repeat=k)]
    bits = list(itertools.product((0, 1), repeat=k))
    for p_bits, p_label in zip(bits, patterns):
        for f_bits in bits:
            tau = sum(a ^ b for a, b in zip(p_bits, f_bits))
            table[p_label, sum(f_bits), label(tau)] += 1
    return table


class TestOverlap:
    @pytest.mark.parametrize("k", [5, 6, 7, 8])
    def test_against_flip_oracle(self, k):
        table = _flip_table(k)
        critical = table[1].sum() / 2 ** k
        other = table[2].sum() / 2 ** k
        for alpha in np.linspace(0.0, 1.0, 100):
            weights = np.array([alpha ** j * (1.0 - alpha) ** (k - j) for j in range(k + 1)])
            u1 = weights @ table[1, :, 1] / critical
            v1 = weights @ table[1, :, 0] / critical
            u2 = weights @ table[2, :, 1] / other
            v2 = weights @ table[2, :, 0] / other
            ov = overlap_params(k, float(alpha))
            assert ov.u1 == pytest.approx(u1, abs=1e-12)
            assert ov.v1 == pytest.approx(v1, abs=1e-12)
            assert ov.u2 == pytest.approx(u2, abs=1e-12)
            assert ov.v2 == pytest.approx(v2, abs=1e-12)

    @pytest.mark.parametrize("k", [4, 5, 8, 12])
    def test_q_at_half(self, k):
        q1, q2 = q_values(k, 0.5)
        expected = k / (2.0 ** (k - 1) - 1.0)
        assert q1 == pytest.approx(expected, abs=1e-12)
        assert q2 == pytest.approx(expected, abs=1e-12)

    def test_k3_has_no_other_bichromatic_edges(self):
        ov = overlap_params(3, 0.3)
        assert ov.empty_sum
        assert ov.u2 == 0.0 and ov.v2 == 0.0

    def test_no_flip_keeps_classes(self):
        ov = overlap_params(7, 0.0)
        assert ov.u1 == 1.0 and ov.v1 == 0.0
        assert ov.u2 == 0.0 and ov.v2 == 0.0


class TestPairRate:
    @pytest.mark.parametrize("k", range(5, 16))
    def test_reduces_to_first_moment_at_half(self, k):
        r_first = 2.0 ** (k - 1) * LN2
        for r in np.linspace(0.2, 0.95, 5) * r_first:
            assert abs(pair_rate(k, float(r), 0.0, 0.5) - first_moment_rate(k, float(r))) <= 1e-9

    def test_half_is_local_maximum_at_condensation(self):
        k = 10
        r = thresholds(k).r_cond
        beta = 3.0 ** (-k)
        center = pair_rate(k, r, beta, 0.5)
        for delta in (0.01, 0.02):
            assert pair_rate(k, r, beta, 0.5 + delta) < center
            assert pair_rate(k, r, beta, 0.5 - delta) < center

    def test_rate_function_set(self):
        params = Params.critical(10, 300.0, 0.0)
        rates = RateFunctionSet(params)
        assert params.lam == pytest.approx(10 * 300.0 / 511.0)
        assert rates.psi(0.5) == pytest.approx(rates.first_moment())
        assert rates.xi() == pytest.approx(local_cluster_rate(10, params.lam))
        assert rates.h(0.5) == LN2

    def test_domain(self):
        with pytest.raises(DomainError):
            pair_rate(6, 10.0, 0.0, 1.0)
        with pytest.raises(ParameterError):
            Params(k=5, r=1.0, beta=1.0)


class TestLaplaceSum:
    def test_quadratic_rate(self):
        n = 200
        rate = lambda x: -(x - 0.5) ** 2
        result = laplace_sum(rate, n)
        xs = np.arange(1, n) / n
        assert result.sum_log == pytest.approx(float(logsumexp(n * rate(xs))), rel=1e-12)
        assert result.max_rate == pytest.approx(0.0, abs=1e-12)
        assert 1.0 <= result.ratio <= n

    def test_sqrt_n_scaling(self):
        rate = lambda x: -(x - 0.5) ** 2
        scaled = [laplace_sum(rate, n).ratio / math.sqrt(n) for n in (100, 400, 1600)]
        assert max(scaled) <= 2.0 * min(scaled)

    def test_scalar_rate_function(self):
        result = laplace_sum(lambda x: math.sin(math.pi * x) - 1.0, 50)
        assert result.max_rate == pytest.approx(0.0, abs=1e-9)

    def test_needs_large_n(self):
        with pytest.raises(ParameterError):
            laplace_sum(lambda x: x, 5)


class TestClusterCrossing:
    @staticmethod
    def _deviation(k):
        lam_cond = k * LN2
        grid = list(lam_cond * np.linspace(0.8, 1.2, 41))
        crossing = cluster_crossing(k, grid)
        assert crossing is not None
        assert crossing.lo <= crossing.root <= crossing.hi
        return crossing, abs(crossing.root - lam_cond) / lam_cond

    def test_crossing_near_condensation(self):
        crossing, deviation = self._deviation(10)
        assert deviation <= 0.1
        assert crossing.lo <= 1.1 * 10 * LN2
        assert crossing.hi >= 0.9 * 10 * LN2

    def test_crossing_tightens_with_k(self):
        _, dev10 = self._deviation(10)
        _, dev15 = self._deviation(15)
        assert dev15 < dev10

    def test_grid_without_crossing(self):
        assert cluster_crossing(10, [1.0, 2.0, 3.0]) is None
