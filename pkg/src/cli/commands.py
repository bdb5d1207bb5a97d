"""
Command implementations for the condensation laboratory CLI.

Each command class wraps one group of domain operations and returns a
CommandOutput: a CSV table plus the JSON payload of the same result. The
click layer in main.py only resolves flags and writes the output.
"""

import logging
import math
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core import analytic
from src.core.analytic import Params, RateFunctionSet
from src.core.errors import ParameterError
from src.core.exact import distance_profile, geometry_verdict, solution_census
from src.core.experiments import (
    CURVE_COLUMNS,
    RECORD_COLUMNS,
    ScanResult,
    cluster_entropy_scan,
    condensation_scan,
    degree_law_scan,
    u_size_scan,
)
from src.core.model import (
    Hypergraph,
    canonical_coloring,
    classify_edges,
    count_bichromatic_edges,
    format_coloring,
    load_coloring,
    load_hypergraph,
    make_rng,
    random_equitable_coloring,
    sample_binomial_planted,
    sample_planted,
    sample_planted_critical,
    sample_uniform,
)
from src.core.whitening import (
    attach,
    cluster_entropy_bounds,
    core,
    residual_census,
    rigid_check,
    support_structure,
    u_census,
    whiten,
)


class CommandOutput(NamedTuple):
    """Tabular rendering plus the JSON payload of one command result."""

    columns: Sequence[str]
    rows: List[Tuple]
    payload: Dict[str, Any]


def load_instance(path: str, coloring_path: Optional[str] = None) -> Tuple[Hypergraph, np.ndarray]:
    """
    Read a hypergraph file and its reference coloring.

    Without a coloring file the canonical equitable coloring is used.
    """
    H = load_hypergraph(path)
    if coloring_path:
        return H, load_coloring(coloring_path, H.n)
    logging.getLogger(__name__).info("No reference coloring given, using the canonical equitable coloring")
    return H, canonical_coloring(H.n)


class AnalyticCommands:
    """Handles threshold and rate-curve commands."""

    def __init__(self, config_manager):
        self.config = config_manager
        self.logger = logging.getLogger(__name__)

    def thresholds(self, k: int) -> CommandOutput:
        """
        Compute every density threshold at uniformity k.

        Args:
            k: Edge size
        """
        self.logger.info(f"Computing thresholds for k={k}")
        try:
            report = analytic.thresholds(k, r_tol=float(self.config.get('analytic.r_tolerance', 1e-8)))
        except Exception as e:
            self.logger.error(f"Threshold computation failed: {e}")
            raise
        for line in report.diagnostics:
            self.logger.warning(line)
        payload = report.to_dict()
        rows = [(key, value) for key, value in payload.items() if key not in ('k', 'diagnostics')]
        return CommandOutput(('quantity', 'value'), rows, payload)

    def rate_curve(self, k: int, r: float, points: int) -> CommandOutput:
        """
        Tabulate psi_{k,r} at `points` equally spaced interior points of (0, 1).

        Args:
            k: Edge size
            r: Density
            points: Number of rows
        """
        if points < 1:
            raise ParameterError(f"--points must be positive, got {points}")
        xs = np.arange(1, points + 1) / (points + 1)
        try:
            values = analytic.psi_values(k, r, xs)
            x_star, psi_star = analytic.maximize_psi(k, r, 0.0, 0.5)
        except Exception as e:
            self.logger.error(f"psi evaluation failed: {e}")
            raise
        rows = [(float(x), float(v)) for x, v in zip(xs, values)]
        payload = {
            'k': k,
            'r': r,
            'curve': [{'x': x, 'psi': v} for x, v in rows],
            'x_star': x_star,
            'psi_star': psi_star,
            'psi_half': analytic.first_moment_rate(k, r),
        }
        return CommandOutput(('x', 'psi'), rows, payload)

    def pair_curve(self, k: int, r: float, beta: float, points: int) -> CommandOutput:
        """
        Tabulate the pair rate g(alpha) of the critical-planted model.

        Args:
            k: Edge size
            r: Density
            beta: Criticality excess
            points: Number of rows
        """
        if points < 1:
            raise ParameterError(f"--points must be positive, got {points}")
        rates = RateFunctionSet(Params.critical(k, r, beta))
        alphas = np.arange(1, points + 1) / (points + 1)
        rows = []
        try:
            for alpha in alphas:
                q1, q2 = rates.q(float(alpha))
                rows.append((float(alpha), rates.g(float(alpha)), q1, q2))
        except Exception as e:
            self.logger.error(f"Pair rate evaluation failed: {e}")
            raise
        payload = {
            'k': k,
            'r': r,
            'beta': beta,
            'lambda': rates.params.lam,
            'first_moment_rate': rates.first_moment(),
            'curve': [dict(zip(('alpha', 'g', 'q1', 'q2'), row)) for row in rows],
        }
        return CommandOutput(('alpha', 'g', 'q1', 'q2'), rows, payload)


class ModelCommands:
    """Handles instance sampling."""

    def __init__(self, config_manager):
        self.config = config_manager
        self.logger = logging.getLogger(__name__)

    def sample(self, model: str, n: int, k: int, m: int, seed: int,
               beta: float = 0.0, m2: Optional[int] = None) -> Tuple[Hypergraph, Optional[np.ndarray]]:
        """
        Draw one instance from a random model.

        For planted_critical, m is the total edge count; m1 follows from
        beta as round((1+beta) k m/(2^(k-1)-1)) and m2 defaults to m - m1.
        For binomial_planted the edge probability is m over the bichromatic
        pool size, so m is the expected edge count.

        Returns:
            (hypergraph, planted coloring or None)
        """
        self.logger.info(f"Sampling {model} instance n={n} k={k} m={m} seed={seed}")
        rng = make_rng(seed)
        try:
            if model == 'uniform':
                return sample_uniform(n, m, k, rng), None
            if n % 2 == 0:
                sigma = random_equitable_coloring(n, rng)
            else:
                sigma = rng.integers(0, 2, size=n).astype(np.uint8)
            if model == 'planted':
                return sample_planted(n, m, k, sigma, rng), sigma
            if model == 'planted_critical':
                m1 = int(round(analytic.support_degree(k, m / n, beta) * n))
                rest = m - m1 if m2 is None else m2
                if rest < 0:
                    raise ParameterError(f"m={m} is smaller than the critical edge count m1={m1}")
                return sample_planted_critical(n, m1, rest, k, sigma, rng), sigma
            if model == 'binomial_planted':
                n1 = int(sigma.sum())
                pool = count_bichromatic_edges(n - n1, n1, k)
                p = min(m / pool, 1.0) if pool else 0.0
                return sample_binomial_planted(n, p, k, sigma, rng), sigma
        except Exception as e:
            self.logger.error(f"Sampling failed: {e}")
            raise
        raise ParameterError(f"unknown model {model!r}")


class ExactCommands:
    """Handles exhaustive counting commands."""

    def __init__(self, config_manager):
        self.config = config_manager
        self.logger = logging.getLogger(__name__)

    @property
    def cap(self) -> int:
        return self.config.enumeration_cap

    def count(self, H: Hypergraph, b_list: Sequence[float], workers: int = 1) -> CommandOutput:
        """
        Solution census of H: Z, Z_e, the violation histogram and Z_b.

        Args:
            H: Hypergraph
            b_list: Inverse temperatures
            workers: Threads for the enumeration sweep
        """
        self.logger.info(f"Counting colorings of n={H.n}, m={H.m}, k={H.k}")
        try:
            census = solution_census(H, b_list, cap=self.cap,
                                     chunk_bits=int(self.config.get('exact.chunk_bits', 20)),
                                     workers=workers)
        except Exception as e:
            self.logger.error(f"Solution census failed: {e}")
            raise
        return CommandOutput(('mu', 'count'), census.rows(), census.to_dict())

    def profile(self, H: Hypergraph, sigma: np.ndarray, alpha: float, beta: float, gamma: float,
                equitable_only: bool = False) -> CommandOutput:
        """
        Distance profile around sigma and the shattered/condensed verdict.

        Args:
            H: Hypergraph
            sigma: Reference coloring
            alpha: Cluster radius as a fraction of n
            beta: Outer edge of the empty window
            gamma: Exponential share threshold
            equitable_only: Restrict the profile to equitable solutions
        """
        try:
            report = distance_profile(H, sigma, equitable_only=equitable_only, cap=self.cap)
            verdict = geometry_verdict(H, sigma, alpha, beta, gamma, report=report, cap=self.cap)
        except Exception as e:
            self.logger.error(f"Distance profile failed: {e}")
            raise
        self.logger.info(f"Verdict at alpha={alpha}, beta={beta}, gamma={gamma}: {verdict.label}")
        payload = verdict.to_dict()
        payload.update({
            'n': H.n,
            'm': H.m,
            'k': H.k,
            'reference': format_coloring(report.reference),
            'equitable_only': equitable_only,
            'distance_profile': [int(c) for c in report.distance_profile],
        })
        return CommandOutput(('d', 'count'), report.rows(), payload)


class WhiteningCommands:
    """Handles whitening, core and residual census commands."""

    def __init__(self, config_manager):
        self.config = config_manager
        self.logger = logging.getLogger(__name__)

    def whiten(self, H: Hypergraph, sigma: np.ndarray, table: str = 'trace',
               audit_sizes: Sequence[int] = (), audit_samples: int = 0, seed: int = 0) -> CommandOutput:
        """
        Run the whitening process and report U with its census.

        Args:
            table: 'trace' for the round,vertex table, 'census' for the
                statistic,observed,predicted table
            audit_sizes: Set sizes for the expansion diagnostic
            audit_samples: Random sets per size
            seed: Seed of the expansion diagnostic
        """
        try:
            result = whiten(H, sigma)
            census = u_census(result, H, sigma, audit_sizes=audit_sizes,
                              audit_samples=audit_samples, rng=make_rng(seed))
        except Exception as e:
            self.logger.error(f"Whitening failed: {e}")
            raise
        for line in result.warnings:
            self.logger.warning(line)
        self.logger.info(f"Whitening finished after {len(result.rounds)} rounds, |U|={len(result.U)}")

        payload = {
            'n': H.n,
            'U': sorted(result.U),
            'S0': sorted(result.S0),
            'S1': sorted(result.S1),
            'rounds': [{'round': t, 'vertices': added} for t, added in result.rounds],
            'H_U': [{'edge': e, 'projection': list(proj)} for e, proj in result.H_U],
            'extra_edges': result.extra_edges,
            'census': [{'statistic': s, 'observed': o, 'predicted': p} for s, o, p in census.rows()],
            'lambda': census.lam,
        }
        if table == 'census':
            return CommandOutput(('statistic', 'observed', 'predicted'), census.rows(), payload)
        return CommandOutput(('round', 'vertex'), result.trace_rows(), payload)

    def core(self, H: Hypergraph, sigma: np.ndarray, l: int, with_attach: bool = False,
             theta: Optional[int] = None) -> CommandOutput:
        """
        Compute the core (and optionally its attachment closure and rigidity).

        Args:
            l: Core parameter; members support at least l/2 internal edges
            with_attach: Also run the attachment process
            theta: Check that the resulting set is rigid with this threshold
        """
        structure = support_structure(H, sigma)
        try:
            result = core(H, sigma, l=l, structure=structure)
            if with_attach:
                result.A = attach(H, sigma, result.C, structure=structure).A
            rigid = None
            if theta is not None:
                target = result.A if result.A is not None else result.C
                rigid = rigid_check(H, sigma, target, theta, cap=self.config.enumeration_cap)
        except Exception as e:
            self.logger.error(f"Core computation failed: {e}")
            raise
        self.logger.info(f"Core has {len(result.C)} of {H.n} vertices")

        rows = [(v, 'core') for v in sorted(result.C)]
        if result.A is not None:
            rows += [(v, 'attached') for v in sorted(result.A - result.C)]
        payload = {
            'n': H.n,
            'l': l,
            'core': sorted(result.C),
            'removed_trace': result.removed_trace,
            'attached': sorted(result.A) if result.A is not None else None,
            'theta': theta,
            'rigid': rigid,
        }
        return CommandOutput(('vertex', 'set'), rows, payload)

    def census(self, H: Hypergraph, sigma: np.ndarray, l: int, mode: str = 'projected',
               with_attach: bool = False) -> CommandOutput:
        """
        Residual component census outside the core, with the cluster-entropy bounds.

        Args:
            l: Core parameter
            mode: 'projected' or 'conditioned' residual constraints
            with_attach: Take the residual outside the attachment closure
        """
        structure = support_structure(H, sigma)
        try:
            result = core(H, sigma, l=l, structure=structure)
            fixed = attach(H, sigma, result.C, structure=structure).A if with_attach else result.C
            components = residual_census(H, sigma, fixed, mode=mode, cap=self.config.enumeration_cap)
            bounds = cluster_entropy_bounds(H, sigma)
        except Exception as e:
            self.logger.error(f"Residual census failed: {e}")
            raise
        if components.uncolored:
            self.logger.warning(f"{components.uncolored} components were too large to count")

        payload = components.to_dict()
        payload.update({
            'n': H.n,
            'l': l,
            'fixed_vertices': len(fixed),
            'critical_edges': classify_edges(H, sigma).critical,
            'cluster_bounds': {
                'upper': bounds.upper,
                'lower': bounds.lower,
                'S0': bounds.S0,
                'matching': bounds.matching,
                'exceptional': bounds.exceptional,
                'e2_prime': bounds.e2_prime,
                'e2_unblocked': bounds.e2_unblocked,
                'f2_seeds': bounds.f2_seeds,
            },
        })
        rows = [(repr(t.key), t.vertex_count, t.multiplicity, t.z) for t in components.components]
        return CommandOutput(('canonical_form', 'vertex_count', 'multiplicity', 'colorings'), rows, payload)


class ScanCommands:
    """Handles the Monte-Carlo scans."""

    def __init__(self, config_manager):
        self.config = config_manager
        self.logger = logging.getLogger(__name__)

    def _output(self, result: ScanResult, records: bool) -> CommandOutput:
        payload: Dict[str, Any] = {
            'curve': [dict(zip(CURVE_COLUMNS, row)) for row in result.curve],
            'extras': result.extras,
        }
        if records:
            payload['records'] = [record.to_dict() for record in result.records]
            rows = [row for record in result.records for row in record.to_rows()]
            return CommandOutput(RECORD_COLUMNS, rows, payload)
        return CommandOutput(CURVE_COLUMNS, result.curve, payload)

    def condensation(self, k: int, n: int, r_grid: List[float], trials: int, seed: int,
                     workers: int, gate_sigmas: float, time_budget: Optional[float],
                     records: bool = False) -> CommandOutput:
        """Quenched versus annealed free entropy on the uniform model."""
        try:
            result = condensation_scan(k, n, r_grid, trials, seed, workers=workers,
                                       cap=self.config.enumeration_cap, gate_sigmas=gate_sigmas,
                                       time_budget=time_budget)
        except Exception as e:
            self.logger.error(f"Condensation scan failed: {e}")
            raise
        if not result.extras['gates_passed']:
            self.logger.warning("At least one Jensen gate failed; see the gate rows")
        return self._output(result, records)

    def cluster(self, k: int, n: int, lambda_grid: List[float], trials: int, seed: int,
                workers: int, beta: float, m2: Optional[int], time_budget: Optional[float],
                records: bool = False) -> CommandOutput:
        """Local cluster entropy of the planted-critical model against the first moment."""
        try:
            result = cluster_entropy_scan(k, n, lambda_grid, trials, seed, beta=beta, m2=m2,
                                          workers=workers, time_budget=time_budget)
        except Exception as e:
            self.logger.error(f"Cluster scan failed: {e}")
            raise
        crossing = result.extras.get('crossing')
        if crossing:
            self.logger.info(f"Cluster curve crosses the first moment near lambda={crossing['root']:.6g}")
        return self._output(result, records)

    def degree_law(self, k: int, n: int, lambda_grid: List[float], trials: int, seed: int,
                   workers: int, time_budget: Optional[float], with_whitening: bool = False,
                   records: bool = False) -> CommandOutput:
        """Support-degree law, and optionally the whitening census, of the planted-critical model."""
        try:
            result = degree_law_scan(k, n, lambda_grid, trials, seed, workers=workers,
                                     time_budget=time_budget)
            if with_whitening:
                extra = u_size_scan(k, n, lambda_grid, trials, seed, workers=workers,
                                    time_budget=time_budget)
                result.curve = sorted(result.curve + extra.curve, key=lambda row: (row[0], row[1]))
                result.records = result.records + extra.records
        except Exception as e:
            self.logger.error(f"Degree-law scan failed: {e}")
            raise
        worst = max((abs(mean - ref) for _, key, mean, _, ref in result.curve
                     if key.startswith('degree_fraction_') and math.isfinite(ref)), default=0.0)
        self.logger.info(f"Largest deviation from the Poisson pmf: {worst:.3e}")
        return self._output(result, records)
