"""
Monte-Carlo orchestration and the desk-scale scans.

A batch is described by an ExperimentConfig; run_trials executes its trials
on a thread pool and emits TrialRecords in trial order; aggregate folds the
records into curve rows `(r_or_lambda, statistic, mean, stderr,
analytic_value)`.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy import stats

from src.core import analytic
from src.core.errors import ParameterError, TimeBudgetExceeded
from src.core.exact import ENUMERATION_CAP, check_cap, count_proper_colorings
from src.core.model import (
    Hypergraph,
    canonical_coloring,
    classify_edges,
    count_bichromatic_edges,
    make_rng,
    sample_binomial_planted,
    sample_planted,
    sample_planted_critical,
    sample_uniform,
)
from src.core.whitening import cluster_entropy_bounds, u_census, whiten
from src.utils.helpers import hash64, mean_and_stderr
from src.utils.logging import log_scan_event, log_trial_event

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)

DEGREE_LAW_MAX = 10

STATISTICS: Dict[str, str] = {
    'Z': 'number of proper 2-colorings',
    'Z_squared': 'square of Z, for second-moment checks',
    'ln_1pZ_per_n': '(1/n) ln(1 + Z)',
    'U_fraction': '|U|/n after whitening',
    'S0_fraction': 'support-free vertices per n',
    'S1_fraction': '|S1|/n',
    'extra_edges_per_n': 'H_U edges outside the S1 stars, per n',
    'S0_entropy': '(|S0|/n) ln 2',
    'cluster_upper': 'upper estimate of (1/n) ln |C(sigma)|',
    'cluster_lower': 'lower estimate of (1/n) ln |C(sigma)|',
    'critical_per_n': 'critical edges per n (observed lambda)',
}
STATISTICS.update({f'degree_fraction_{l}': f'fraction of vertices supporting exactly {l} edges'
                   for l in range(DEGREE_LAW_MAX + 1)})

KINDS = ('degree_law', 'u_size', 'condensation_scan', 'cluster_entropy_scan', 'moment_check')
MODELS = ('uniform', 'planted', 'planted_critical', 'binomial_planted')


class ExperimentConfig(BaseModel):
    """A batch of trials over a grid of densities (r, m or lambda)."""

    kind: Literal['degree_law', 'u_size', 'condensation_scan', 'cluster_entropy_scan', 'moment_check']
    k: int = Field(ge=3)
    n: int = Field(ge=1)
    trials: int = Field(ge=1)
    master_seed: int = 20240601
    grid: List[float]
    grid_kind: Literal['r', 'm', 'lambda'] = 'r'
    model: Literal['uniform', 'planted', 'planted_critical', 'binomial_planted'] = 'uniform'
    beta: float = 0.0
    alpha: float = 0.1
    geometry_beta: float = 0.4
    gamma: float = 0.0
    m2: Optional[int] = None
    core_l: int = 10
    workers: int = Field(default=1, ge=1)
    time_budget: Optional[float] = None
    gate_sigmas: float = 3.0
    cap: int = ENUMERATION_CAP

    @field_validator('grid')
    @classmethod
    def validate_grid(cls, v):
        if not v:
            raise ValueError('grid must not be empty')
        if any(not math.isfinite(x) or x < 0 for x in v):
            raise ValueError('grid values must be finite and >= 0')
        return v

    @field_validator('beta')
    @classmethod
    def validate_beta(cls, v):
        if not abs(v) < 1:
            raise ValueError('beta must satisfy |beta| < 1')
        return v

    @model_validator(mode='after')
    def validate_model(self):
        if self.k > self.n:
            raise ValueError(f'k={self.k} exceeds n={self.n}')
        equitable = self.model == 'planted_critical' or self.kind in ('degree_law', 'u_size', 'cluster_entropy_scan')
        if equitable and self.n % 2:
            raise ValueError('equitable colorings need even n')
        if self.kind in ('condensation_scan', 'moment_check') and self.model != 'uniform':
            raise ValueError(f'{self.kind} runs on the uniform model')
        if self.kind in ('degree_law', 'u_size', 'cluster_entropy_scan') and self.model != 'planted_critical':
            raise ValueError(f'{self.kind} runs on the planted_critical model')
        return self

    def resolved(self) -> dict:
        """Flat configuration echoed into output headers."""
        return self.model_dump(exclude={'workers', 'time_budget'})


def build_config(**kwargs) -> ExperimentConfig:
    """ExperimentConfig from keyword arguments; validation errors become ParameterError."""
    try:
        return ExperimentConfig(**kwargs)
    except ValueError as e:
        raise ParameterError(f"invalid experiment configuration: {e}") from e


@dataclass
class TrialRecord:
    """One trial: its grid point, seed and named statistics."""

    kind: str
    grid_value: float
    index: int
    seed: int
    statistics: Dict[str, float] = field(default_factory=dict)
    status: str = 'ok'
    error: Optional[str] = None
    runtime: float = 0.0

    def to_rows(self) -> List[Tuple]:
        """Long-format rows (grid value, trial, seed, status, statistic, value); runtime excluded."""
        if not self.statistics:
            return [(self.grid_value, self.index, self.seed, self.status, '', float('nan'))]
        return [(self.grid_value, self.index, self.seed, self.status, key, self.statistics[key])
                for key in sorted(self.statistics)]

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'grid_value': self.grid_value,
            'index': self.index,
            'seed': self.seed,
            'status': self.status,
            'error': self.error,
            'statistics': dict(sorted(self.statistics.items())),
        }


RECORD_COLUMNS = ('r_or_lambda', 'trial', 'seed', 'status', 'statistic', 'value')
CURVE_COLUMNS = ('r_or_lambda', 'statistic', 'mean', 'stderr', 'analytic_value')


# ---------------------------------------------------------------------------
# instances

def edge_counts(config: ExperimentConfig, value: float) -> Tuple[int, int, float]:
    """
    (m1, m2, lambda) of a planted-critical grid point.

    Grid values are lambda directly, or r with lambda = (1+beta)kr/(2^(k-1)-1).
    m2 defaults to rn - m1 for the cluster scan and to 0 where only the
    critical edges matter.
    """
    k, n = config.k, config.n
    if config.grid_kind == 'lambda':
        lam = value
        r = analytic.density_for_degree(k, lam, config.beta)
    elif config.grid_kind == 'r':
        r = value
        lam = analytic.support_degree(k, r, config.beta)
    else:
        raise ParameterError("planted-critical grids are given as r or lambda")
    m1 = int(round(lam * n))
    if config.m2 is not None:
        m2 = config.m2
    elif config.kind == 'cluster_entropy_scan':
        m2 = max(int(round(r * n)) - m1, 0)
    else:
        m2 = 0
    return m1, m2, lam


def edge_count(config: ExperimentConfig, value: float) -> int:
    return int(round(value)) if config.grid_kind == 'm' else int(round(value * config.n))


def sample_instance(config: ExperimentConfig, value: float,
                    rng: np.random.Generator) -> Tuple[Hypergraph, Optional[np.ndarray]]:
    """Draw the instance of one trial from the configured model."""
    k, n = config.k, config.n
    if config.model == 'uniform':
        return sample_uniform(n, edge_count(config, value), k, rng), None
    sigma = canonical_coloring(n) if n % 2 == 0 else (np.arange(n) >= n // 2).astype(np.uint8)
    if config.model == 'planted':
        return sample_planted(n, edge_count(config, value), k, sigma, rng), sigma
    if config.model == 'planted_critical':
        m1, m2, _ = edge_counts(config, value)
        return sample_planted_critical(n, m1, m2, k, sigma, rng), sigma
    n1 = int(sigma.sum())
    pool = count_bichromatic_edges(n - n1, n1, k)
    p = min(edge_count(config, value) / pool, 1.0) if pool else 0.0
    return sample_binomial_planted(n, p, k, sigma, rng), sigma


# ---------------------------------------------------------------------------
# per-trial statistics

def _moment_statistics(config: ExperimentConfig, H: Hypergraph, sigma, deadline=None) -> Dict[str, float]:
    Z = count_proper_colorings(H, config.cap, deadline)
    return {'Z': float(Z), 'Z_squared': float(Z) ** 2, 'ln_1pZ_per_n': math.log1p(Z) / config.n}


def _condensation_statistics(config: ExperimentConfig, H: Hypergraph, sigma, deadline=None) -> Dict[str, float]:
    Z = count_proper_colorings(H, config.cap, deadline)
    return {'Z': float(Z), 'ln_1pZ_per_n': math.log1p(Z) / config.n}


def _degree_statistics(config: ExperimentConfig, H: Hypergraph, sigma, deadline=None) -> Dict[str, float]:
    degrees = classify_edges(H, sigma).degrees
    counts = np.bincount(np.minimum(degrees, DEGREE_LAW_MAX + 1), minlength=DEGREE_LAW_MAX + 2)
    out = {f'degree_fraction_{l}': counts[l] / config.n for l in range(DEGREE_LAW_MAX + 1)}
    out['critical_per_n'] = float(degrees.sum()) / config.n
    return out


def _u_statistics(config: ExperimentConfig, H: Hypergraph, sigma, deadline=None) -> Dict[str, float]:
    census = u_census(whiten(H, sigma), H, sigma)
    n = config.n
    return {
        'U_fraction': census.U / n,
        'S0_fraction': census.S0 / n,
        'S1_fraction': census.S1 / n,
        'extra_edges_per_n': census.extra_edges / n,
    }


def _cluster_statistics(config: ExperimentConfig, H: Hypergraph, sigma, deadline=None) -> Dict[str, float]:
    result = whiten(H, sigma)
    bounds = cluster_entropy_bounds(H, sigma, result)
    return {
        'S0_entropy': len(result.S0) / config.n * LN2,
        'cluster_upper': bounds.upper,
        'cluster_lower': bounds.lower,
    }


TRIAL_STATISTICS: Dict[str, Callable] = {
    'moment_check': _moment_statistics,
    'condensation_scan': _condensation_statistics,
    'degree_law': _degree_statistics,
    'u_size': _u_statistics,
    'cluster_entropy_scan': _cluster_statistics,
}


def run_trial(config: ExperimentConfig, value: float, index: int) -> TrialRecord:
    """
    Run one trial; failures are recorded, never raised.

    Exact enumerations stop at the time budget and leave the trial
    `timed_out` with no statistics; other statistics are marked `timed_out`
    when they finish late.
    """
    seed = hash64(config.master_seed, index)
    record = TrialRecord(kind=config.kind, grid_value=value, index=index, seed=seed)
    start = time.perf_counter()
    deadline = None if config.time_budget is None else time.monotonic() + config.time_budget
    try:
        H, sigma = sample_instance(config, value, make_rng(seed))
        record.statistics = TRIAL_STATISTICS[config.kind](config, H, sigma, deadline)
    except TimeBudgetExceeded:
        record.status = 'timed_out'
        logger.warning(f"Trial {index} at {value:g} stopped after its {config.time_budget:g}s budget")
    except Exception as e:
        record.status = 'error'
        record.error = f"{type(e).__name__}: {e}"
        logger.error(f"Trial {index} at {value:g} failed: {record.error}")
    assert set(record.statistics) <= set(STATISTICS), "unpublished statistic key"
    record.runtime = time.perf_counter() - start
    if record.status == 'ok' and config.time_budget is not None and record.runtime > config.time_budget:
        record.status = 'timed_out'
    log_trial_event(logger, config.kind, index, seed, record.status, record.runtime)
    return record


def run_trials(config: ExperimentConfig,
               sink: Optional[Callable[[TrialRecord], None]] = None) -> List[TrialRecord]:
    """
    Every trial of the batch, in trial-index order.

    Trial i (numbered across the whole grid) uses seed hash64(master_seed, i).
    Records reach `sink` one by one, in the same order.
    """
    if config.kind in ('condensation_scan', 'moment_check'):
        check_cap(config.n, config.cap, config.kind)
    jobs = [(value, point * config.trials + t)
            for point, value in enumerate(config.grid) for t in range(config.trials)]
    logger.info(f"Running {len(jobs)} {config.kind} trials (k={config.k}, n={config.n}, "
                f"workers={config.workers})")

    records: List[TrialRecord] = []

    def emit(record: TrialRecord) -> None:
        records.append(record)
        if sink is not None:
            sink(record)
        if (record.index + 1) % config.trials == 0:
            log_scan_event(logger, config.kind, record.grid_value)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for record in pool.map(lambda job: run_trial(config, *job), jobs):
                emit(record)
    else:
        for value, index in jobs:
            emit(run_trial(config, value, index))

    failed = sum(1 for r in records if r.status != 'ok')
    if failed:
        logger.warning(f"{failed} of {len(records)} trials did not finish cleanly")
    return records


# ---------------------------------------------------------------------------
# aggregation

AnalyticFn = Callable[[str, float], float]


def aggregate(records: Iterable[TrialRecord],
              analytic_value: Optional[AnalyticFn] = None) -> List[Tuple[float, str, float, float, float]]:
    """
    Fold records into curve rows (r_or_lambda, statistic, mean, stderr, analytic_value).

    Only records with status 'ok' contribute. The fold does not depend on
    record order.
    """
    groups: Dict[Tuple[float, str], List[float]] = {}
    for record in records:
        if record.status != 'ok':
            continue
        for key, value in record.statistics.items():
            groups.setdefault((record.grid_value, key), []).append(value)
    rows = []
    for (grid_value, key) in sorted(groups):
        values = sorted(groups[(grid_value, key)])
        mean, stderr = mean_and_stderr(values)
        reference = analytic_value(key, grid_value) if analytic_value else float('nan')
        rows.append((grid_value, key, mean, stderr, reference))
    return rows


@dataclass
class ScanResult:
    """Records, curve rows and scan-level extras."""

    config: ExperimentConfig
    records: List[TrialRecord]
    curve: List[Tuple[float, str, float, float, float]]
    extras: Dict[str, object] = field(default_factory=dict)

    def rows_for(self, statistic: str) -> List[Tuple[float, str, float, float, float]]:
        return [row for row in self.curve if row[1] == statistic]


# ---------------------------------------------------------------------------
# scans

def moment_check(k: int, n: int, m_grid: List[float], trials: int, seed: int,
                 workers: int = 1, cap: int = ENUMERATION_CAP) -> ScanResult:
    """Mean exact Z and Z^2 over H_k(n, m) against the exact first moment."""
    config = build_config(kind='moment_check', k=k, n=n, trials=trials, master_seed=seed,
                          grid=m_grid, grid_kind='m', workers=workers, cap=cap)
    records = run_trials(config)

    def reference(key: str, m: float) -> float:
        if key == 'Z':
            return analytic.exact_first_moment(n, int(round(m)), k)
        return float('nan')

    return ScanResult(config, records, aggregate(records, reference))


def condensation_scan(k: int, n: int, r_grid: List[float], trials: int, seed: int,
                      workers: int = 1, cap: int = ENUMERATION_CAP, gate_sigmas: float = 3.0,
                      time_budget: Optional[float] = None) -> ScanResult:
    """
    Quenched versus annealed free entropy over a density grid.

    Per r (m = round(rn)): mean of (1/n) ln(1+Z), the Jensen bound
    (1/n) ln(1+E[Z]) from the exact first moment, gap = bound - mean, and a
    gate flag (gap >= -gate_sigmas * stderr). Threshold reference lines for k
    are emitted at every grid point.
    """
    config = build_config(kind='condensation_scan', k=k, n=n, trials=trials, master_seed=seed,
                          grid=r_grid, grid_kind='r', workers=workers, cap=cap,
                          gate_sigmas=gate_sigmas, time_budget=time_budget)
    records = run_trials(config)
    report = analytic.thresholds(k)
    references = {'r_second': report.r_second, 'r_cond': report.r_cond, 'r_first': report.r_first_exact}

    curve = []
    gates = {}
    for r, key, mean, stderr, _ in aggregate(records):
        if key != 'ln_1pZ_per_n':
            curve.append((r, key, mean, stderr, float('nan')))
            continue
        m = int(round(r * n))
        expected = analytic.exact_first_moment(n, m, k)
        log_expected = analytic.log_exact_first_moment(n, m, k)
        bound = math.log1p(expected) / n if math.isfinite(expected) else log_expected / n
        gap = bound - mean
        passed = gap >= -gate_sigmas * stderr
        gates[r] = passed
        curve.append((r, 'ln_1pZ_per_n', mean, stderr, bound))
        curve.append((r, 'gap', gap, stderr, 0.0))
        curve.append((r, 'gate', 1.0 if passed else 0.0, 0.0, 1.0))
        curve.append((r, 'ln_EZ_per_n', log_expected / n, 0.0, analytic.first_moment_rate(k, r)))
        for name, value in references.items():
            curve.append((r, name, value, 0.0, value))
        if not passed:
            logger.warning(f"Jensen gate failed at r={r:g}: gap {gap:.3e} below -{gate_sigmas}*{stderr:.3e}")
    curve.sort(key=lambda row: (row[0], row[1]))
    extras = {'thresholds': report.to_dict(), 'gates_passed': all(gates.values())}
    return ScanResult(config, records, curve, extras)


def cluster_entropy_scan(k: int, n: int, lambda_grid: List[float], trials: int, seed: int,
                         beta: float = 0.0, m2: Optional[int] = None, workers: int = 1,
                         time_budget: Optional[float] = None) -> ScanResult:
    """
    Local cluster entropy of the planted-critical model over a lambda grid,
    next to e^-lambda ln 2, the cluster curve and the first-moment rate at
    r(lambda); extras carry the analytic crossing of the last two.
    """
    config = build_config(kind='cluster_entropy_scan', k=k, n=n, trials=trials, master_seed=seed,
                          grid=lambda_grid, grid_kind='lambda', model='planted_critical',
                          beta=beta, m2=m2, workers=workers, time_budget=time_budget)
    records = run_trials(config)

    def reference(key: str, lam: float) -> float:
        if key == 'S0_entropy':
            return math.exp(-lam) * LN2
        if key == 'cluster_upper':
            return analytic.local_cluster_rate(k, lam) + 7.0 ** (-k)
        if key == 'cluster_lower':
            return analytic.local_cluster_rate(k, lam)
        return float('nan')

    curve = aggregate(records, reference)
    for lam in sorted(set(lambda_grid)):
        rate = analytic.first_moment_rate(k, analytic.density_for_degree(k, lam, beta))
        curve.append((lam, 'first_moment_rate', rate, 0.0, rate))
    curve.sort(key=lambda row: (row[0], row[1]))

    crossing = analytic.cluster_crossing(k, lambda_grid) if len(lambda_grid) > 1 else None
    extras = {
        'crossing': crossing._asdict() if crossing else None,
        'lambda_at_r_cond': k * (2.0 ** (k - 1) * LN2 - LN2) / (2.0 ** (k - 1) - 1.0),
    }
    if crossing is None:
        logger.info("Cluster curve does not cross the first-moment curve inside the grid")
    return ScanResult(config, records, curve, extras)


def degree_law_scan(k: int, n: int, lambda_grid: List[float], trials: int, seed: int,
                    workers: int = 1, time_budget: Optional[float] = None) -> ScanResult:
    """Support-degree histogram of the planted-critical model against Poisson(lambda)."""
    config = build_config(kind='degree_law', k=k, n=n, trials=trials, master_seed=seed,
                          grid=lambda_grid, grid_kind='lambda', model='planted_critical',
                          m2=0, workers=workers, time_budget=time_budget)
    records = run_trials(config)

    def reference(key: str, lam: float) -> float:
        if key.startswith('degree_fraction_'):
            return float(stats.poisson.pmf(int(key.rsplit('_', 1)[1]), lam))
        if key == 'critical_per_n':
            return lam
        return float('nan')

    return ScanResult(config, records, aggregate(records, reference))


def u_size_scan(k: int, n: int, lambda_grid: List[float], trials: int, seed: int,
                workers: int = 1, time_budget: Optional[float] = None) -> ScanResult:
    """Whitening census of the planted-critical model against its Poisson predictions."""
    config = build_config(kind='u_size', k=k, n=n, trials=trials, master_seed=seed,
                          grid=lambda_grid, grid_kind='lambda', model='planted_critical',
                          m2=0, workers=workers, time_budget=time_budget)
    records = run_trials(config)

    def reference(key: str, lam: float) -> float:
        s0 = math.exp(-lam)
        s1 = lam * (k - 1) * math.exp(-2.0 * lam)
        return {'U_fraction': s0 + s1, 'S0_fraction': s0, 'S1_fraction': s1}.get(key, float('nan'))

    return ScanResult(config, records, aggregate(records, reference))


SCANS = {
    'moment_check': moment_check,
    'condensation_scan': condensation_scan,
    'cluster_entropy_scan': cluster_entropy_scan,
    'degree_law': degree_law_scan,
    'u_size': u_size_scan,
}
