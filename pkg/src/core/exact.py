"""
Exhaustive small-instance computations.

Colorings of n <= cap vertices are handled as integers (bit v is the colour of
vertex v). Everything here counts solutions of a list of constraints; a
constraint is a vertex bitmask plus the forbidden patterns (all 0, all 1).
A k-uniform NAE edge forbids both patterns, so hypergraph colorings and the
conditioned residual components of `whitening` share one engine.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core.analytic import exact_first_moment
from src.core.errors import CapExceededError, ParameterError, TimeBudgetExceeded
from src.core.model import Hypergraph, as_coloring, sample_uniform, trial_rng, violations
from src.utils.helpers import mean_and_stderr

logger = logging.getLogger(__name__)

ENUMERATION_CAP = 30
CHUNK_BITS = 20
FRONTIER_LIMIT = 1 << 20


class Constraint(NamedTuple):
    mask: int
    forbid_zero: bool = True
    forbid_one: bool = True


def nae_constraints(H: Hypergraph) -> List[Constraint]:
    return [Constraint(mask) for mask in H.edge_masks()]


def check_cap(n: int, cap: int = ENUMERATION_CAP, what: str = "enumeration") -> None:
    if n > cap:
        raise CapExceededError(n, cap, what)


def coloring_code(sigma: np.ndarray) -> int:
    """Integer code of a coloring."""
    return sum(1 << v for v, bit in enumerate(sigma) if int(bit))


def codes_to_bits(codes: np.ndarray, n: int) -> np.ndarray:
    """(len(codes), n) 0/1 matrix of integer codes."""
    codes = np.asarray(codes, dtype=np.uint64)
    return ((codes[:, None] >> np.arange(n, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)


def popcount(codes: np.ndarray) -> np.ndarray:
    codes = np.ascontiguousarray(codes, dtype=np.uint64)
    return np.unpackbits(codes.view(np.uint8).reshape(-1, 8), axis=1).sum(axis=1, dtype=np.int64)


# ---------------------------------------------------------------------------
# frontier enumeration

class _Plan:
    """Constraints grouped by the vertex that closes them (their highest bit)."""

    def __init__(self, n: int, constraints: Sequence[Constraint]):
        self.n = n
        self.closing: List[List[Tuple[np.uint64, bool, bool]]] = [[] for _ in range(n)]
        last = -1
        for c in constraints:
            if c.mask <= 0 or c.mask >> n:
                raise ParameterError(f"constraint mask {c.mask:#x} does not fit {n} vertices")
            if not (c.forbid_zero or c.forbid_one):
                continue
            top = c.mask.bit_length() - 1
            self.closing[top].append((np.uint64(c.mask), c.forbid_zero, c.forbid_one))
            last = max(last, top)
        # vertices after `last` are unconstrained
        self.free_from = last + 1
        self.symmetric = all(c.forbid_zero and c.forbid_one for c in constraints)

    def filter(self, frontier: np.ndarray, v: int) -> np.ndarray:
        for mask, forbid_zero, forbid_one in self.closing[v]:
            hit = frontier & mask
            keep = np.ones(len(frontier), dtype=bool)
            if forbid_zero:
                keep &= hit != 0
            if forbid_one:
                keep &= hit != mask
            frontier = frontier[keep]
            if not len(frontier):
                break
        return frontier


def _check_deadline(deadline: Optional[float]) -> None:
    if deadline is not None and time.monotonic() > deadline:
        raise TimeBudgetExceeded("enumeration passed its deadline")


def _walk(plan: _Plan, frontier: np.ndarray, v: int, limit: int,
          deadline: Optional[float] = None) -> Iterator[Tuple[np.ndarray, int]]:
    """
    Depth-first extension of partial colorings of vertices < v.

    Yields (frontier, v) pairs where every assignment of vertices >= v
    completes each frontier entry to a solution. Raises TimeBudgetExceeded
    once time.monotonic() passes `deadline`.
    """
    stack = [(frontier, v)]
    while stack:
        frontier, v = stack.pop()
        while len(frontier) and v < plan.free_from:
            _check_deadline(deadline)
            if len(frontier) > limit:
                pieces = np.array_split(frontier, math.ceil(len(frontier) / limit))
                stack.extend((piece, v) for piece in reversed(pieces))
                frontier = frontier[:0]
                break
            bit = np.uint64(1 << v)
            frontier = plan.filter(np.concatenate([frontier, frontier | bit]), v)
            v += 1
        if len(frontier):
            yield frontier, max(v, plan.free_from)


def _start(plan: _Plan) -> Tuple[np.ndarray, int, int]:
    """Initial frontier; symmetric constraint sets fix vertex 0 to colour 0."""
    if plan.symmetric and plan.n >= 1:
        return plan.filter(np.zeros(1, dtype=np.uint64), 0), 1, 2
    return np.zeros(1, dtype=np.uint64), 0, 1


def _closing_order(n: int, constraints: Sequence[Constraint]) -> List[int]:
    """Greedy vertex order that lets constraints close early."""
    pending = [{v for v in range(n) if c.mask >> v & 1} for c in constraints]
    placed: set = set()
    order: List[int] = []
    while pending:
        best = min(range(len(pending)), key=lambda i: len(pending[i] - placed))
        for v in sorted(pending[best] - placed):
            placed.add(v)
            order.append(v)
        pending = [vs for vs in pending if not vs <= placed]
    order.extend(v for v in range(n) if v not in placed)
    return order


def _relabel(constraints: Sequence[Constraint], order: Sequence[int]) -> List[Constraint]:
    position = {v: i for i, v in enumerate(order)}
    out = []
    for c in constraints:
        mask = 0
        for v, i in position.items():
            if c.mask >> v & 1:
                mask |= 1 << i
        out.append(Constraint(mask, c.forbid_zero, c.forbid_one))
    return out


def count_colorings(n: int, constraints: Sequence[Constraint], cap: int = ENUMERATION_CAP,
                    limit: int = FRONTIER_LIMIT, deadline: Optional[float] = None) -> int:
    """Number of colorings of n vertices satisfying every constraint."""
    check_cap(n, cap, "count_colorings")
    _check_deadline(deadline)
    if n == 0:
        return 1
    constraints = _relabel(constraints, _closing_order(n, constraints))
    plan = _Plan(n, constraints)
    frontier, v, factor = _start(plan)
    total = 0
    for part, w in _walk(plan, frontier, v, limit, deadline):
        total += len(part) << (n - w)
    return total * factor


def _expand_free(frontier: np.ndarray, v: int, n: int, limit: int) -> Iterator[np.ndarray]:
    free = n - v
    if free <= 0:
        yield frontier
        return
    room = max(1, limit // max(len(frontier), 1))
    block = min(free, room.bit_length() - 1)
    low = np.arange(1 << block, dtype=np.uint64) << np.uint64(v)
    for hi in range(1 << (free - block)):
        base = np.uint64(hi << (v + block))
        yield (frontier[:, None] | (low[None, :] | base)).ravel()


def iter_solution_codes(n: int, constraints: Sequence[Constraint], cap: int = ENUMERATION_CAP,
                        limit: int = FRONTIER_LIMIT) -> Iterator[np.ndarray]:
    """Chunks of integer codes of every coloring satisfying the constraints."""
    check_cap(n, cap, "enumeration")
    plan = _Plan(n, constraints)
    frontier, v, factor = _start(plan)
    full = np.uint64((1 << n) - 1)
    for part, w in _walk(plan, frontier, v, limit):
        for chunk in _expand_free(part, w, n, limit):
            yield chunk
            if factor == 2:
                yield chunk ^ full


def iter_proper_colorings(H: Hypergraph, cap: int = ENUMERATION_CAP,
                          limit: int = FRONTIER_LIMIT) -> Iterator[np.ndarray]:
    """Proper colorings of H as (rows, n) 0/1 arrays, in bounded-memory chunks."""
    for codes in iter_solution_codes(H.n, nae_constraints(H), cap, limit):
        yield codes_to_bits(codes, H.n)


# ---------------------------------------------------------------------------
# solution census

@dataclass
class SolutionCensus:
    """
    Exact solution statistics of one hypergraph.

    Attributes:
        Z: number of proper 2-colorings
        Z_e: number of equitable proper 2-colorings
        S_mu: histogram mu -> #{sigma : w(sigma) = mu}
        Z_b: inverse temperature b -> sum_sigma exp(-b w(sigma))
    """

    n: int
    Z: int
    Z_e: int
    S_mu: Dict[int, int]
    Z_b: Dict[float, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'Z': self.Z,
            'Z_e': self.Z_e,
            'S_mu': {str(mu): count for mu, count in sorted(self.S_mu.items())},
            'Z_b': {repr(float(b)): value for b, value in sorted(self.Z_b.items())},
        }

    def rows(self) -> List[Tuple[int, int]]:
        """`mu,count` table."""
        return sorted(self.S_mu.items())


def partition_function(S_mu: Dict[int, int], b: float) -> float:
    """Z_b from the violation histogram, with compensated summation."""
    if b < 0:
        raise ParameterError(f"inverse temperature must be >= 0, got {b}")
    return math.fsum(count * math.exp(-b * mu) for mu, count in S_mu.items())


def _census_range(masks: np.ndarray, n: int, start: int, stop: int) -> Tuple[np.ndarray, int]:
    """Histogram of w over codes 2x for x in [start, stop), and the equitable solution count."""
    codes = np.arange(start, stop, dtype=np.uint64) << np.uint64(1)
    w = np.zeros(len(codes), dtype=np.int64)
    for mask in masks:
        hit = codes & mask
        w += (hit == 0) | (hit == mask)
    hist = np.bincount(w, minlength=len(masks) + 1)
    equitable = 0
    if n % 2 == 0:
        equitable = int(np.count_nonzero((w == 0) & (popcount(codes) == n // 2)))
    return hist, equitable


def solution_census(H: Hypergraph, b_list: Sequence[float] = (), cap: int = ENUMERATION_CAP,
                    chunk_bits: int = CHUNK_BITS, workers: int = 1) -> SolutionCensus:
    """
    Z, Z_e, S_mu and Z_b by one sweep over the 2^(n-1) colorings with
    vertex 0 coloured 0; counts are doubled since w(1 - sigma) = w(sigma).
    """
    check_cap(H.n, cap, "solution_census")
    n = H.n
    masks = np.array(H.edge_masks(), dtype=np.uint64)
    half = 1 << (n - 1)
    step = 1 << chunk_bits
    ranges = [(start, min(start + step, half)) for start in range(0, half, step)]

    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda rg: _census_range(masks, n, *rg), ranges))
    else:
        parts = [_census_range(masks, n, *rg) for rg in ranges]

    hist = np.zeros(H.m + 1, dtype=np.int64)
    equitable = 0
    for part_hist, part_equitable in parts:
        hist += part_hist
        equitable += part_equitable

    S_mu = {mu: 2 * int(count) for mu, count in enumerate(hist) if count}
    census = SolutionCensus(n=n, Z=S_mu.get(0, 0), Z_e=2 * equitable, S_mu=S_mu)
    for b in b_list:
        census.Z_b[float(b)] = partition_function(S_mu, float(b))
    assert sum(S_mu.values()) == 1 << n, "violation histogram must cover every coloring"
    return census


def naive_census(H: Hypergraph, b_list: Sequence[float] = ()) -> SolutionCensus:
    """Per-coloring loop over all 2^n colorings; the reference for solution_census."""
    n = H.n
    S_mu: Dict[int, int] = {}
    equitable = 0
    for code in range(1 << n):
        sigma = np.array([(code >> v) & 1 for v in range(n)], dtype=np.uint8)
        w = violations(H, sigma)
        S_mu[w] = S_mu.get(w, 0) + 1
        if w == 0 and 2 * int(sigma.sum()) == n:
            equitable += 1
    census = SolutionCensus(n=n, Z=S_mu.get(0, 0), Z_e=equitable, S_mu=S_mu)
    for b in b_list:
        census.Z_b[float(b)] = partition_function(S_mu, float(b))
    return census


def count_proper_colorings(H: Hypergraph, cap: int = ENUMERATION_CAP,
                           deadline: Optional[float] = None) -> int:
    return count_colorings(H.n, nae_constraints(H), cap, deadline=deadline)


# ---------------------------------------------------------------------------
# cluster geometry

@dataclass
class ClusterReport:
    """Distance profile of the solutions around a reference coloring."""

    reference: np.ndarray
    distance_profile: np.ndarray
    equitable_only: bool = False

    @property
    def n(self) -> int:
        return len(self.reference)

    @property
    def total(self) -> int:
        return int(self.distance_profile.sum())

    def local_cluster_size(self, alpha: float) -> int:
        """|C_alpha(sigma)|: solutions within distance alpha*n."""
        return int(self.distance_profile[:math.floor(alpha * self.n + 1e-9) + 1].sum())

    def window_empty(self, alpha: float, beta: float) -> bool:
        """No solution at distance strictly between alpha*n and beta*n."""
        n = self.n
        inside = [d for d in range(n + 1) if alpha * n < d < beta * n]
        return all(self.distance_profile[d] == 0 for d in inside)

    def rows(self) -> List[Tuple[int, int]]:
        """`d,count` table."""
        return [(d, int(c)) for d, c in enumerate(self.distance_profile)]


def distance_profile(H: Hypergraph, sigma: np.ndarray, equitable_only: bool = False,
                     cap: int = ENUMERATION_CAP) -> ClusterReport:
    """Exact Z(d) for d = 0..n around sigma."""
    sigma = as_coloring(sigma, H.n)
    check_cap(H.n, cap, "distance_profile")
    if violations(H, sigma):
        logger.warning(f"reference coloring violates {violations(H, sigma)} edges; Z(0) will be 0")
    ref = np.uint64(coloring_code(sigma))
    profile = np.zeros(H.n + 1, dtype=np.int64)
    for codes in iter_solution_codes(H.n, nae_constraints(H), cap):
        if equitable_only:
            codes = codes[popcount(codes) == H.n // 2] if H.n % 2 == 0 else codes[:0]
        profile += np.bincount(popcount(codes ^ ref), minlength=H.n + 1)
    return ClusterReport(reference=sigma, distance_profile=profile, equitable_only=equitable_only)


@dataclass
class GeometryVerdict:
    """
    Shattered / condensed verdict for one reference coloring.

    Conditions: window = no solution at distance in (alpha n, beta n);
    small = |C_alpha| <= exp(-gamma n) Z; large = |C_alpha| >= exp(-gamma n) Z.
    """

    label: str
    alpha: float
    beta: float
    gamma: float
    gap_found: bool
    local_cluster_size: int
    Z: int
    cluster_small: bool
    cluster_large: bool

    def to_dict(self) -> dict:
        return {
            'verdict': self.label,
            'alpha': self.alpha,
            'beta': self.beta,
            'gamma': self.gamma,
            'gap_found': self.gap_found,
            'local_cluster_size': self.local_cluster_size,
            'Z': self.Z,
            'cluster_small': self.cluster_small,
            'cluster_large': self.cluster_large,
        }


def geometry_verdict(H: Hypergraph, sigma: np.ndarray, alpha: float, beta: float, gamma: float,
                     report: Optional[ClusterReport] = None, cap: int = ENUMERATION_CAP) -> GeometryVerdict:
    """Classify the cluster of sigma as shattered, condensed, tie or neither."""
    if not 0.0 < alpha < beta <= 0.5:
        raise ParameterError(f"need 0 < alpha < beta <= 1/2, got alpha={alpha}, beta={beta}")
    if gamma < 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    if report is None:
        report = distance_profile(H, sigma, cap=cap)
    n = report.n
    size = report.local_cluster_size(alpha)
    Z = report.total
    gap = report.window_empty(alpha, beta)

    if size == 0 or Z == 0:
        small, large = size <= Z, size >= Z and Z == 0
    else:
        log_size = math.log(size)
        log_bound = math.log(Z) - gamma * n
        small = log_size <= log_bound
        large = log_size >= log_bound

    if gap and small and large:
        label = 'tie'
    elif gap and small:
        label = 'shattered'
    elif gap and large:
        label = 'condensed'
    else:
        label = 'neither'
    return GeometryVerdict(label, alpha, beta, gamma, gap, size, Z, small, large)


# ---------------------------------------------------------------------------
# criticality counts and moments

def critical_target(k: int, m: int, beta: float) -> int:
    """round((1+beta) k m/(2^(k-1)-1)), halves rounded up."""
    return math.floor((1.0 + beta) * k * m / (2.0 ** (k - 1) - 1.0) + 0.5)


def count_critical_colorings(H: Hypergraph, beta_target: float, cap: int = ENUMERATION_CAP,
                             target: Optional[int] = None) -> int:
    """Equitable proper colorings with exactly `critical_target` critical edges."""
    if H.n % 2:
        raise ParameterError(f"equitable colorings need even n, got {H.n}")
    if target is None:
        target = critical_target(H.k, H.m, beta_target)
    count = 0
    for codes in iter_solution_codes(H.n, nae_constraints(H), cap, limit=1 << 16):
        codes = codes[popcount(codes) == H.n // 2]
        if not len(codes):
            continue
        if H.m == 0:
            count += len(codes) if target == 0 else 0
            continue
        ones = codes_to_bits(codes, H.n)[:, H.edges].sum(axis=2)
        critical = np.count_nonzero((ones == 1) | (ones == H.k - 1), axis=1)
        count += int(np.count_nonzero(critical == target))
    return count


class MomentEstimate(NamedTuple):
    mean: float
    stderr: float
    mean_square: float
    exact_mean: float


def mean_Z_over_trials(n: int, m: int, k: int, trials: int, seed: int,
                       cap: int = ENUMERATION_CAP) -> MomentEstimate:
    """Monte-Carlo mean of the exact Z over i.i.d. samples of H_k(n, m)."""
    check_cap(n, cap, "mean_Z_over_trials")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    values = []
    for index in range(trials):
        H = sample_uniform(n, m, k, trial_rng(seed, index))
        values.append(float(count_proper_colorings(H, cap)))
    mean, stderr = mean_and_stderr(values)
    mean_square = math.fsum(v * v for v in values) / trials
    return MomentEstimate(mean, stderr, mean_square, exact_first_moment(n, m, k))
