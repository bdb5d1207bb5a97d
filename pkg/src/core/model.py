"""
Hypergraphs, colorings and the random models.

Four samplers: the uniform model H_k(n, m), the planted model H_k(n, m, sigma),
the planted-critical model H_k(n, m1, m2, sigma) and the binomial planted
model H_k(n, p, sigma). All samplers are pure functions of their arguments and
a numpy Generator; a Hypergraph is immutable once built.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from src.core.errors import ParameterError
from src.utils.helpers import hash64

logger = logging.getLogger(__name__)

# rejection sampling gives up after this many draws per requested edge
DRAW_CAP_FACTOR = 1_000_000

# binomial planted model enumerates candidates exactly up to this many k-subsets
EXACT_BINOMIAL_LIMIT = 2_000_000

MONOCHROMATIC = 0
CRITICAL = 1
OTHER_BICHROMATIC = 2

LABEL_NAMES = {
    MONOCHROMATIC: 'monochromatic',
    CRITICAL: 'critical',
    OTHER_BICHROMATIC: 'other_bichromatic',
}


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator; the only source of randomness for the samplers."""
    return np.random.default_rng(seed & ((1 << 64) - 1))


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    """Generator of trial `index` under a master seed."""
    return make_rng(hash64(master_seed, index))


@dataclass(frozen=True, eq=False)
class Hypergraph:
    """
    A k-uniform hypergraph on vertices 0..n-1.

    `edges` is an (m, k) integer array whose rows are strictly increasing
    and sorted lexicographically; the array is read-only.
    """

    n: int
    k: int
    edges: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"vertex count must be positive, got {self.n}")
        if self.k < 2 or self.k > self.n:
            raise ParameterError(f"uniformity must satisfy 2 <= k <= n, got k={self.k}, n={self.n}")
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, self.k)
        edges = np.sort(edges, axis=1)
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n:
                raise ParameterError(f"edge vertex out of range [0, {self.n})")
            if np.any(np.diff(edges, axis=1) == 0):
                raise ParameterError("every edge must have k distinct vertices")
            edges = edges[np.lexsort(edges.T[::-1])]
            if len(edges) > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
                raise ParameterError("edges must be pairwise distinct")
        edges.setflags(write=False)
        object.__setattr__(self, 'edges', edges)

    @classmethod
    def from_edges(cls, n: int, k: int, edges: Iterable[Sequence[int]]) -> 'Hypergraph':
        rows = [tuple(e) for e in edges]
        for e in rows:
            if len(e) != k:
                raise ParameterError(f"edge {e} does not have exactly k={k} vertices")
        return cls(n=n, k=k, edges=np.array(rows, dtype=np.int64).reshape(-1, k))

    @classmethod
    def empty(cls, n: int, k: int) -> 'Hypergraph':
        return cls(n=n, k=k, edges=np.zeros((0, k), dtype=np.int64))

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    def edge_list(self) -> List[Tuple[int, ...]]:
        return [tuple(int(v) for v in row) for row in self.edges]

    def edge_masks(self) -> List[int]:
        """Edges as vertex bitmasks (bit v set for every v in the edge)."""
        return [sum(1 << int(v) for v in row) for row in self.edges]

    def with_edge(self, edge: Sequence[int]) -> 'Hypergraph':
        """A copy with one more edge."""
        return Hypergraph(self.n, self.k, np.vstack([self.edges, np.asarray(edge, dtype=np.int64).reshape(1, -1)]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return self.n == other.n and self.k == other.k and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.k, self.edges.tobytes()))

    def __repr__(self) -> str:
        return f"Hypergraph(n={self.n}, k={self.k}, m={self.m})"


# ---------------------------------------------------------------------------
# colorings

def as_coloring(bits: Union[Sequence[int], np.ndarray], n: Optional[int] = None) -> np.ndarray:
    """Validate a 0/1 vector and return it as a uint8 array."""
    sigma = np.asarray(bits, dtype=np.int64).ravel()
    if n is not None and len(sigma) != n:
        raise ParameterError(f"coloring has length {len(sigma)}, expected {n}")
    if sigma.size and (sigma.min() < 0 or sigma.max() > 1):
        raise ParameterError("a coloring may only contain 0 and 1")
    return sigma.astype(np.uint8)


def canonical_coloring(n: int) -> np.ndarray:
    """Vertices [0, n/2) get colour 0, [n/2, n) colour 1."""
    if n % 2:
        raise ParameterError(f"equitable colorings need even n, got {n}")
    sigma = np.zeros(n, dtype=np.uint8)
    sigma[n // 2:] = 1
    return sigma


def random_equitable_coloring(n: int, rng: np.random.Generator) -> np.ndarray:
    if n % 2:
        raise ParameterError(f"equitable colorings need even n, got {n}")
    sigma = np.zeros(n, dtype=np.uint8)
    sigma[rng.choice(n, size=n // 2, replace=False)] = 1
    return sigma


def is_equitable(sigma: np.ndarray) -> bool:
    return len(sigma) % 2 == 0 and int(np.sum(sigma)) == len(sigma) // 2


def hamming_distance(sigma: np.ndarray, tau: np.ndarray) -> int:
    if len(sigma) != len(tau):
        raise ParameterError("colorings have different lengths")
    return int(np.count_nonzero(np.asarray(sigma) != np.asarray(tau)))


# ---------------------------------------------------------------------------
# pool sizes

def count_bichromatic_edges(n0: int, n1: int, k: int) -> int:
    """Number of k-subsets that are bichromatic under a (n0, n1) split."""
    return math.comb(n0 + n1, k) - math.comb(n0, k) - math.comb(n1, k)


def count_critical_edges(n0: int, n1: int, k: int) -> int:
    """Number of k-subsets with exactly one vertex of one colour."""
    if k == 2:
        return n0 * n1
    return n1 * math.comb(n0, k - 1) + n0 * math.comb(n1, k - 1)


def count_noncritical_edges(n0: int, n1: int, k: int) -> int:
    return sum(math.comb(n1, l) * math.comb(n0, k - l) for l in range(2, k - 1))


# ---------------------------------------------------------------------------
# edge classification

@dataclass
class EdgeClass:
    """
    Labels of the edges of a hypergraph relative to a coloring.

    Attributes:
        labels: per edge, MONOCHROMATIC / CRITICAL / OTHER_BICHROMATIC
        support: per edge, the support vertex of a critical edge, else -1
        degrees: per vertex, the number of edges it supports (s(v))
    """

    labels: np.ndarray
    support: np.ndarray
    degrees: np.ndarray

    @property
    def monochromatic(self) -> int:
        return int(np.count_nonzero(self.labels == MONOCHROMATIC))

    @property
    def critical(self) -> int:
        return int(np.count_nonzero(self.labels == CRITICAL))

    @property
    def other_bichromatic(self) -> int:
        return int(np.count_nonzero(self.labels == OTHER_BICHROMATIC))

    def label_names(self) -> List[str]:
        return [LABEL_NAMES[int(label)] for label in self.labels]


def _check_sizes(H: Hypergraph, sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma)
    if len(sigma) != H.n:
        raise ParameterError(f"coloring has length {len(sigma)} but the hypergraph has n={H.n}")
    return sigma


def violations(H: Hypergraph, sigma: np.ndarray) -> int:
    """w(sigma): the number of monochromatic edges."""
    sigma = _check_sizes(H, sigma)
    if H.m == 0:
        return 0
    ones = sigma[H.edges].sum(axis=1, dtype=np.int64)
    return int(np.count_nonzero((ones == 0) | (ones == H.k)))


def classify_edges(H: Hypergraph, sigma: np.ndarray) -> EdgeClass:
    """Label every edge and compute the support degrees s(v)."""
    sigma = _check_sizes(H, sigma)
    labels = np.full(H.m, OTHER_BICHROMATIC, dtype=np.int8)
    support = np.full(H.m, -1, dtype=np.int64)
    if H.m:
        colors = sigma[H.edges].astype(np.int64)
        ones = colors.sum(axis=1)
        labels[(ones == 0) | (ones == H.k)] = MONOCHROMATIC
        lone_one = ones == 1
        lone_zero = ones == H.k - 1
        rows = np.arange(H.m)
        support[lone_one] = H.edges[rows[lone_one], np.argmax(colors[lone_one], axis=1)]
        support[lone_zero] = H.edges[rows[lone_zero], np.argmin(colors[lone_zero], axis=1)]
        labels[lone_one | lone_zero] = CRITICAL
    degrees = np.bincount(support[support >= 0], minlength=H.n).astype(np.int64)
    return EdgeClass(labels=labels, support=support, degrees=degrees)


# ---------------------------------------------------------------------------
# samplers

class _DistinctEdges:
    """Collects distinct edges from batched proposals, enforcing the draw cap."""

    def __init__(self, m: int, what: str):
        self.m = m
        self.what = what
        self.rows: List[Tuple[int, ...]] = []
        self.seen = set()
        self.draws = 0
        self.cap = DRAW_CAP_FACTOR * max(m, 1)

    @property
    def missing(self) -> int:
        return self.m - len(self.rows)

    def offer(self, batch: np.ndarray, proposed: int) -> None:
        self.draws += proposed
        for row in batch:
            if len(self.rows) == self.m:
                break
            key = tuple(int(v) for v in row)
            if key not in self.seen:
                self.seen.add(key)
                self.rows.append(key)
        if self.missing and self.draws > self.cap:
            raise ParameterError(
                f"{self.what}: gave up after {self.draws} draws with {len(self.rows)} of {self.m} edges; "
                f"check that the parameters leave room for that many edges")

    def array(self, k: int) -> np.ndarray:
        return np.array(self.rows, dtype=np.int64).reshape(-1, k)


def _batch_size(missing: int) -> int:
    return max(64, 2 * missing)


def _distinct_rows(rows: np.ndarray) -> np.ndarray:
    """Mask of sorted rows without repeated vertices."""
    if rows.shape[1] < 2:
        return np.ones(len(rows), dtype=bool)
    return np.all(np.diff(rows, axis=1) != 0, axis=1)


def _draw_subsets(rng: np.random.Generator, pool: np.ndarray, count: int, size: int) -> np.ndarray:
    """`count` uniform `size`-subsets of `pool`, one per row (sorted)."""
    if size == 0:
        return np.zeros((count, 0), dtype=np.int64)
    out = np.sort(pool[rng.integers(0, len(pool), size=(count, size))], axis=1)
    bad = ~_distinct_rows(out)
    while np.any(bad):
        idx = np.flatnonzero(bad)
        out[idx] = np.sort(pool[rng.integers(0, len(pool), size=(len(idx), size))], axis=1)
        bad[idx] = ~_distinct_rows(out[idx])
    return out


def _split_sampler(sigma: np.ndarray, k: int, splits: Sequence[int]) -> Tuple[Callable, int]:
    """
    Proposal of uniform k-subsets whose number of colour-1 vertices lies in
    `splits`; returns the proposal function and the pool size.
    """
    class1 = np.flatnonzero(sigma == 1).astype(np.int64)
    class0 = np.flatnonzero(sigma == 0).astype(np.int64)
    n1, n0 = len(class1), len(class0)
    weights = [math.comb(n1, l) * math.comb(n0, k - l) for l in splits]
    pool = sum(weights)
    if pool == 0:
        return None, 0
    probs = np.array([w / pool for w in weights])
    splits = np.asarray(splits)

    def propose(rng: np.random.Generator, count: int) -> np.ndarray:
        ls = splits[rng.choice(len(splits), size=count, p=probs)]
        rows = np.empty((count, k), dtype=np.int64)
        for l in np.unique(ls):
            idx = np.flatnonzero(ls == l)
            ones = _draw_subsets(rng, class1, len(idx), int(l))
            zeros = _draw_subsets(rng, class0, len(idx), k - int(l))
            rows[idx] = np.sort(np.hstack([ones, zeros]), axis=1)
        return rows

    return propose, pool


def sample_uniform(n: int, m: int, k: int, rng: np.random.Generator) -> Hypergraph:
    """H_k(n, m): m distinct uniformly random k-subsets of [n]."""
    if k < 2 or k > n:
        raise ParameterError(f"uniformity must satisfy 2 <= k <= n, got k={k}, n={n}")
    pool = math.comb(n, k)
    if not 0 <= m <= pool:
        raise ParameterError(f"m={m} must lie in [0, C(n,k)={pool}]")
    collector = _DistinctEdges(m, "sample_uniform")
    while collector.missing:
        size = _batch_size(collector.missing)
        batch = np.sort(rng.integers(0, n, size=(size, k)), axis=1)
        collector.offer(batch[_distinct_rows(batch)], size)
    return Hypergraph(n, k, collector.array(k))


def sample_planted(n: int, m: int, k: int, sigma: np.ndarray, rng: np.random.Generator) -> Hypergraph:
    """H_k(n, m, sigma): m distinct random edges, all bichromatic under sigma."""
    sigma = as_coloring(sigma, n)
    n1 = int(sigma.sum())
    pool = count_bichromatic_edges(n - n1, n1, k)
    if m < 0 or m > pool:
        raise ParameterError(f"sigma admits only {pool} bichromatic edges, cannot plant m={m}")
    collector = _DistinctEdges(m, "sample_planted")
    while collector.missing:
        size = _batch_size(collector.missing)
        batch = np.sort(rng.integers(0, n, size=(size, k)), axis=1)
        batch = batch[_distinct_rows(batch)]
        ones = sigma[batch].sum(axis=1, dtype=np.int64)
        collector.offer(batch[(ones > 0) & (ones < k)], size)
    return Hypergraph(n, k, collector.array(k))


def sample_planted_critical(n: int, m1: int, m2: int, k: int, sigma: np.ndarray,
                            rng: np.random.Generator) -> Hypergraph:
    """
    H_k(n, m1, m2, sigma): m1 random sigma-critical edges plus m2 random
    bichromatic non-critical edges.
    """
    sigma = as_coloring(sigma, n)
    if not is_equitable(sigma):
        raise ParameterError("the planted-critical model needs an equitable coloring")
    if m1 < 0 or m2 < 0:
        raise ParameterError(f"edge counts must be non-negative, got m1={m1}, m2={m2}")

    parts = []
    for count, splits, what in ((m1, [1, k - 1], "critical"), (m2, list(range(2, k - 1)), "non-critical")):
        if count == 0:
            continue
        propose, pool = _split_sampler(sigma, k, sorted(set(splits)))
        if count > pool:
            raise ParameterError(f"only {pool} {what} edges exist, cannot draw {count}")
        collector = _DistinctEdges(count, f"sample_planted_critical ({what})")
        while collector.missing:
            size = _batch_size(collector.missing)
            collector.offer(propose(rng, size), size)
        parts.append(collector.array(k))
    edges = np.vstack(parts) if parts else np.zeros((0, k), dtype=np.int64)
    return Hypergraph(n, k, edges)


def sample_binomial_planted(n: int, p: float, k: int, sigma: np.ndarray, rng: np.random.Generator,
                            mode: str = 'auto') -> Hypergraph:
    """
    H_k(n, p, sigma): every sigma-bichromatic k-subset independently with probability p.

    Args:
        mode: 'exact' enumerates every candidate edge; 'count' draws the edge
            count from Binomial(#bichromatic, p) and then samples that many
            distinct bichromatic edges, which has the same law; 'auto' picks
            'exact' when C(n, k) is small enough.
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    sigma = as_coloring(sigma, n)
    if mode == 'auto':
        mode = 'exact' if math.comb(n, k) <= EXACT_BINOMIAL_LIMIT else 'count'
    if mode == 'exact':
        candidates = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64).reshape(-1, k)
        ones = sigma[candidates].sum(axis=1, dtype=np.int64)
        candidates = candidates[(ones > 0) & (ones < k)]
        keep = rng.random(len(candidates)) < p
        return Hypergraph(n, k, candidates[keep])
    if mode == 'count':
        n1 = int(sigma.sum())
        pool = count_bichromatic_edges(n - n1, n1, k)
        m = int(rng.binomial(pool, p)) if pool else 0
        return sample_planted(n, m, k, sigma, rng)
    raise ParameterError(f"unknown binomial sampling mode {mode!r}")


# ---------------------------------------------------------------------------
# diagnostics

def expansion_audit(H: Hypergraph, sizes: Sequence[int], samples: int,
                    rng: np.random.Generator, factor: float = 1.01) -> Dict[int, float]:
    """
    For random vertex sets S of each size, the fraction of sets in which
    the number of edges with at least two vertices in S is at most factor*|S|.
    """
    result = {}
    for size in sizes:
        if not 1 <= size <= H.n:
            raise ParameterError(f"set size {size} outside [1, {H.n}]")
        good = 0
        for _ in range(samples):
            member = np.zeros(H.n, dtype=np.int64)
            member[rng.choice(H.n, size=size, replace=False)] = 1
            inside = member[H.edges].sum(axis=1) if H.m else np.zeros(0)
            if np.count_nonzero(inside >= 2) <= factor * size:
                good += 1
        result[int(size)] = good / samples if samples else float('nan')
    return result


# ---------------------------------------------------------------------------
# serialization

def write_hypergraph(H: Hypergraph, stream: TextIO) -> None:
    """Line 1: "n k m"; then one edge per line, sorted vertex indices."""
    stream.write(f"{H.n} {H.k} {H.m}\n")
    for row in H.edges:
        stream.write(" ".join(str(int(v)) for v in row) + "\n")


def read_hypergraph(stream: TextIO) -> Hypergraph:
    lines = [line.strip() for line in stream if line.strip() and not line.startswith('#')]
    if not lines:
        raise ParameterError("hypergraph file is empty")
    try:
        n, k, m = (int(tok) for tok in lines[0].split())
        edges = [[int(tok) for tok in line.split()] for line in lines[1:]]
    except ValueError as e:
        raise ParameterError(f"malformed hypergraph file: {e}") from e
    if len(edges) != m:
        raise ParameterError(f"hypergraph header announces m={m} edges but {len(edges)} follow")
    return Hypergraph.from_edges(n, k, edges)


def save_hypergraph(H: Hypergraph, path: Union[str, Path]) -> None:
    with open(path, 'w', encoding='utf-8') as file:
        write_hypergraph(H, file)


def load_hypergraph(path: Union[str, Path]) -> Hypergraph:
    try:
        with open(path, 'r', encoding='utf-8') as file:
            return read_hypergraph(file)
    except FileNotFoundError as e:
        raise ParameterError(f"hypergraph file not found: {path}") from e


def format_coloring(sigma: np.ndarray) -> str:
    return "".join('1' if int(b) else '0' for b in sigma)


def parse_coloring(text: str, n: Optional[int] = None) -> np.ndarray:
    text = text.strip()
    if any(ch not in '01' for ch in text):
        raise ParameterError("a coloring is a string of 0 and 1 characters")
    return as_coloring([int(ch) for ch in text], n)


def load_coloring(path: Union[str, Path], n: Optional[int] = None) -> np.ndarray:
    try:
        with open(path, 'r', encoding='utf-8') as file:
            lines = [line for line in file if line.strip() and not line.startswith('#')]
    except FileNotFoundError as e:
        raise ParameterError(f"coloring file not found: {path}") from e
    if not lines:
        raise ParameterError(f"coloring file {path} is empty")
    return parse_coloring(lines[0], n)
