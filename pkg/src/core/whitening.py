"""
Combinatorial processes on a planted instance.

Whitening (the set U of vertices that can be recoloured freely), its
projection H_U, the core and the attachment process, rigidity checks, the
residual component census and the local-cluster entropy bounds. All
processes are fixpoints computed with worklists; each accepts an optional
processing order so tests can confirm order independence.
"""

import itertools
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from src.core.errors import CapExceededError, ParameterError
from src.core.exact import (
    ENUMERATION_CAP,
    Constraint,
    coloring_code,
    count_colorings,
    iter_solution_codes,
    nae_constraints,
    popcount,
)
from src.core.model import (
    CRITICAL,
    OTHER_BICHROMATIC,
    EdgeClass,
    Hypergraph,
    as_coloring,
    classify_edges,
    expansion_audit,
)

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)

CANONICAL_VERTEX_LIMIT = 12
CANONICAL_PERMUTATION_LIMIT = 40_320


# ---------------------------------------------------------------------------
# support structure

@dataclass
class SupportStructure:
    """Critical edges of H under sigma and who supports them."""

    H: Hypergraph
    sigma: np.ndarray
    classes: EdgeClass
    critical: np.ndarray                    # indices of critical edges
    supported: List[List[int]]              # v -> critical edges v supports
    incident: List[List[int]]               # v -> critical edges containing v, v not the support

    @property
    def degrees(self) -> np.ndarray:
        return self.classes.degrees


def support_structure(H: Hypergraph, sigma: np.ndarray) -> SupportStructure:
    sigma = as_coloring(sigma, H.n)
    classes = classify_edges(H, sigma)
    critical = np.flatnonzero(classes.labels == CRITICAL)
    supported: List[List[int]] = [[] for _ in range(H.n)]
    incident: List[List[int]] = [[] for _ in range(H.n)]
    for e in critical:
        s = int(classes.support[e])
        supported[s].append(int(e))
        for v in H.edges[e]:
            if int(v) != s:
                incident[int(v)].append(int(e))
    return SupportStructure(H, sigma, classes, critical, supported, incident)


def degree_histogram(H: Hypergraph, sigma: np.ndarray, max_l: Optional[int] = None) -> np.ndarray:
    """Fraction of vertices with s(v) = l, for l = 0..max_l."""
    degrees = classify_edges(H, sigma).degrees
    top = int(degrees.max()) if max_l is None and len(degrees) else (max_l or 0)
    counts = np.bincount(degrees, minlength=top + 1)[:top + 1]
    return counts / H.n


def _ordered(vertices: Iterable[int], order: Optional[Sequence[int]]) -> List[int]:
    vertices = [int(v) for v in vertices]
    if order is None:
        return sorted(vertices)
    rank = {int(v): i for i, v in enumerate(order)}
    return sorted(vertices, key=lambda v: rank.get(v, len(rank) + v))


# ---------------------------------------------------------------------------
# whitening

@dataclass
class WhiteningResult:
    """
    Outcome of the whitening process.

    Attributes:
        U: whitened vertices
        rounds: (round index, vertices added in that round)
        H_U: projections e & U (|e & U| >= 2) of the critical edges, with edge index
        S0: support-free vertices
        S1: vertices supporting exactly one edge whose projection is {v, w}, w in S0
        extra_edges: H_U edges that are not the supported edge of an S1 vertex
    """

    n: int
    U: Set[int]
    rounds: List[Tuple[int, List[int]]]
    H_U: List[Tuple[int, Tuple[int, ...]]]
    S0: Set[int]
    S1: Set[int]
    extra_edges: int
    star_edges: Set[int] = field(default_factory=set)
    warnings: List[str] = field(default_factory=list)

    def trace_rows(self) -> List[Tuple[int, int]]:
        """`round,vertex` table."""
        return [(t, v) for t, added in self.rounds for v in added]


def whiten(H: Hypergraph, sigma: np.ndarray, order: Optional[Sequence[int]] = None,
           structure: Optional[SupportStructure] = None) -> WhiteningResult:
    """
    Least fixpoint: U starts as the support-free vertices; a vertex joins
    once every edge it supports contains a U-vertex other than itself.

    Args:
        H: Hypergraph
        sigma: Reference coloring
        order: Processing order of vertices within a round (optional)
        structure: Precomputed support structure (optional)
    """
    st = structure or support_structure(H, sigma)
    warnings = []
    if st.classes.monochromatic:
        warnings.append(f"sigma is not proper: {st.classes.monochromatic} monochromatic edges")
        logger.warning(warnings[-1])

    n = H.n
    in_U = np.zeros(n, dtype=bool)
    touched = np.zeros(H.m, dtype=bool)
    # supported edges of v that do not yet meet U \ {v}
    pending = np.array([len(st.supported[v]) for v in range(n)], dtype=np.int64)

    current = _ordered(np.flatnonzero(pending == 0), order)
    in_U[current] = True
    rounds = []
    t = 0
    while current:
        rounds.append((t, sorted(current)))
        joined = []
        for u in current:
            for e in st.incident[u]:
                if touched[e]:
                    continue
                touched[e] = True
                s = int(st.classes.support[e])
                if not in_U[s]:
                    pending[s] -= 1
                    if pending[s] == 0:
                        joined.append(s)
        current = _ordered(set(joined), order)
        in_U[current] = True
        t += 1

    U = set(int(v) for v in np.flatnonzero(in_U))
    S0 = set(int(v) for v in np.flatnonzero(st.degrees == 0))

    H_U = []
    for e in st.critical:
        proj = tuple(int(v) for v in H.edges[e] if in_U[v])
        if len(proj) >= 2:
            H_U.append((int(e), proj))

    S1 = set()
    star_edges = set()
    for e, proj in H_U:
        s = int(st.classes.support[e])
        if len(proj) == 2 and st.degrees[s] == 1 and s in U:
            other = proj[0] if proj[1] == s else proj[1]
            if s in proj and other in S0:
                S1.add(s)
                star_edges.add(e)

    assert S0 <= U, "support-free vertices are whitened in round 0"
    return WhiteningResult(
        n=n, U=U, rounds=rounds, H_U=H_U, S0=S0, S1=S1,
        extra_edges=len(H_U) - len(star_edges), star_edges=star_edges, warnings=warnings,
    )


@dataclass
class UCensus:
    """Observed whitening sizes next to their Poisson predictions."""

    n: int
    lam: float
    k: int
    U: int
    S0: int
    S1: int
    rest: int
    extra_edges: int
    expansion: Dict[int, float] = field(default_factory=dict)

    def rows(self) -> List[Tuple[str, float, float]]:
        """`statistic,observed,predicted` table."""
        n, lam, k = self.n, self.lam, self.k
        s0_pred = math.exp(-lam)
        s1_pred = lam * (k - 1) * math.exp(-2.0 * lam)
        rows = [
            ('U_fraction', self.U / n, s0_pred + s1_pred),
            ('S0_fraction', self.S0 / n, s0_pred),
            ('S1_fraction', self.S1 / n, s1_pred),
            ('rest_fraction', self.rest / n, float('nan')),
            ('extra_edges_per_n', self.extra_edges / n, float('nan')),
        ]
        for size, rate in sorted(self.expansion.items()):
            rows.append((f'expansion_{size}', rate, 1.0))
        return rows


def u_census(result: WhiteningResult, H: Hypergraph, sigma: np.ndarray, lam: Optional[float] = None,
             audit_sizes: Sequence[int] = (), audit_samples: int = 0,
             rng: Optional[np.random.Generator] = None) -> UCensus:
    """
    Sizes of U, S0, S1 and the extra edges, per n.

    Args:
        lam: Expected support degree; defaults to the observed critical edges per vertex
        audit_sizes: Set sizes for the expansion diagnostic (small instances)
    """
    if lam is None:
        lam = classify_edges(H, sigma).critical / H.n
    rest = len(result.U - result.S0 - result.S1)
    assert len(result.U) == len(result.S0) + len(result.S1) + rest
    expansion = {}
    if audit_sizes and audit_samples and rng is not None:
        expansion = expansion_audit(H, audit_sizes, audit_samples, rng)
    return UCensus(H.n, lam, H.k, len(result.U), len(result.S0), len(result.S1), rest,
                   result.extra_edges, expansion)


# ---------------------------------------------------------------------------
# core and attachment

@dataclass
class CoreResult:
    """Core C, its removal trace and (after attach) the attached set A."""

    C: Set[int]
    removed_trace: List[int]
    A: Optional[Set[int]] = None
    l: int = 10


def core(H: Hypergraph, sigma: np.ndarray, l: int = 10, order: Optional[Sequence[int]] = None,
         structure: Optional[SupportStructure] = None) -> CoreResult:
    """Largest set in which every vertex supports >= l/2 edges lying inside the set."""
    if l < 2 or l % 2:
        raise ParameterError(f"core parameter l must be even and >= 2, got {l}")
    st = structure or support_structure(H, sigma)
    need = l // 2
    n = H.n
    alive = np.ones(n, dtype=bool)
    intact = np.ones(H.m, dtype=bool)
    internal = st.degrees.copy()

    trace: List[int] = []
    queue = deque(_ordered(np.flatnonzero(internal < need), order))
    queued = np.zeros(n, dtype=bool)
    queued[list(queue)] = True
    while queue:
        u = queue.popleft()
        alive[u] = False
        trace.append(int(u))
        for e in st.incident[u]:
            if not intact[e]:
                continue
            intact[e] = False
            s = int(st.classes.support[e])
            internal[s] -= 1
            if alive[s] and not queued[s] and internal[s] < need:
                queued[s] = True
                queue.append(s)
        for e in st.supported[u]:
            intact[e] = False

    C = set(int(v) for v in np.flatnonzero(alive))
    for v in C:
        inside = sum(1 for e in st.supported[v] if all(int(w) in C for w in H.edges[e]))
        assert inside >= need, f"core vertex {v} supports only {inside} internal edges"
    return CoreResult(C=C, removed_trace=trace, l=l)


def attach(H: Hypergraph, sigma: np.ndarray, C: Iterable[int], order: Optional[Sequence[int]] = None,
           structure: Optional[SupportStructure] = None) -> CoreResult:
    """Least A containing C such that every v in A \\ C supports an edge with its other vertices in A."""
    st = structure or support_structure(H, sigma)
    C = set(int(v) for v in C)
    if any(not 0 <= v < H.n for v in C):
        raise ParameterError("core set contains vertices outside [0, n)")
    in_A = np.zeros(H.n, dtype=bool)
    in_A[list(C)] = True

    outside = np.zeros(H.m, dtype=np.int64)
    for e in st.critical:
        s = int(st.classes.support[e])
        outside[e] = sum(1 for w in H.edges[e] if int(w) != s and not in_A[w])

    ready = [int(st.classes.support[e]) for e in st.critical if outside[e] == 0]
    queue = deque(_ordered(set(v for v in ready if not in_A[v]), order))
    for v in queue:
        in_A[v] = True
    while queue:
        u = queue.popleft()
        for e in st.incident[u]:
            outside[e] -= 1
            s = int(st.classes.support[e])
            if outside[e] == 0 and not in_A[s]:
                in_A[s] = True
                queue.append(s)

    A = set(int(v) for v in np.flatnonzero(in_A))
    return CoreResult(C=C, removed_trace=[], A=A)


def rigid_check(H: Hypergraph, sigma: np.ndarray, R: Iterable[int], theta: int,
                cap: int = ENUMERATION_CAP) -> bool:
    """
    True iff every proper coloring that differs from sigma on some vertex of R
    differs from it on at least theta vertices of R.
    """
    sigma = as_coloring(sigma, H.n)
    R = set(int(v) for v in R)
    if not R:
        return True
    ref = np.uint64(coloring_code(sigma))
    r_mask = np.uint64(sum(1 << v for v in R))
    for codes in iter_solution_codes(H.n, nae_constraints(H), cap):
        flipped = popcount((codes ^ ref) & r_mask)
        if np.any((flipped > 0) & (flipped < theta)):
            return False
    return True


# ---------------------------------------------------------------------------
# residual component census

@dataclass
class ComponentType:
    key: tuple
    multiplicity: int
    vertex_count: int
    z: Optional[int]

    def to_dict(self) -> dict:
        return {
            'canonical_form': repr(self.key),
            'multiplicity': self.multiplicity,
            'vertex_count': self.vertex_count,
            'colorings': self.z,
        }


@dataclass
class ComponentCensus:
    """Component types of the residual hypergraph on V \\ C."""

    components: List[ComponentType]
    entropy_estimate: float
    mode: str
    residual_vertices: int
    uncolored: int = 0

    def to_dict(self) -> dict:
        return {
            'mode': self.mode,
            'residual_vertices': self.residual_vertices,
            'entropy_estimate': self.entropy_estimate,
            'uncolored_components': self.uncolored,
            'components': [c.to_dict() for c in self.components],
        }


def _residual_constraints(H: Hypergraph, sigma: np.ndarray, C: Set[int],
                          mode: str) -> Tuple[List[Tuple[Tuple[int, ...], bool, bool]], bool]:
    """Constraints on V \\ C as (vertices, forbid_zero, forbid_one); flag set on contradiction."""
    out = []
    contradiction = False
    for row in H.edges:
        rest = tuple(int(v) for v in row if int(v) not in C)
        if mode == 'projected':
            if len(rest) >= 2:
                out.append((rest, True, True))
            continue
        fixed = {int(sigma[v]) for v in row if int(v) in C}
        if len(fixed) == 2:
            continue
        if not rest:
            contradiction = True
            continue
        if not fixed:
            out.append((rest, True, True))
        else:
            colour = fixed.pop()
            out.append((rest, colour == 0, colour == 1))
    return out, contradiction


def canonical_form(size: int, constraints: Sequence[Constraint]) -> tuple:
    """
    Isomorphism key of a small component.

    Vertices are grouped by an invariant (incident constraint signatures);
    the key is the lexicographically least constraint list over all
    relabelings that respect the grouping. Components that are too large
    are keyed by a Weisfeiler-Lehman hash of their incidence graph.
    """
    incident: List[List[Tuple[int, bool, bool]]] = [[] for _ in range(size)]
    for c in constraints:
        sig = (bin(c.mask).count('1'), c.forbid_zero, c.forbid_one)
        for v in range(size):
            if c.mask >> v & 1:
                incident[v].append(sig)
    invariant = [tuple(sorted(sigs)) for sigs in incident]
    classes: Dict[tuple, List[int]] = {}
    for v in range(size):
        classes.setdefault(invariant[v], []).append(v)
    groups = [classes[key] for key in sorted(classes)]
    shape = tuple((key, len(classes[key])) for key in sorted(classes))

    permutations = math.prod(math.factorial(len(g)) for g in groups)
    if size > CANONICAL_VERTEX_LIMIT or permutations > CANONICAL_PERMUTATION_LIMIT:
        return ('wl', size, shape, _wl_hash(size, constraints))

    best = None
    for choice in itertools.product(*(itertools.permutations(g) for g in groups)):
        relabel = {}
        position = 0
        for block in choice:
            for v in block:
                relabel[v] = position
                position += 1
        form = tuple(sorted(
            (sum(1 << relabel[v] for v in range(size) if c.mask >> v & 1), c.forbid_zero, c.forbid_one)
            for c in constraints))
        if best is None or form < best:
            best = form
    return ('exact', size, best)


def _wl_hash(size: int, constraints: Sequence[Constraint]) -> str:
    G = nx.Graph()
    for v in range(size):
        G.add_node(('v', v), label='v')
    for i, c in enumerate(constraints):
        G.add_node(('c', i), label=f"c{int(c.forbid_zero)}{int(c.forbid_one)}")
        for v in range(size):
            if c.mask >> v & 1:
                G.add_edge(('c', i), ('v', v))
    return nx.weisfeiler_lehman_graph_hash(G, node_attr='label', iterations=4)


def residual_census(H: Hypergraph, sigma: np.ndarray, C: Iterable[int], mode: str = 'projected',
                    cap: int = ENUMERATION_CAP) -> ComponentCensus:
    """
    Components of the residual hypergraph on V \\ C with their colorings.

    mode 'projected' keeps e \\ C for every edge with |e \\ C| >= 2;
    mode 'conditioned' keeps the constraint each edge leaves once sigma is
    fixed on C, so the entropy estimate is ln of the number of proper
    colorings that agree with sigma on C.
    """
    if mode not in ('projected', 'conditioned'):
        raise ParameterError(f"unknown residual mode {mode!r}")
    sigma = as_coloring(sigma, H.n)
    C = set(int(v) for v in C)
    residual = [v for v in range(H.n) if v not in C]
    constraints, contradiction = _residual_constraints(H, sigma, C, mode)

    G = nx.Graph()
    G.add_nodes_from(('v', v) for v in residual)
    for i, (vertices, _, _) in enumerate(constraints):
        G.add_node(('c', i))
        G.add_edges_from((('c', i), ('v', v)) for v in vertices)

    types: Dict[tuple, ComponentType] = {}
    entropy = -math.inf if contradiction else 0.0
    uncolored = 0
    for nodes in nx.connected_components(G):
        members = sorted(v for kind, v in nodes if kind == 'v')
        local = {v: i for i, v in enumerate(members)}
        comp = [Constraint(sum(1 << local[v] for v in constraints[i][0]), constraints[i][1], constraints[i][2])
                for kind, i in nodes if kind == 'c']
        comp.sort()
        key = canonical_form(len(members), comp)
        try:
            z = count_colorings(len(members), comp, cap)
        except CapExceededError:
            logger.warning(f"residual component with {len(members)} vertices exceeds the enumeration cap")
            z = None
            uncolored += 1
        if z is None:
            key = ('uncolored',) + key
        elif key[0] == 'wl':
            key = key + (z,)
        if key in types:
            types[key].multiplicity += 1
        else:
            types[key] = ComponentType(key, 1, len(members), z)
        if z is not None:
            entropy += math.log(z) if z > 0 else -math.inf

    components = sorted(types.values(), key=lambda t: (t.vertex_count, repr(t.key)))
    assert sum(t.multiplicity * t.vertex_count for t in components) == len(residual)
    return ComponentCensus(components, entropy, mode, len(residual), uncolored)


# ---------------------------------------------------------------------------
# local cluster entropy

@dataclass
class ClusterEntropyBounds:
    """
    Upper and lower estimates of (1/n) ln |C(sigma)|, with the sets behind them.

    `exceptional` is |F| = |F1 | F2 | F3| and `f2_seeds` is |F2' | F2''|.
    """

    n: int
    upper: float
    lower: float
    S0: int
    matching: int
    exceptional: int
    e2_prime: int
    e2_unblocked: int
    f2_seeds: int = 0

    @property
    def upper_total(self) -> float:
        return self.upper * self.n

    @property
    def lower_total(self) -> float:
        return self.lower * self.n


def _reachable(graph: nx.Graph, seeds: Iterable[int]) -> Set[int]:
    reached: Set[int] = set()
    for v in seeds:
        if v in graph and v not in reached:
            reached |= nx.node_connected_component(graph, v)
    return reached


def cluster_entropy_bounds(H: Hypergraph, sigma: np.ndarray,
                           result: Optional[WhiteningResult] = None) -> ClusterEntropyBounds:
    """
    Bounds on the local cluster entropy from the whitening structure.

    E2' holds the non-critical edges with exactly two vertices in
    S0 \\ N(S1) whose vertices outside U share one colour; E3' the
    non-critical edges with at least three U-vertices under the same colour
    condition. upper = (|S0| - |E2''|) ln 2 / n with E2'' a greedy matching
    of the S0 \\ N(S1) pairs of E2'.

    The exceptional set F is the union of
      F1: vertices reachable in H_U from the H_U edges outside the stars,
      F3: vertices reachable in H_U from the U-vertices of E3' edges,
      F2: vertices reachable in the star graph from F2' | F2'', where F2'
          holds the vertices of E2' edges in N(S1), or in U outside
          S0 | F1 | F3, and F2'' the S0 vertices on two or more E2' edges.
    lower = (|S0| - |F| - |E2' edges avoiding F2|) ln 2 / n.
    """
    sigma = as_coloring(sigma, H.n)
    st = support_structure(H, sigma)
    res = result or whiten(H, sigma, structure=st)
    U, S0 = res.U, res.S0

    star_partner = set()
    for e in res.star_edges:
        star_partner.update(int(v) for v in H.edges[e] if int(v) in S0)
    free_s0 = S0 - star_partner

    e2_prime: List[Tuple[int, ...]] = []
    e2_pairs: List[Tuple[int, int]] = []
    e3_prime: List[Tuple[int, ...]] = []
    for e in np.flatnonzero(st.classes.labels == OTHER_BICHROMATIC):
        row = tuple(int(v) for v in H.edges[e])
        outside = {int(sigma[v]) for v in row if v not in U}
        if len(outside) > 1:
            continue
        in_u = [v for v in row if v in U]
        free = [v for v in in_u if v in free_s0]
        if len(free) == 2:
            e2_prime.append(row)
            e2_pairs.append((free[0], free[1]))
        if len(in_u) >= 3:
            e3_prime.append(tuple(in_u))

    used: Set[int] = set()
    matching = 0
    for a, b in e2_pairs:
        if a not in used and b not in used:
            used.update((a, b))
            matching += 1

    hu = nx.Graph()
    hu.add_nodes_from(U)
    for _, proj in res.H_U:
        hu.add_edges_from(zip(proj, proj[1:]))
    star = nx.Graph()
    star.add_nodes_from(U)
    for e, proj in res.H_U:
        if e in res.star_edges:
            star.add_edge(*proj)

    extra_seeds = [v for e, proj in res.H_U if e not in res.star_edges for v in proj]
    F1 = _reachable(hu, extra_seeds)
    F3 = _reachable(hu, [v for proj in e3_prime for v in proj])

    excluded = S0 | F1 | F3
    f2_prime = {v for row in e2_prime for v in row
                if v in star_partner or (v in U and v not in excluded)}
    hits = Counter(v for row in e2_prime for v in row if v in S0)
    f2_double = {v for v, count in hits.items() if count >= 2}
    F2 = _reachable(star, f2_prime | f2_double)
    F = F1 | F2 | F3

    unblocked = sum(1 for row in e2_prime if not any(v in F2 for v in row))
    n = H.n
    upper = (len(S0) - matching) * LN2 / n
    lower = (len(S0) - len(F) - unblocked) * LN2 / n
    assert lower <= upper + 1e-12
    return ClusterEntropyBounds(n, upper, lower, len(S0), matching, len(F), len(e2_prime), unblocked,
                                len(f2_prime | f2_double))
