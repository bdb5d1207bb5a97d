"""
Rate functions and thresholds for random k-uniform hypergraph 2-coloring.

Closed-form and implicitly defined quantities: first-moment rates, the
pair-overlap rate psi, the critical-pair rate g, large-deviation rates of
binomials, the local-cluster rate Xi and the density thresholds derived from
them. Everything is computed in log space; all functions are pure.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.special import entr, gammaln, logsumexp, xlogy

from src.core.errors import DomainError, ParameterError

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)

# values this close to the boundary are evaluated as the x*ln(x) -> 0 limit
BOUNDARY_LOW = 1e-300
BOUNDARY_HIGH = 1.0 - 1e-16

X_TOLERANCE = 1e-10
R_TOLERANCE = 1e-8

LINEAR_GRID_STEPS = 10_000
EDGE_GRID_POINTS = 600
EDGE_GRID_DECADES = 15.0
SPLIT_GRID_STEPS = 1_000


def _check_k(k: int) -> None:
    if int(k) != k or k < 3:
        raise ParameterError(f"uniformity k must be an integer >= 3, got {k}")


def _check_r(r: float) -> None:
    if not r >= 0:
        raise ParameterError(f"density r must be >= 0, got {r}")


@dataclass(frozen=True)
class Params:
    """Model parameters (k, r, beta, lambda)."""

    k: int
    r: float
    beta: float = 0.0
    lam: Optional[float] = None

    def __post_init__(self):
        _check_k(self.k)
        _check_r(self.r)
        if not abs(self.beta) < 1:
            raise ParameterError(f"beta must satisfy |beta| < 1, got {self.beta}")
        if self.lam is not None and not self.lam >= 0:
            raise ParameterError(f"lambda must be >= 0, got {self.lam}")

    @classmethod
    def critical(cls, k: int, r: float, beta: float = 0.0) -> 'Params':
        """Parameters of the critical-planted model, lambda = (1+beta)kr/(2^(k-1)-1)."""
        _check_k(k)
        return cls(k=k, r=r, beta=beta, lam=(1.0 + beta) * k * r / (2.0 ** (k - 1) - 1.0))


# ---------------------------------------------------------------------------
# elementary rates

def binary_entropy(x: float) -> float:
    """h(x) = -x ln x - (1-x) ln(1-x), with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary_entropy needs 0 <= x <= 1, got {x}")
    if x <= BOUNDARY_LOW or x >= BOUNDARY_HIGH:
        return 0.0
    return float(entr(x) + entr(1.0 - x))


def chernoff_phi(x: float) -> float:
    """phi(x) = (1+x) ln(1+x) - x for x > -1."""
    if not x > -1.0:
        raise DomainError(f"chernoff_phi needs x > -1, got {x}")
    return (1.0 + x) * math.log1p(x) - x


def first_moment_rate(k: int, r: float) -> float:
    """Limit of (1/n) ln E[Z] over H_k(n, rn): ln 2 + r ln(1 - 2^(1-k))."""
    _check_k(k)
    _check_r(r)
    return LN2 + r * math.log1p(-(2.0 ** (1 - k)))


def first_moment_rate_equitable(k: int, r: float) -> float:
    """Limit of (1/n) ln E[Z_e]; equitable colorings carry the full rate."""
    return first_moment_rate(k, r)


# exact integer arithmetic below this many candidate edges
EXACT_EDGE_LIMIT = 100_000


def _log_comb(a: np.ndarray, b: float) -> np.ndarray:
    return gammaln(a + 1.0) - gammaln(b + 1.0) - gammaln(a - b + 1.0)


def _first_moment_fraction(n: int, m: int, k: int) -> Optional[Tuple[int, int]]:
    """E[Z] as (numerator, denominator) integers when C(n,k) is small."""
    if int(k) != k or k < 3 or k > n:
        raise ParameterError(f"exact_first_moment needs 3 <= k <= n, got n={n}, k={k}")
    total = math.comb(n, k)
    if not 0 <= m <= total:
        raise ParameterError(f"m must satisfy 0 <= m <= C(n,k) = {total}, got {m}")
    if total > EXACT_EDGE_LIMIT:
        return None
    numerator = 0
    for j in range(n + 1):
        allowed = total - math.comb(j, k) - math.comb(n - j, k)
        if allowed >= m:
            numerator += math.comb(n, j) * math.comb(allowed, m)
    return numerator, math.comb(total, m)


def log_exact_first_moment(n: int, m: int, k: int) -> float:
    """
    ln E[Z] over H_k(n, m) at finite n.

    E[Z] = sum_j C(n,j) C(N - C(j,k) - C(n-j,k), m) / C(N, m) with N = C(n,k).
    Small instances are summed in exact integers; larger ones in log space.
    """
    parts = _first_moment_fraction(n, m, k)
    if parts is not None:
        numerator, denominator = parts
        return math.log(numerator) - math.log(denominator)

    total = math.comb(n, k)
    js = np.arange(n + 1, dtype=float)
    allowed = np.array([total - math.comb(j, k) - math.comb(n - j, k) for j in range(n + 1)], dtype=float)
    feasible = allowed >= m
    terms = _log_comb(np.full(n + 1, float(n)), js) + _log_comb(allowed, float(m))
    return float(logsumexp(terms[feasible])) - float(_log_comb(np.float64(total), float(m)))


def exact_first_moment(n: int, m: int, k: int) -> float:
    """Exact finite-n E[Z] over H_k(n, m); overflows to inf only past the float range."""
    parts = _first_moment_fraction(n, m, k)
    if parts is not None:
        try:
            return parts[0] / parts[1]
        except OverflowError:
            return math.inf
    log_value = log_exact_first_moment(n, m, k)
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


def binomial_point_rate(n: float, p: float, t: float) -> float:
    """
    Asymptotic ln Pr[Bin(n, p) = np + t] (not divided by n).

    Uses -mu phi(t/mu) - (n-mu) phi(-t/(n-mu)), the leading term of the
    exact log-pmf.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"binomial_point_rate needs 0 < p < 1, got {p}")
    mu = n * p
    if not mu > 0:
        raise DomainError(f"binomial_point_rate needs mu = np > 0, got {mu}")
    if not 0.0 < mu + t < n:
        raise DomainError(f"binomial_point_rate needs 0 < mu + t < n, got mu + t = {mu + t}, n = {n}")
    return -mu * chernoff_phi(t / mu) - (n - mu) * chernoff_phi(-t / (n - mu))


def _kl(a: np.ndarray, q: float) -> np.ndarray:
    """Bernoulli relative entropy KL(a || q), +inf where a is impossible under q."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        if q <= 0.0:
            return np.where(a == 0.0, 0.0, np.inf)
        if q >= 1.0:
            return np.where(a == 1.0, 0.0, np.inf)
        return xlogy(a, a / q) + xlogy(1.0 - a, (1.0 - a) / (1.0 - q))


# ---------------------------------------------------------------------------
# psi: expected number of colorings at relative distance x

def _nae_fraction(k: int, x: np.ndarray) -> np.ndarray:
    """1 - x^k - (1-x)^k, computed from the smaller of x and 1-x."""
    u = np.minimum(x, 1.0 - x)
    return -np.expm1(k * np.log1p(-u)) - u ** k


def psi_values(k: int, r: float, xs: np.ndarray) -> np.ndarray:
    """Vectorized psi_{k,r} on an array of points in [0, 1]."""
    xs = np.asarray(xs, dtype=float)
    u = np.minimum(xs, 1.0 - xs)
    with np.errstate(divide='ignore', invalid='ignore'):
        h = entr(u) + entr(1.0 - u)
        arg = _nae_fraction(k, xs) / (2.0 ** (k - 1) - 1.0)
        values = h + r * np.log1p(-arg)
    return np.where(u <= BOUNDARY_LOW, 0.0, values)


def psi(k: int, r: float, x: float) -> float:
    """
    psi_{k,r}(x) = h(x) + r ln[1 - (1 - x^k - (1-x)^k)/(2^(k-1) - 1)].

    (1/n) ln of the expected number of pairs of colorings at distance xn,
    normalised so that psi(1/2) is the first-moment rate.
    """
    _check_k(k)
    _check_r(r)
    if not 0.0 < x < 1.0:
        raise DomainError(f"psi needs 0 < x < 1, got {x}")
    u = min(x, 1.0 - x)
    if u <= BOUNDARY_LOW:
        return 0.0
    arg = float(_nae_fraction(k, np.float64(x))) / (2.0 ** (k - 1) - 1.0)
    assert arg < 1.0, "log argument of psi must stay positive"
    return binary_entropy(u) + r * math.log1p(-arg)


def _search_grid(lo: float, hi: float) -> np.ndarray:
    """Interior grid: linear steps plus geometric clusters at both ends."""
    width = hi - lo
    linear = lo + width * np.arange(1, LINEAR_GRID_STEPS) / LINEAR_GRID_STEPS
    offsets = width * np.logspace(-EDGE_GRID_DECADES, -1.0, EDGE_GRID_POINTS)
    grid = np.concatenate([linear, lo + offsets, hi - offsets])
    grid = grid[(grid > lo) & (grid < hi)]
    return np.unique(grid)


def _refine_maximum(func: Callable[[float], float], grid: np.ndarray, values: np.ndarray,
                    lo: float, hi: float, xtol: float) -> Tuple[float, float]:
    """Golden-section refinement around the best grid point; ties go to smaller x."""
    finite = np.where(np.isfinite(values), values, -np.inf)
    i = int(np.argmax(finite))
    x_best, f_best = float(grid[i]), float(finite[i])
    a = float(grid[i - 1]) if i > 0 else lo
    b = float(grid[i + 1]) if i + 1 < len(grid) else hi

    neg = lambda x: -func(x)
    x_ref = None
    try:
        if i > 0 and i + 1 < len(grid):
            tol = xtol / max(abs(x_best), xtol)
            x_ref = optimize.golden(neg, brack=(a, x_best, b), tol=tol)
    except (ValueError, RuntimeError, FloatingPointError):
        x_ref = None
    if x_ref is None or not a <= x_ref <= b:
        res = optimize.minimize_scalar(neg, bounds=(a, b), method='bounded', options={'xatol': xtol})
        x_ref = float(res.x)

    f_ref = func(x_ref)
    if f_ref > f_best or (f_ref == f_best and x_ref < x_best):
        return float(x_ref), float(f_ref)
    return x_best, f_best


def maximize_psi(k: int, r: float, lo: float, hi: float,
                 xtol: float = X_TOLERANCE) -> Tuple[float, float]:
    """
    Global maximizer of psi over the open interval (lo, hi).

    Returns:
        (x_star, psi_star)
    """
    _check_k(k)
    _check_r(r)
    if not (0.0 <= lo < hi <= 1.0):
        raise ParameterError(f"maximize_psi needs 0 <= lo < hi <= 1, got ({lo}, {hi})")
    grid = _search_grid(lo, hi)
    if len(grid) < 3:
        raise ParameterError(f"interval ({lo}, {hi}) is too narrow to search")
    values = psi_values(k, r, grid)
    scalar = lambda x: float(psi_values(k, r, np.float64(x)))
    return _refine_maximum(scalar, grid, values, lo, hi, xtol)


# ---------------------------------------------------------------------------
# thresholds

def local_cluster_rate(k: int, lam: float) -> float:
    """Xi(lambda) = e^-lambda [1 - C(k,2) e^-lambda ln 2] ln 2 - 7^-k."""
    _check_k(k)
    if not lam >= 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    e = math.exp(-lam)
    return e * (1.0 - math.comb(k, 2) * e * LN2) * LN2 - 7.0 ** (-k)


def support_degree(k: int, r: float, beta: float = 0.0) -> float:
    """lambda = (1+beta) k r / (2^(k-1) - 1)."""
    return (1.0 + beta) * k * r / (2.0 ** (k - 1) - 1.0)


def density_for_degree(k: int, lam: float, beta: float = 0.0) -> float:
    """Inverse of support_degree."""
    return lam * (2.0 ** (k - 1) - 1.0) / ((1.0 + beta) * k)


def beta_star(k: int) -> float:
    """Criticality excess used for the condensation argument: 3^-k."""
    return 3.0 ** (-k)


def cluster_rate_shift(k: int, lam0: float, beta: float) -> float:
    """f(beta) = e^{-(1+beta)lam0} [1 - C(k,2) e^{-(1+beta)lam0} ln 2] ln 2."""
    return local_cluster_rate(k, (1.0 + beta) * lam0) + 7.0 ** (-k)


def critical_probability_rate(k: int, r: float, beta: float) -> float:
    """(1/n) ln Pr[Bin(m, q) = (1+beta) q m] with q = k/(2^(k-1)-1)."""
    _check_k(k)
    _check_r(r)
    q = k / (2.0 ** (k - 1) - 1.0)
    target = (1.0 + beta) * q
    if not 0.0 <= target <= 1.0:
        raise ParameterError(f"(1+beta)q = {target} is not a probability")
    return -r * float(_kl(target, q))


def critical_first_moment_rate(k: int, r: float, beta: float) -> float:
    """(1/n) ln E[Z_{1+beta}], the rate of (1+beta)-critical equitable colorings."""
    return first_moment_rate(k, r) + critical_probability_rate(k, r, beta)


def _half_is_global_max(k: int, r: float) -> bool:
    inner = 2.0 ** (-k / 2.0)
    x_inner, _ = maximize_psi(k, r, inner, 1.0 - inner)
    if abs(x_inner - 0.5) > 1e-6:
        return False
    x_full, _ = maximize_psi(k, r, 0.0, 1.0)
    return abs(x_full - 0.5) <= 1e-6


def second_moment_threshold(k: int, r_hi: float, tol: float = R_TOLERANCE) -> float:
    """
    sup{r : 1/2 is the global maximizer of psi_{k,r}}, by bisection on r.

    Args:
        k: Uniformity
        r_hi: Upper end of the search (the first-moment threshold)
        tol: Bisection tolerance in r
    """
    guess = 2.0 ** (k - 1) * LN2 - (1.0 + LN2) / 2.0 - 2.0
    lo = guess if 0.0 < guess < r_hi and _half_is_global_max(k, guess) else 0.0
    hi = r_hi
    if _half_is_global_max(k, hi):
        logger.warning(f"psi keeps its maximum at 1/2 up to r_first for k={k}")
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _half_is_global_max(k, mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class ThresholdReport:
    """Density thresholds for one k."""

    k: int
    r_first_exact: float
    r_first_bisect: float
    r_first_asymptotic: float
    r_second: float
    r_second_asymptotic: float
    r_cond: float
    r_crit: Optional[float]
    r_conjectured: float
    diagnostics: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def thresholds(k: int, r_tol: float = R_TOLERANCE) -> ThresholdReport:
    """Compute every threshold of the model at uniformity k."""
    _check_k(k)
    scale = 2.0 ** (k - 1) * LN2
    r_first_exact = -LN2 / math.log1p(-(2.0 ** (1 - k)))
    r_first_bisect = optimize.bisect(lambda r: first_moment_rate(k, r), 0.0, 2.0 ** k, xtol=r_tol)

    r_second = second_moment_threshold(k, r_first_exact, r_tol)
    r_cond = scale - LN2

    diagnostics = []
    if abs(r_first_bisect - r_first_exact) > 10 * r_tol:
        diagnostics.append(
            f"first-moment root mismatch: closed form {r_first_exact!r} vs bisection {r_first_bisect!r}")

    denom = 2.0 ** (k - 1) - 1.0

    def crit_gap(r: float) -> float:
        return local_cluster_rate(k, k * r / denom) - first_moment_rate(k, r) - 16.0 ** (-k)

    a, b = max(r_cond - 2.0, 0.0), r_cond + 2.0
    fa, fb = crit_gap(a), crit_gap(b)
    r_crit = None
    if fa == 0.0:
        r_crit = a
    elif fb == 0.0:
        r_crit = b
    elif (fa < 0) != (fb < 0):
        r_crit = optimize.bisect(crit_gap, a, b, xtol=r_tol)
    else:
        diagnostics.append(
            f"r_crit not bracketed on [{a:.6g}, {b:.6g}]: gap {fa:.3e} and {fb:.3e} have the same sign")

    report = ThresholdReport(
        k=k,
        r_first_exact=r_first_exact,
        r_first_bisect=r_first_bisect,
        r_first_asymptotic=scale - LN2 / 2.0,
        r_second=r_second,
        r_second_asymptotic=scale - (1.0 + LN2) / 2.0,
        r_cond=r_cond,
        r_crit=r_crit,
        r_conjectured=scale - (LN2 / 2.0 + 0.25),
        diagnostics=diagnostics,
    )
    logger.debug(f"thresholds(k={k}): second={r_second:.10g} cond={r_cond:.10g} first={r_first_exact:.10g}")
    return report


# ---------------------------------------------------------------------------
# overlap of two colorings at relative distance alpha

class OverlapParams(NamedTuple):
    """Per-edge transition probabilities between sigma and tau."""

    u1: float
    v1: float
    u2: float
    v2: float
    empty_sum: bool
    displayed_discrepancy: float


def u2_v2_displayed(k: int, alpha: float) -> Tuple[float, float]:
    """The closed forms for u2 and v2 as displayed next to the summation forms."""
    a, b = alpha, 1.0 - alpha
    den_u = 2.0 ** (k - 1) - k - 1
    den_v = 2.0 ** k - 2 * k - 2
    if den_u <= 0 or den_v <= 0:
        return 0.0, 0.0
    u2 = k * (1.0 - a ** k - b ** k - a ** (k - 1) * b - a * b ** (k - 1)
              - (k - 1) * a ** (k - 2) * b ** 2 - (k - 1) * a ** 2 * b ** (k - 2)) / den_u
    v2 = (1.0 - 2.0 * (a ** k + b ** k + 2 * k * a * b ** (k - 1) + 2 * k * a ** (k - 1) * b)) / den_v
    return u2, v2


def overlap_params(k: int, alpha: float) -> OverlapParams:
    """
    Transition probabilities of a random edge when a fraction alpha of
    the vertices is flipped.

    u1/v1: a sigma-critical edge stays critical / becomes monochromatic.
    u2/v2: a sigma-bichromatic non-critical edge becomes critical /
    monochromatic. u2 and v2 come from the summation over the number l of
    colour-1 vertices, 2 <= l <= k-2.
    """
    _check_k(k)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    a, b = alpha, 1.0 - alpha
    u1 = b ** k + a ** k + (k - 1) * a ** 2 * b ** (k - 2) + (k - 1) * a ** (k - 2) * b ** 2
    v1 = a * b ** (k - 1) + b * a ** (k - 1)

    classes = 2 ** k - 2 * k - 2
    if classes == 0:
        return OverlapParams(u1, v1, 0.0, 0.0, True, 0.0)

    u2 = 0.0
    v2 = 0.0
    for l in range(2, k - 1):
        weight = math.comb(k, l)
        v2 += weight * (a ** l * b ** (k - l) + b ** l * a ** (k - l))
        u2 += weight * (l * a ** (l - 1) * b ** (k - l + 1) + l * b ** (l - 1) * a ** (k - l + 1)
                        + (k - l) * b ** (l + 1) * a ** (k - l - 1) + (k - l) * a ** (l + 1) * b ** (k - l - 1))
    u2 /= classes
    v2 /= classes

    u2_disp, v2_disp = u2_v2_displayed(k, alpha)
    discrepancy = max(abs(u2 - u2_disp), abs(v2 - v2_disp))
    return OverlapParams(u1, v1, u2, v2, False, discrepancy)


def q_values(k: int, alpha: float) -> Tuple[float, float]:
    """q1 = u1/(1-v1), q2 = u2/(1-v2)."""
    ov = overlap_params(k, alpha)
    q1 = ov.u1 / (1.0 - ov.v1)
    q2 = 0.0 if ov.empty_sum else ov.u2 / (1.0 - ov.v2)
    return q1, q2


def _split_rate(mu1: float, q1: float, mu2: float, q2: float,
                xtol: float = X_TOLERANCE) -> float:
    """
    Rate of Pr[Bin(mu1 n, q1) + Bin(mu2 n, q2) = mu1 n], per n.

    Largest-term evaluation over the split s: the first binomial takes
    s*mu1, the second (1-s)*mu1.
    """
    def terms(s):
        s = np.asarray(s, dtype=float)
        first = mu1 * _kl(s, q1)
        if mu2 > 0:
            share = (1.0 - s) * mu1 / mu2
            with np.errstate(invalid='ignore'):
                second = np.where(share <= 1.0, mu2 * _kl(np.minimum(share, 1.0), q2), np.inf)
        else:
            second = np.where(s == 1.0, 0.0, np.inf)
        return -(first + second)

    grid = np.linspace(0.0, 1.0, SPLIT_GRID_STEPS + 1)
    values = terms(grid)
    if not np.any(np.isfinite(values)):
        return -math.inf
    scalar = lambda s: float(terms(np.float64(min(max(s, 0.0), 1.0))))
    _, best = _refine_maximum(scalar, grid, values, 0.0, 1.0, xtol)
    return best


def pair_rate(k: int, r: float, beta: float, alpha: float) -> float:
    """
    g(alpha) = h(alpha) + (1/n) ln E(alpha) for the critical-planted model.

    E(alpha) = (1-v1)^m1 (1-v2)^m2 Pr[Bin(m1, q1) + Bin(m2, q2) = m1] with
    m1 = (1+beta) k r n/(2^(k-1)-1), m2 = rn - m1.
    """
    _check_k(k)
    _check_r(r)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"pair_rate needs 0 < alpha < 1, got {alpha}")
    mu1 = support_degree(k, r, beta)
    if not 0.0 < mu1 < r:
        raise ParameterError(f"critical fraction mu1 = {mu1} must lie in (0, r = {r})")
    mu2 = r - mu1
    ov = overlap_params(k, alpha)
    q1 = ov.u1 / (1.0 - ov.v1)
    q2 = 0.0 if ov.empty_sum else ov.u2 / (1.0 - ov.v2)
    assert 0.0 <= q1 <= 1.0 + 1e-12 and 0.0 <= q2 <= 1.0 + 1e-12, "overlap probabilities out of range"
    q1, q2 = min(q1, 1.0), min(q2, 1.0)

    base = binary_entropy(alpha) + mu1 * math.log1p(-ov.v1) + mu2 * math.log1p(-ov.v2)
    return base + _split_rate(mu1, q1, mu2, q2)


# ---------------------------------------------------------------------------
# Laplace-type sums

class LaplaceSum(NamedTuple):
    sum_log: float
    ratio: float
    max_rate: float


def laplace_sum(rate: Callable, n: int) -> LaplaceSum:
    """
    ln sum_{d=1}^{n-1} exp(n rate(d/n)) and its ratio to exp(n max rate).

    The maximum is taken over (0, 1), refined around the best grid point.
    """
    if n < 10:
        raise ParameterError(f"laplace_sum needs n >= 10, got {n}")
    xs = np.arange(1, n) / n
    try:
        values = np.asarray(rate(xs), dtype=float)
        if values.shape != xs.shape:
            raise TypeError("rate is not vectorized")
    except (TypeError, ValueError):
        values = np.array([float(rate(float(x))) for x in xs])

    sum_log = float(logsumexp(n * values))
    scalar = lambda x: float(rate(float(x)))
    _, max_rate = _refine_maximum(scalar, xs, values, 0.0, 1.0, X_TOLERANCE)
    max_rate = max(max_rate, float(np.max(values)))
    return LaplaceSum(sum_log, math.exp(sum_log - n * max_rate), max_rate)


# ---------------------------------------------------------------------------
# cluster curve versus first moment

def cluster_first_moment_gap(k: int, lam: float) -> float:
    """Cluster upper-bound curve minus the first-moment rate at r(lambda)."""
    return local_cluster_rate(k, lam) + 7.0 ** (-k) - first_moment_rate(k, density_for_degree(k, lam))


class Crossing(NamedTuple):
    lo: float
    hi: float
    root: float


def cluster_crossing(k: int, lambda_grid: Sequence[float],
                     tol: float = R_TOLERANCE) -> Optional[Crossing]:
    """
    Locate where the cluster curve crosses the first-moment curve.

    Returns the first grid bracket with a sign change and the bisection root
    inside it, or None when the grid does not bracket a crossing.
    """
    grid = sorted(float(lam) for lam in lambda_grid)
    gaps = [cluster_first_moment_gap(k, lam) for lam in grid]
    for (a, fa), (b, fb) in zip(zip(grid, gaps), zip(grid[1:], gaps[1:])):
        if fa == 0.0:
            return Crossing(a, a, a)
        if (fa < 0) != (fb < 0):
            root = optimize.bisect(lambda lam: cluster_first_moment_gap(k, lam), a, b, xtol=tol)
            return Crossing(a, b, root)
    if gaps and gaps[-1] == 0.0:
        return Crossing(grid[-1], grid[-1], grid[-1])
    return None


class RateFunctionSet:
    """Evaluators of every rate function at fixed parameters."""

    def __init__(self, params: Params):
        self.params = params

    def h(self, x: float) -> float:
        return binary_entropy(x)

    def phi(self, x: float) -> float:
        return chernoff_phi(x)

    def psi(self, x: float) -> float:
        return psi(self.params.k, self.params.r, x)

    def g(self, alpha: float) -> float:
        return pair_rate(self.params.k, self.params.r, self.params.beta, alpha)

    def overlap(self, alpha: float) -> OverlapParams:
        return overlap_params(self.params.k, alpha)

    def q(self, alpha: float) -> Tuple[float, float]:
        return q_values(self.params.k, alpha)

    def xi(self, lam: Optional[float] = None) -> float:
        if lam is None:
            lam = self.params.lam if self.params.lam is not None else support_degree(
                self.params.k, self.params.r, self.params.beta)
        return local_cluster_rate(self.params.k, lam)

    def first_moment(self) -> float:
        return first_moment_rate(self.params.k, self.params.r)
