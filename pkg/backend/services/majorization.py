"""
Majorization

Ordering of weight vectors by majorization, the T-transform chain that
realizes it, h-split majorization, Kronecker products and the closure of
dominance relations between sample means X̄_a and X̄_b.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from errors import CapacityError, ParameterDomainError
from models import DominanceEdge, TTransform, WeightVector

logger = logging.getLogger(__name__)

MAJORIZATION_TOL = 1e-12
CHAIN_TOL = 1e-10
H_SPLIT_MAX_DIMENSION = 12
NETWORK_MAX_SIZE = 10_000

# Reference arrows of the dominance network for sample sizes up to 24
FIGURE_EDGES: Tuple[Tuple[int, int], ...] = (
    (2, 1), (3, 2), (4, 2), (6, 4), (6, 3), (8, 4), (9, 3), (9, 6), (10, 5),
    (12, 4), (12, 6), (14, 7), (15, 10), (16, 8), (18, 9), (18, 12), (20, 10),
    (21, 14), (22, 11), (24, 16), (24, 12),
)

Weights = Union[WeightVector, Sequence[float], np.ndarray]


def _array(weights: Weights) -> np.ndarray:
    entries = weights.entries if isinstance(weights, WeightVector) else weights
    vector = np.asarray(entries, dtype=float).ravel()
    if vector.size == 0 or np.any(~np.isfinite(vector)) or np.any(vector < 0):
        raise ParameterDomainError(f"weights must be finite and nonnegative, got {list(vector)}")
    return vector


def _padded(theta: Weights, eta: Weights) -> Tuple[np.ndarray, np.ndarray]:
    a, b = _array(theta), _array(eta)
    size = max(a.size, b.size)
    return np.pad(a, (0, size - a.size)), np.pad(b, (0, size - b.size))


def is_majorized(theta: Weights, eta: Weights, tol: float = MAJORIZATION_TOL) -> bool:
    """
    theta ≺ eta: equal totals and, with both sorted increasingly, every
    partial sum of theta at least the matching partial sum of eta.
    The shorter vector is padded with zeros.
    """
    a, b = _padded(theta, eta)
    scale = max(1.0, float(a.sum()), float(b.sum()))
    if abs(a.sum() - b.sum()) > tol * scale:
        return False
    partial_a = np.cumsum(np.sort(a))[:-1]
    partial_b = np.cumsum(np.sort(b))[:-1]
    return bool(np.all(partial_a >= partial_b - tol * scale))


def relation(theta: Weights, eta: Weights) -> str:
    """One of "=", "≺", "≻", "incomparable"."""
    below, above = is_majorized(theta, eta), is_majorized(eta, theta)
    if below and above:
        return "="
    if below:
        return "≺"
    if above:
        return "≻"
    return "incomparable"


def apply_chain(eta: Weights, chain: Iterable[TTransform]) -> np.ndarray:
    vector = _array(eta).copy()
    for step in chain:
        vi, vj = vector[step.i], vector[step.j]
        vector[step.i] = step.lam * vi + (1.0 - step.lam) * vj
        vector[step.j] = (1.0 - step.lam) * vi + step.lam * vj
    return vector


def t_transform_chain(theta: Weights, eta: Weights, tol: float = CHAIN_TOL) -> Optional[List[TTransform]]:
    """
    T-transforms taking eta to a permutation of theta, at most s-1 of them,
    or None when theta is not majorized by eta.

    Works on the decreasing rearrangements: take the last coordinate j where
    eta exceeds theta and the first later coordinate k where it falls short,
    and move min(eta_j - theta_j, theta_k - eta_k) from j to k. After every
    step the partial vector must still majorize theta to within `tol`.
    """
    if not is_majorized(theta, eta):
        logger.debug("no T-transform chain: theta is not majorized by eta")
        return None
    target_raw, current = _padded(theta, eta)
    target = np.sort(target_raw)[::-1]
    current = current.copy()
    scale = max(1.0, float(current.sum()))
    chain: List[TTransform] = []

    for _ in range(2 * current.size):
        order = np.argsort(-current, kind="stable")
        ordered = current[order]
        gap = ordered - target
        if np.all(np.abs(gap) <= tol * scale):
            break
        donors = np.flatnonzero(gap > tol * scale)
        j = int(donors[-1])
        receivers = np.flatnonzero(gap[j + 1:] < -tol * scale)
        k = j + 1 + int(receivers[0])
        delta = min(gap[j], -gap[k])
        lam = 1.0 - delta / (ordered[j] - ordered[k])
        step = TTransform(i=int(order[j]), j=int(order[k]), lam=float(np.clip(lam, 0.0, 1.0)))
        chain.append(step)
        current = apply_chain(current, [step])
        if not is_majorized(target, current, tol=tol):
            raise RuntimeError(f"T-transform step {len(chain)} lost majorization: {step.describe()}")
    if np.any(np.abs(np.sort(current)[::-1] - target) > tol * scale):
        raise RuntimeError("T-transform chain did not converge")
    logger.debug(f"T-transform chain of length {len(chain)}")
    return chain


# ============================================================================
# H-SPLIT MAJORIZATION
# ============================================================================

def _key(value: float) -> Fraction:
    """Exact rational for a weight; short decimals and simple fractions are recovered"""
    exact = Fraction(value)
    simple = exact.limit_denominator(10**9)
    if abs(float(simple) - value) <= MAJORIZATION_TOL:
        return simple
    return exact


@lru_cache(maxsize=65536)
def _reachable(items: Tuple[Fraction, ...], total: Fraction) -> bool:
    """Can `total` be split into `items` by repeated splits into equal parts?"""
    if len(items) == 1:
        return items[0] == total
    if sum(items) != total:
        return False
    for parts in range(2, len(items) + 1):
        if _split(items, parts, total / parts):
            return True
    return False


@lru_cache(maxsize=65536)
def _split(items: Tuple[Fraction, ...], parts: int, share: Fraction) -> bool:
    """Partition `items` into `parts` groups, each reachable from `share`"""
    if parts == 1:
        return _reachable(items, share)
    first, rest = items[0], items[1:]
    for size in range(0, len(rest) - parts + 2):
        for picked in combinations(range(len(rest)), size):
            group = (first,) + tuple(rest[p] for p in picked)
            if sum(group) != share:
                continue
            remaining = tuple(rest[p] for p in range(len(rest)) if p not in picked)
            if _reachable(tuple(sorted(group, reverse=True)), share) and _split(remaining, parts - 1, share):
                return True
    return False


def _assign(items: Tuple[Fraction, ...], targets: Tuple[Fraction, ...]) -> bool:
    """Partition items into one reachable group per target"""
    if not targets:
        return not items
    target, rest_targets = targets[0], targets[1:]
    for size in range(1, len(items) - len(rest_targets) + 1):
        for picked in combinations(range(len(items)), size):
            group = tuple(items[p] for p in picked)
            if sum(group) != target:
                continue
            remaining = tuple(items[p] for p in range(len(items)) if p not in picked)
            if _reachable(group, target) and _assign(remaining, rest_targets):
                return True
    return False


def is_h_split_majorized(theta: Weights, eta: Weights) -> bool:
    """
    theta is obtained from eta by repeatedly splitting a coordinate into
    h >= 2 equal parts (h may vary between steps).

    Raises:
        CapacityError: theta has more than 12 coordinates
    """
    a, b = _array(theta), _array(eta)
    if a.size > H_SPLIT_MAX_DIMENSION:
        raise CapacityError(f"h-split search is limited to dimension {H_SPLIT_MAX_DIMENSION}, got {a.size}")
    a, b = a[a > 0], b[b > 0]
    if a.size < b.size:
        return False
    items = tuple(sorted((_key(v) for v in a), reverse=True))
    targets = tuple(sorted((_key(v) for v in b), reverse=True))
    return _assign(items, targets)


# ============================================================================
# CONSTRUCTIONS
# ============================================================================

def kronecker(theta: Weights, pi: Weights) -> WeightVector:
    """Kronecker product theta ⊗ pi (length s*t)"""
    return WeightVector(entries=tuple(np.kron(_array(theta), _array(pi)).tolist()))


def sample_mean_weights(s: int) -> WeightVector:
    return WeightVector.sample_mean(s)


def mixture_bound_weights(s: int, t: int, k: int) -> WeightVector:
    """
    Weights of (s/(s+k)) X̄_t + (k/(s+k)) X̄_k over t + k independent copies.

    For X̄_s ≥st X̄_t and X̄_s ≥st X̄_k this combination is dominated by X̄_s.
    """
    if min(s, t, k) < 1:
        raise ParameterDomainError(f"sizes must be >= 1, got s={s}, t={t}, k={k}")
    return WeightVector(entries=(s / ((s + k) * t),) * t + (1.0 / (s + k),) * k)


def dominance_network(base: Iterable[Tuple[int, int]], max_size: int) -> List[DominanceEdge]:
    """
    Close base relations X̄_a ≥st X̄_b (a > b) under scaling (ka, kb) and transitivity.

    Args:
        base: Pairs (a, b) with a > b >= 1
        max_size: Largest sample size kept, at most 10 000

    Returns:
        Every derivable edge with both ends <= max_size, sorted by (larger, smaller)
    """
    if not 1 <= max_size <= NETWORK_MAX_SIZE:
        raise ParameterDomainError(f"network size must be in [1, {NETWORK_MAX_SIZE}], got {max_size}")
    edges: Set[Tuple[int, int]] = set()
    for larger, smaller in base:
        if not larger > smaller >= 1:
            raise ParameterDomainError(f"base relation needs a > b >= 1, got {larger} -> {smaller}")
        if larger <= max_size:
            edges.add((larger, smaller))

    changed = True
    while changed:
        changed = False
        scaled = {
            (larger * factor, smaller * factor)
            for larger, smaller in edges
            for factor in range(2, max_size // larger + 1)
        }
        new = scaled - edges
        if new:
            edges |= new
            changed = True

        below: dict = {}
        for larger, smaller in edges:
            below.setdefault(larger, set()).add(smaller)
        for node in sorted(below):
            reach = set(below[node])
            frontier = list(reach)
            while frontier:
                nxt = frontier.pop()
                for further in below.get(nxt, ()):
                    if further not in reach:
                        reach.add(further)
                        frontier.append(further)
            for smaller in reach - below[node]:
                edges.add((node, smaller))
                changed = True

    logger.info(f"dominance network up to {max_size}: {len(edges)} edges")
    return [DominanceEdge(larger=a, smaller=b) for a, b in sorted(edges)]
