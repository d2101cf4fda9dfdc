"""
Linear Combination CDFs

CDF of a weighted sum of i.i.d. copies, sum(theta_i * X_i), built from the
weighted convolution operator L(theta1, theta2, F)(G)(x) = int G((x - theta2*t)/theta1) dF(t):
- exact enumeration of tuple sums for small samples
- the grid recursion (level 2 exact by binary search, later levels interpolated)
- iterated quadrature for parametric families, exact pmf convolution for discrete ones

Evaluation for a fixed set of sample values goes through a plan object
(ExactPlan / GridPlan) so that reweighted samples, as produced by the
bootstrap, are evaluated without redoing the sorting and searching.
"""

import copy
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from errors import CapabilityError, CapacityError, GridRangeError, ParameterDomainError
from models import EvaluatorMode, FamilySpec, GridSpacing, GridSpec, WeightVector

from .distributions import (
    DiscreteDistribution,
    _quantile_array,
    cdf as family_cdf,
    is_discrete,
    quantile as family_quantile,
    to_discrete,
)
from .empirical import EmpiricalCDF, Sample

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 20_000_000
CONVOLUTION_TOL = 1e-8
PARAMETRIC_TOL = 1e-6

# Largest (rows x observations) block materialized at once
_CHUNK_ELEMENTS = 1 << 22

WeightsLike = Union[WeightVector, str, Sequence[float]]


def as_weights(theta: WeightsLike) -> WeightVector:
    if isinstance(theta, WeightVector):
        return theta
    if isinstance(theta, np.ndarray):
        theta = tuple(theta.tolist())
    try:
        return WeightVector.model_validate(theta)
    except ValueError as exc:
        raise ParameterDomainError(f"invalid weight vector {theta!r}: {exc}") from exc


def canonical_order(theta: WeightsLike) -> np.ndarray:
    """Weights sorted in decreasing order; i.i.d. summands make the order irrelevant"""
    return np.sort(np.asarray(as_weights(theta).entries, dtype=float))[::-1]


def _row_chunks(rows: int, cols: int) -> Iterable[slice]:
    step = max(1, _CHUNK_ELEMENTS // max(cols, 1))
    for start in range(0, rows, step):
        yield slice(start, min(rows, start + step))


# ============================================================================
# COMBINATION CDF
# ============================================================================

@dataclass(frozen=True, eq=False)
class CombinationCDF:
    """
    CDF of a linear combination.

    kind "exact": right-continuous steps; `values[i]` is the CDF on
    [points[i], points[i+1]).
    kind "grid": CDF values at grid points, linear in between, 0 below the
    grid and 1 above it.

    `slack` bounds the mass missing from a truncated discrete support: the
    true CDF lies in [value, value + slack].
    """
    kind: str
    points: np.ndarray
    values: np.ndarray
    slack: float = 0.0

    def __post_init__(self):
        if self.kind not in ("exact", "grid"):
            raise ParameterDomainError(f"unknown representation '{self.kind}'")
        if self.points.shape != self.values.shape or self.points.ndim != 1:
            raise ParameterDomainError("points and values must be 1-d arrays of equal length")
        self.points.setflags(write=False)
        self.values.setflags(write=False)

    def __call__(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        x_arr = np.asarray(x, dtype=float)
        if self.kind == "exact":
            positions = np.searchsorted(self.points, x_arr, side="right")
            result = np.where(positions > 0, self.values[np.maximum(positions - 1, 0)], 0.0)
        else:
            result = np.interp(x_arr, self.points, self.values, left=0.0, right=1.0)
        if np.ndim(x) == 0:
            return float(result)
        return result

    @property
    def masses(self) -> np.ndarray:
        if self.kind != "exact":
            raise ParameterDomainError("only exact CDFs have jump masses")
        return np.diff(self.values, prepend=0.0)

    def curve(self) -> List[Tuple[float, float]]:
        """(x, value) pairs, nondecreasing in value"""
        return list(zip(self.points.tolist(), self.values.tolist()))


# ============================================================================
# GRIDS
# ============================================================================

def _layout(spec: GridSpec, lo: float, hi: float, center: float, scale: float) -> np.ndarray:
    if spec.lo is not None:
        lo, hi = spec.lo, spec.hi
    else:
        width = hi - lo
        pad = spec.pad * width if width > 0 else spec.pad * max(abs(lo), 1.0) + 1e-12
        lo, hi = lo - pad, hi + pad

    if spec.spacing == GridSpacing.ASINH and math.isfinite(scale) and scale > 0:
        u_lo, u_hi = np.arcsinh((np.array([lo, hi]) - center) / scale)
        grid = center + scale * np.sinh(np.linspace(u_lo, u_hi, spec.points))
        grid[0], grid[-1] = lo, hi
        if np.all(np.diff(grid) > 0):
            return grid
        logger.debug("asinh grid collapsed, falling back to linear spacing")
    return np.linspace(lo, hi, spec.points)


def sample_grid(spec: GridSpec, values: np.ndarray, thetas: Sequence[WeightsLike]) -> np.ndarray:
    """
    Grid covering the support of every combination sum(theta_i X_i) of the sample.

    Raises:
        GridRangeError: explicit lo/hi that do not cover the support
    """
    totals = [as_weights(theta).total for theta in thetas]
    v_min, v_max = float(values.min()), float(values.max())
    lo = min(total * v_min for total in totals)
    hi = max(total * v_max for total in totals)
    if spec.lo is not None and (spec.lo > lo or spec.hi < hi):
        raise GridRangeError(
            f"grid [{spec.lo:g}, {spec.hi:g}] does not cover the support [{lo:g}, {hi:g}]"
        )
    mean_total = float(np.mean(totals))
    q25, median, q75 = np.quantile(values, [0.25, 0.5, 0.75])
    scale = (q75 - q25) * mean_total
    if scale <= 0:
        scale = (hi - lo) / spec.points
    grid = _layout(spec, lo, hi, median * mean_total, scale)
    logger.debug(f"sample grid: {spec.points} points on [{grid[0]:.6g}, {grid[-1]:.6g}]")
    return grid


def robust_location_scale(values: np.ndarray) -> Tuple[float, float]:
    """Median and interquartile range, falling back to the range when the IQR is 0"""
    q25, median, q75 = np.quantile(values, [0.25, 0.5, 0.75])
    scale = float(q75 - q25)
    if scale <= 0:
        scale = float(values.max() - values.min())
    return float(median), scale


def family_grid(spec: GridSpec, family: FamilySpec, thetas: Sequence[WeightsLike]) -> np.ndarray:
    """Grid over the central 99.9% of every combination of a parametric family"""
    totals = [as_weights(theta).total for theta in thetas]
    q_lo, q25, median, q75, q_hi = (
        float(value) for value in family_quantile(family, np.array([0.0005, 0.25, 0.5, 0.75, 0.9995]))
    )
    lo = min(total * q_lo for total in totals)
    hi = max(total * q_hi for total in totals)
    mean_total = float(np.mean(totals))
    return _layout(spec, lo, hi, median * mean_total, (q75 - q25) * mean_total)


# ============================================================================
# EVALUATION PLANS
# ============================================================================

class ExactPlan:
    """
    Sorted tuple sums of sum(theta_i * v_{j_i}) over all index tuples.

    evaluate(weights) returns the CDF at `points` for the weighted sample
    with these values; the mass of a tuple is the product of its weights.
    """

    def __init__(self, values: np.ndarray, theta: WeightsLike, budget: int = DEFAULT_BUDGET):
        thetas = canonical_order(theta)
        n, s = values.size, thetas.size
        tuples = n ** s
        if tuples > budget:
            raise CapacityError(
                f"exact enumeration needs {tuples} tuples (budget {budget}); use the grid evaluator"
            )
        sums = thetas[0] * values
        for weight in thetas[1:]:
            sums = np.add.outer(sums, weight * values).ravel()

        self.dimension = s
        self.order = np.argsort(sums, kind="stable")
        self.sorted_sums = sums[self.order]
        self.jumps = np.unique(self.sorted_sums)
        self.points = self.jumps
        self._positions = np.searchsorted(self.sorted_sums, self.points, side="right")
        logger.debug(f"exact plan: {tuples} tuples, {self.jumps.size} distinct sums")

    def on(self, points: np.ndarray) -> "ExactPlan":
        """Same plan evaluated at other points"""
        plan = copy.copy(self)
        plan.points = points
        plan._positions = np.searchsorted(self.sorted_sums, points, side="right")
        return plan

    def evaluate(self, weights: np.ndarray) -> np.ndarray:
        masses = weights
        for _ in range(self.dimension - 1):
            masses = np.multiply.outer(masses, weights).ravel()
        cumulative = np.cumsum(masses[self.order])
        positions = self._positions
        values = np.where(positions > 0, cumulative[np.maximum(positions - 1, 0)], 0.0)
        return np.clip(values, 0.0, 1.0)


class GridPlan:
    """
    Grid recursion for fixed sample values.

    Level 2 keeps, for each grid point x and observation i, the position of
    (x - theta_2 v_i)/theta_1 among the values, so the level is exact. Each
    later level keeps the bracketing grid cell and interpolation fraction of
    x - theta_k v_i. Cost per evaluation is O(s * P * n).
    """

    def __init__(self, values: np.ndarray, theta: WeightsLike, grid: np.ndarray):
        thetas = canonical_order(theta)
        self.points = grid
        self.dimension = thetas.size
        size = grid.size

        if self.dimension == 1:
            self._first = np.searchsorted(values, grid / thetas[0], side="right")
        else:
            self._first = np.empty((size, values.size), dtype=np.int32)
            for rows in _row_chunks(size, values.size):
                args = (grid[rows, None] - thetas[1] * values[None, :]) / thetas[0]
                self._first[rows] = np.searchsorted(values, args, side="right")

        self._levels = []
        for weight in thetas[2:]:
            lower = np.empty((size, values.size), dtype=np.int32)
            fraction = np.empty((size, values.size), dtype=float)
            for rows in _row_chunks(size, values.size):
                args = grid[rows, None] - weight * values[None, :]
                cell = np.searchsorted(grid, args, side="right") - 1
                clipped = np.clip(cell, 0, size - 2)
                frac = (args - grid[clipped]) / (grid[clipped + 1] - grid[clipped])
                # extended level array: [0, level..., 1]
                low = clipped + 1
                below, above = cell < 0, cell >= size - 1
                low[below], frac[below] = 0, 0.0
                low[above], frac[above] = size, 1.0
                lower[rows], fraction[rows] = low, frac
            self._levels.append((lower, fraction))
        logger.debug(f"grid plan: {size} points, {values.size} values, {self.dimension} levels")

    def evaluate(self, weights: np.ndarray) -> np.ndarray:
        cumulative = np.concatenate(([0.0], np.cumsum(weights)))
        if self.dimension == 1:
            level = cumulative[self._first]
        else:
            level = cumulative[self._first] @ weights
            for lower, fraction in self._levels:
                extended = np.concatenate(([0.0], level, [1.0]))
                interpolated = extended[lower] * (1.0 - fraction) + extended[lower + 1] * fraction
                level = interpolated @ weights
        return np.maximum.accumulate(np.clip(level, 0.0, 1.0))


@dataclass
class PairPlan:
    """Two plans on one shared evaluation set, for sup-differences A - B"""
    mode: EvaluatorMode
    points: np.ndarray
    first: Union[ExactPlan, GridPlan]
    second: Union[ExactPlan, GridPlan]

    def differences(self, weights: np.ndarray) -> np.ndarray:
        return self.first.evaluate(weights) - self.second.evaluate(weights)


def choose_mode(n: int, thetas: Sequence[WeightsLike], mode: EvaluatorMode, budget: int) -> EvaluatorMode:
    """Exact when every enumeration fits the budget (auto), else grid"""
    if mode != EvaluatorMode.AUTO:
        return mode
    fits = all(n ** as_weights(theta).dimension <= budget for theta in thetas)
    return EvaluatorMode.EXACT if fits else EvaluatorMode.GRID


def build_pair_plan(
    values: np.ndarray,
    theta: WeightsLike,
    eta: WeightsLike,
    *,
    mode: EvaluatorMode = EvaluatorMode.AUTO,
    grid: Optional[GridSpec] = None,
    budget: int = DEFAULT_BUDGET,
    points: Optional[np.ndarray] = None,
) -> PairPlan:
    """
    Plans for sum(theta X) and sum(eta X) on the sample values.

    Exact mode evaluates on the union of both jump sets; grid mode on one
    grid covering both supports, or on `points` when given.
    """
    resolved = choose_mode(values.size, [theta, eta], mode, budget)
    if resolved == EvaluatorMode.EXACT:
        first, second = ExactPlan(values, theta, budget), ExactPlan(values, eta, budget)
        jumps = np.union1d(first.jumps, second.jumps)
        return PairPlan(resolved, jumps, first.on(jumps), second.on(jumps))

    grid_points = points if points is not None else sample_grid(grid or GridSpec(), values, [theta, eta])
    return PairPlan(resolved, grid_points, GridPlan(values, theta, grid_points), GridPlan(values, eta, grid_points))


# ============================================================================
# OPERATIONS
# ============================================================================

CDFLike = Union[EmpiricalCDF, CombinationCDF, DiscreteDistribution, FamilySpec, Callable]


def _as_callable(G: CDFLike) -> Callable:
    if isinstance(G, FamilySpec):
        return lambda x: family_cdf(G, x)
    if isinstance(G, DiscreteDistribution):
        return G.cdf
    return G


def weighted_convolution(theta1: float, theta2: float, F: CDFLike, G: CDFLike, x: Union[float, np.ndarray]):
    """
    L(theta1, theta2, F)(G)(x) = int G((x - theta2*t)/theta1) dF(t).

    Args:
        theta1: Scale of the G argument, > 0
        theta2: Weight of the integration variable, >= 0
        F: Empirical or discrete CDF (finite sum over atoms) or a FamilySpec
           (adaptive quadrature over probabilities, absolute tolerance 1e-8)
        G: Any evaluable CDF
        x: Scalar or array

    Raises:
        ParameterDomainError: theta1 <= 0 or theta2 < 0
    """
    if not theta1 > 0 or not theta2 >= 0:
        raise ParameterDomainError(f"weighted convolution needs theta1 > 0 and theta2 >= 0, got {theta1}, {theta2}")
    g = _as_callable(G)
    points = np.atleast_1d(np.asarray(x, dtype=float))

    if theta2 == 0:
        result = np.asarray(g(points / theta1), dtype=float)
    elif isinstance(F, (EmpiricalCDF, DiscreteDistribution)):
        if isinstance(F, EmpiricalCDF):
            atoms, masses = F.sample.values, F.sample.weights
        else:
            atoms, masses = F.support, F.pmf
        result = np.empty(points.size)
        for rows in _row_chunks(points.size, atoms.size):
            args = (points[rows, None] - theta2 * atoms[None, :]) / theta1
            result[rows] = np.asarray(g(args), dtype=float) @ masses
    elif isinstance(F, FamilySpec):
        if is_discrete(F):
            return weighted_convolution(theta1, theta2, to_discrete(F), G, x)

        def integrand(p):
            t = float(_quantile_array(F, np.array(p)))
            return np.asarray(g((points - theta2 * t) / theta1), dtype=float)

        result, _ = integrate.quad_vec(integrand, 0.0, 1.0, epsabs=CONVOLUTION_TOL, epsrel=0.0, norm="max")
    else:
        raise CapabilityError(f"cannot integrate against {type(F).__name__}")

    result = np.clip(result, 0.0, 1.0)
    if np.ndim(x) == 0:
        return float(result[0])
    return result


def exact_combination_cdf(sample: Sample, theta: WeightsLike, budget: int = DEFAULT_BUDGET) -> CombinationCDF:
    """
    Plug-in CDF by direct enumeration of all n^s index tuples.

    Raises:
        CapacityError: n^s above the enumeration budget
    """
    plan = ExactPlan(sample.values, theta, budget)
    return CombinationCDF("exact", plan.jumps, plan.evaluate(sample.weights))


def grid_combination_cdf(
    sample: Sample, theta: WeightsLike, grid: Union[GridSpec, np.ndarray, None] = None
) -> CombinationCDF:
    """
    Plug-in CDF on a grid by the level recursion.

    Raises:
        GridRangeError: explicit grid range not covering the support
    """
    if isinstance(grid, np.ndarray):
        grid_points = grid
        weights = as_weights(theta)
        if grid[0] > weights.total * sample.values[0] or grid[-1] < weights.total * sample.values[-1]:
            raise GridRangeError("grid does not cover the support of the combination")
    else:
        grid_points = sample_grid(grid or GridSpec(), sample.values, [theta])
    plan = GridPlan(sample.values, theta, grid_points)
    return CombinationCDF("grid", grid_points, plan.evaluate(sample.weights))


def parametric_combination_cdf(
    spec: Union[FamilySpec, DiscreteDistribution],
    theta: WeightsLike,
    grid: Optional[GridSpec] = None,
    *,
    tol: float = PARAMETRIC_TOL,
    budget: int = DEFAULT_BUDGET,
) -> CombinationCDF:
    """
    True CDF of sum(theta_i X_i) for a family.

    Continuous families: level 2 by quadrature of the closed-form CDF, each
    later level by quadrature of the interpolated previous level. Discrete
    families: exact convolution of the stored pmf; `slack` carries the
    truncated mass accumulated over the s summands.
    """
    thetas = canonical_order(theta)
    if isinstance(spec, DiscreteDistribution) or is_discrete(spec):
        dist = spec if isinstance(spec, DiscreteDistribution) else to_discrete(spec)
        plan = ExactPlan(dist.support, thetas, budget)
        slack = -math.expm1(thetas.size * math.log1p(-dist.truncation_mass)) if dist.truncation_mass else 0.0
        return CombinationCDF("exact", plan.jumps, plan.evaluate(dist.pmf), slack=slack)
    if not isinstance(spec, FamilySpec):
        raise CapabilityError(f"unsupported family {spec!r}")

    grid_points = family_grid(grid or GridSpec(), spec, [thetas])
    if thetas.size == 1:
        level = np.asarray(family_cdf(spec, grid_points / thetas[0]))
    else:
        def closed_form_level(p):
            t = float(_quantile_array(spec, np.array(p)))
            return np.asarray(family_cdf(spec, (grid_points - thetas[1] * t) / thetas[0]))

        level, error = integrate.quad_vec(closed_form_level, 0.0, 1.0, epsabs=tol, epsrel=0.0, norm="max")
        for weight in thetas[2:]:
            previous = level

            def interpolated_level(p, previous=previous, weight=weight):
                t = float(_quantile_array(spec, np.array(p)))
                return np.interp(grid_points - weight * t, grid_points, previous, left=0.0, right=1.0)

            level, error = integrate.quad_vec(interpolated_level, 0.0, 1.0, epsabs=tol, epsrel=0.0, norm="max")
        if error > tol:
            logger.warning(f"quadrature for {spec.label} stopped at error {error:.2e} (tolerance {tol:.0e})")

    values = np.maximum.accumulate(np.clip(level, 0.0, 1.0))
    return CombinationCDF("grid", grid_points, values)


def _evaluation_points(A: CombinationCDF, B: CombinationCDF) -> np.ndarray:
    if A.points is B.points:
        return A.points
    return np.union1d(A.points, B.points)


def sup_positive_diff(A: CombinationCDF, B: CombinationCDF) -> Tuple[float, float]:
    """
    T = max over the evaluation set of max(0, A(x) - B(x)) and the smallest x attaining it.

    The evaluation set is the union of both point sets. With truncated
    discrete CDFs B is taken at its upper bound, so T is a certified value.
    """
    points = _evaluation_points(A, B)
    positive = np.maximum(np.asarray(A(points)) - np.asarray(B(points)) - B.slack, 0.0)
    index = int(np.argmax(positive))
    return float(positive[index]), float(points[index])


def sup_abs_diff(A: CombinationCDF, B: CombinationCDF) -> float:
    points = _evaluation_points(A, B)
    return float(np.max(np.abs(np.asarray(A(points)) - np.asarray(B(points)))))


@dataclass(frozen=True)
class DominanceCheck:
    """larger >=st smaller holds when its CDF never exceeds the other's by more than tol"""
    holds: bool
    violation: float
    witness: float


def check_dominance(larger: CombinationCDF, smaller: CombinationCDF, tol: float = 1e-9) -> DominanceCheck:
    """
    Numeric verification of larger >=st smaller, i.e. F_larger <= F_smaller.

    `holds` uses the upper bound of F_larger against the lower bound of
    F_smaller; `violation` is the certified positive part (lower against upper).
    """
    points = _evaluation_points(larger, smaller)
    upper_gap = np.asarray(larger(points)) + larger.slack - np.asarray(smaller(points))
    violation, witness = sup_positive_diff(larger, smaller)
    return DominanceCheck(holds=bool(np.max(upper_gap) <= tol), violation=violation, witness=witness)


def combination_curves(
    source: Union[FamilySpec, Sample],
    thetas: Sequence[WeightsLike],
    grid: Optional[GridSpec] = None,
) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    CDFs of several combinations on one common set of points, for plotting.

    A family gives the true CDFs, a sample the plug-in estimates (exact when
    the enumeration fits the budget, the grid recursion otherwise).
    """
    grid = grid or GridSpec()
    if isinstance(source, Sample):
        points = sample_grid(grid, source.values, thetas)
        curves = []
        for theta in thetas:
            mode = choose_mode(source.n, [theta], EvaluatorMode.AUTO, DEFAULT_BUDGET)
            if mode == EvaluatorMode.EXACT:
                combination = exact_combination_cdf(source, theta)
            else:
                combination = grid_combination_cdf(source, theta, points)
            curves.append(np.asarray(combination(points)))
        return points, curves

    combinations = [parametric_combination_cdf(source, theta, grid) for theta in thetas]
    if is_discrete(source):
        # jump points up to where every curve has reached 0.999
        points = np.unique(np.concatenate([c.points for c in combinations]))
        reached = np.min([np.asarray(c(points)) for c in combinations], axis=0) >= 0.999
        points = points[: int(np.argmax(reached)) + 1] if reached.any() else points
    else:
        points = family_grid(grid, source, thetas)
    return points, [np.asarray(c(points)) for c in combinations]
