"""
Stochastic Dominance Tests

Null hypothesis: sum(theta_i X_i) >=st sum(eta_i X_i), i.e. the plug-in CDF
of the theta combination never exceeds the eta one. Statistic: the
positive part T = sup max(0, F_n,theta - F_n,eta), scaled by sqrt(n).

Critical values:
- cauchy: Monte Carlo distribution of sqrt(n) T under standard Cauchy data,
  where every combination with equal weight totals has the same law
- bootstrap: sqrt(n) sup |D* - D| over reweighted resamples, D the
  difference of the two plug-in CDFs
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from config import settings
from errors import UnsupportedConfigurationError
from models import EvaluatorMode, FamilyKind, FamilySpec, TestConfig, TestMethod, TestResult, WeightVector

from .combine import (
    PairPlan,
    WeightsLike,
    as_weights,
    build_pair_plan,
    choose_mode,
    robust_location_scale,
    sample_grid,
)
from .distributions import sample as draw_family
from .empirical import Sample, bootstrap_counts, derived_rng

logger = logging.getLogger(__name__)

EQUAL_TOTAL_TOL = 1e-9
REFERENCE_QUANTILES = {"q50": 0.5, "q90": 0.9, "q95": 0.95, "q99": 0.99}

_CAUCHY = FamilySpec(kind=FamilyKind.CAUCHY)


def _positive_sup(differences: np.ndarray, points: np.ndarray) -> Tuple[float, float]:
    positive = np.maximum(differences, 0.0)
    index = int(np.argmax(positive))
    return float(positive[index]), float(points[index])


def _plan(values: np.ndarray, theta: WeightsLike, eta: WeightsLike, cfg: TestConfig) -> PairPlan:
    return build_pair_plan(values, theta, eta, mode=cfg.mode, grid=cfg.grid, budget=cfg.budget)


def _chunks(count: int, workers: int) -> List[range]:
    pieces = max(1, min(count, workers * 4))
    bounds = np.linspace(0, count, pieces + 1).astype(int)
    return [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def _quantile(draws: np.ndarray, level: float) -> float:
    return float(np.quantile(draws, level, method="inverted_cdf"))


def test_statistic(
    sample: Sample, theta: WeightsLike, eta: WeightsLike, cfg: Optional[TestConfig] = None
) -> Tuple[float, float]:
    """
    T = sup over the evaluation set of max(0, F_n,theta(x) - F_n,eta(x)).

    Returns:
        (T, witness_x), witness_x the smallest point attaining T
    """
    cfg = cfg or TestConfig()
    plan = _plan(sample.values, theta, eta, cfg)
    return _positive_sup(plan.differences(sample.weights), plan.points)


# not a pytest test despite the name
test_statistic.__test__ = False


# ============================================================================
# CAUCHY CALIBRATION
# ============================================================================

def _equal_totals(theta: WeightVector, eta: WeightVector) -> Tuple[WeightVector, WeightVector]:
    if abs(theta.total - eta.total) > EQUAL_TOTAL_TOL:
        raise UnsupportedConfigurationError(
            f"the Cauchy test needs equal weight totals, got {theta.total:g} and {eta.total:g}"
        )
    total = theta.total
    return (
        WeightVector(entries=tuple(v / total for v in theta.entries)),
        WeightVector(entries=tuple(v / total for v in eta.entries)),
    )


def _in_units(values: np.ndarray, points: np.ndarray) -> Optional[np.ndarray]:
    """`points` in median/IQR units of the sample `values`"""
    center, scale = robust_location_scale(values)
    if scale <= 0:
        return None
    return (points - center) / scale


def _cauchy_draws(
    n: int, theta: WeightVector, eta: WeightVector, cfg: TestConfig, indices: Sequence[int], unit_grid: Optional[np.ndarray]
) -> np.ndarray:
    scaled = np.empty(len(indices))
    for position, index in enumerate(indices):
        rng = derived_rng(cfg.seed, index)
        sample = Sample.from_values(draw_family(_CAUCHY, n, rng))
        standardized = None if unit_grid is None else _in_units(sample.values, sample.values)
        if standardized is None:
            plan = _plan(sample.values, theta, eta, cfg)
        else:
            plan = build_pair_plan(standardized, theta, eta, mode=EvaluatorMode.GRID, points=unit_grid, budget=cfg.budget)
        statistic, _ = _positive_sup(plan.differences(sample.weights), plan.points)
        scaled[position] = math.sqrt(n) * statistic
    return scaled


def cauchy_reference(
    n: int, theta: WeightsLike, eta: WeightsLike, cfg: TestConfig, unit_grid: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    sqrt(n) T for cfg.reps standard Cauchy samples of size n.

    Draw m uses its own generator derived from (cfg.seed, m). In grid mode
    every draw is evaluated on one grid in median/IQR units: `unit_grid`
    when given (the observed sample's grid), otherwise the grid of a pilot
    Cauchy sample.
    """
    theta_w, eta_w = _equal_totals(as_weights(theta), as_weights(eta))
    if unit_grid is None and choose_mode(n, [theta_w, eta_w], cfg.mode, cfg.budget) == EvaluatorMode.GRID:
        pilot = np.sort(draw_family(_CAUCHY, n, derived_rng(cfg.seed, 0, 1)))
        spec = cfg.grid.model_copy(update={"lo": None, "hi": None})
        unit_grid = _in_units(pilot, sample_grid(spec, pilot, [theta_w, eta_w]))
    workers = settings.resolved_workers(cfg.workers)
    parts = Parallel(n_jobs=workers)(
        delayed(_cauchy_draws)(n, theta_w, eta_w, cfg, list(chunk), unit_grid) for chunk in _chunks(cfg.reps, workers)
    )
    reference = np.concatenate(parts)
    logger.info(f"Cauchy reference: n={n}, {cfg.reps} draws, 95% quantile {_quantile(reference, 0.95):.4f}")
    return reference


def cauchy_test(
    sample: Sample,
    theta: WeightsLike,
    eta: WeightsLike,
    cfg: Optional[TestConfig] = None,
    reference: Optional[np.ndarray] = None,
) -> TestResult:
    """
    Cauchy-calibrated test.

    p = (1 + #{draws >= observed}) / (reps + 1); reject when the observed
    scaled statistic reaches the empirical (1 - alpha) quantile of the draws.

    Raises:
        UnsupportedConfigurationError: weight totals differ
    """
    cfg = cfg or TestConfig(method=TestMethod.CAUCHY)
    theta_w, eta_w = _equal_totals(as_weights(theta), as_weights(eta))
    plan = _plan(sample.values, theta_w, eta_w, cfg)
    statistic, witness = _positive_sup(plan.differences(sample.weights), plan.points)
    observed = math.sqrt(sample.n) * statistic

    if reference is None:
        unit_grid = _in_units(sample.values, plan.points) if plan.mode == EvaluatorMode.GRID else None
        reference = cauchy_reference(sample.n, theta_w, eta_w, cfg, unit_grid=unit_grid)
    critical = _quantile(reference, 1.0 - cfg.alpha)
    p_value = (1.0 + float(np.count_nonzero(reference >= observed))) / (reference.size + 1.0)

    return TestResult(
        statistic=statistic,
        scaled_statistic=observed,
        critical_value=critical,
        p_value=p_value,
        reject=observed >= critical,
        witness_x=witness,
        method=TestMethod.CAUCHY,
        mode=plan.mode,
        n=sample.n,
        reps=int(reference.size),
        alpha=cfg.alpha,
        seed=cfg.seed,
        grid_points=cfg.grid.points if plan.mode == EvaluatorMode.GRID else None,
        reference_quantiles={key: _quantile(reference, level) for key, level in REFERENCE_QUANTILES.items()},
    )


# ============================================================================
# BOOTSTRAP CALIBRATION
# ============================================================================

def _bootstrap_draws(plan: PairPlan, observed: np.ndarray, n: int, seed: int, indices: Sequence[int]) -> np.ndarray:
    draws = np.empty(len(indices))
    for position, index in enumerate(indices):
        weights = bootstrap_counts(n, derived_rng(seed, index)) / n
        draws[position] = math.sqrt(n) * float(np.max(np.abs(plan.differences(weights) - observed)))
    return draws


def bootstrap_test(sample: Sample, theta: WeightsLike, eta: WeightsLike, cfg: Optional[TestConfig] = None) -> TestResult:
    """
    Bootstrap-calibrated test.

    Each resample reweights the observed values; the plan built on them is
    reused for every resample. p = mean(draws > observed); reject when the
    observed scaled statistic exceeds the (1 - alpha) quantile of the draws.
    """
    cfg = cfg or TestConfig()
    plan = _plan(sample.values, theta, eta, cfg)
    observed_diff = plan.differences(sample.weights)
    statistic, witness = _positive_sup(observed_diff, plan.points)
    observed = math.sqrt(sample.n) * statistic

    workers = settings.resolved_workers(cfg.workers)
    parts = Parallel(n_jobs=workers)(
        delayed(_bootstrap_draws)(plan, observed_diff, sample.n, cfg.seed, list(chunk))
        for chunk in _chunks(cfg.reps, workers)
    )
    draws = np.concatenate(parts)
    critical = _quantile(draws, 1.0 - cfg.alpha)

    return TestResult(
        statistic=statistic,
        scaled_statistic=observed,
        critical_value=critical,
        p_value=float(np.mean(draws > observed)),
        reject=observed > critical,
        witness_x=witness,
        method=TestMethod.BOOTSTRAP,
        mode=plan.mode,
        n=sample.n,
        reps=int(draws.size),
        alpha=cfg.alpha,
        seed=cfg.seed,
        grid_points=cfg.grid.points if plan.mode == EvaluatorMode.GRID else None,
        reference_quantiles={key: _quantile(draws, level) for key, level in REFERENCE_QUANTILES.items()},
    )


def run_test(sample: Sample, theta: WeightsLike, eta: WeightsLike, cfg: Optional[TestConfig] = None) -> TestResult:
    """Dispatch on cfg.method and log the decision."""
    cfg = cfg or TestConfig()
    theta_w, eta_w = as_weights(theta), as_weights(eta)
    if cfg.method == TestMethod.CAUCHY:
        result = cauchy_test(sample, theta_w, eta_w, cfg)
    else:
        result = bootstrap_test(sample, theta_w, eta_w, cfg)
    logger.info(
        f"{result.method.value} test {theta_w} vs {eta_w}: sqrt(n)T={result.scaled_statistic:.4f}, "
        f"c={result.critical_value:.4f}, p={result.p_value:.4f}, reject={result.reject}"
    )
    return result
