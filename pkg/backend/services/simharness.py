"""
Power Study Harness

Runs a ScenarioConfig: for every (family, weight pair, n, method) cell,
draw R datasets, apply the dominance test and record the rejection rate with
its binomial standard error.

Seeds: replication r of a cell draws its data from (seed, cell hash, r) and
its test from a seed spawned off the same key, so a cell can be re-run in
isolation and the table does not depend on the worker count. The Cauchy
reference draws only depend on (n, theta, eta) and are computed once per
such key.
"""

import hashlib
import logging
import math
import time
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from config import settings
from errors import ParameterDomainError, UnknownTableError
from models import (
    FamilyKind,
    FamilySpec,
    GridSpec,
    PowerRow,
    PowerTable,
    ScenarioConfig,
    TestConfig,
    TestMethod,
    WeightPair,
    WeightVector,
)

from .distributions import family_label, family_param, sample as draw_family
from .empirical import Sample, derived_rng
from .sdtest import EQUAL_TOTAL_TOL, bootstrap_test, cauchy_reference, cauchy_test

logger = logging.getLogger(__name__)

FULL_REPLICATIONS = 1000
FULL_REPS = 1000
MIN_REPLICATIONS = 50
MIN_REPS = 100

SHAPES = (1.0, 2.0, 3.0, 4.0, 5.0)
STUDENT_DF = (0.5, 1.0, 1.5, 3.0, 5.0)
DIRECTION_SHAPES = (1.0, 0.8, 0.6)
SIZES = (100, 500)


# ============================================================================
# SEEDS
# ============================================================================

def cell_hash(*parts: object) -> int:
    """Stable 64-bit key of a cell description"""
    text = "|".join(str(part) for part in parts)
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "big")


def _test_seed(seed: int, key: int, replication: int) -> int:
    state = np.random.SeedSequence([seed, key, replication, 1]).generate_state(1, dtype=np.uint64)
    return int(state[0])


# ============================================================================
# CELLS
# ============================================================================

def _test_config(cfg: ScenarioConfig, method: TestMethod, seed: int) -> TestConfig:
    return TestConfig(
        alpha=cfg.alpha,
        method=method,
        reps=cfg.reps,
        seed=seed,
        grid=cfg.grid,
        budget=cfg.budget,
        workers=1,
    )


def _replicate(
    cfg: ScenarioConfig,
    family: FamilySpec,
    pair: WeightPair,
    n: int,
    method: TestMethod,
    key: int,
    indices: Sequence[int],
    reference: Optional[np.ndarray],
) -> Tuple[int, float]:
    """Rejections over a block of replications and the time spent on them"""
    started = time.perf_counter()
    rejections = 0
    for r in indices:
        values = draw_family(family, n, derived_rng(cfg.seed, key, r, 0))
        sample = Sample.from_values(values)
        test_cfg = _test_config(cfg, method, _test_seed(cfg.seed, key, r))
        if method == TestMethod.CAUCHY:
            result = cauchy_test(sample, pair.theta, pair.eta, test_cfg, reference=reference)
        else:
            result = bootstrap_test(sample, pair.theta, pair.eta, test_cfg)
        rejections += int(result.reject)
    return rejections, time.perf_counter() - started


def _blocks(count: int, workers: int) -> List[range]:
    pieces = max(1, min(count, workers * 2))
    bounds = np.linspace(0, count, pieces + 1).astype(int)
    return [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def _row(family: FamilySpec, pair: WeightPair, n: int, method: TestMethod, **fields) -> PowerRow:
    return PowerRow(
        family=family_label(family),
        param=family_param(family),
        theta=str(pair.theta),
        eta=str(pair.eta),
        n=n,
        method=method,
        label=pair.label,
        **fields,
    )


def run_power_study(cfg: ScenarioConfig, workers: Optional[int] = None) -> PowerTable:
    """
    Rejection rates for every cell of the scenario.

    Cauchy cells whose weight totals differ are kept as skipped rows with a
    note; the run continues.

    Args:
        cfg: Scenario to run
        workers: joblib workers, overriding cfg.workers (0 for all cores)
    """
    n_jobs = settings.resolved_workers(cfg.workers if workers is None else workers)
    cells = [
        (family, pair, n, method)
        for method in cfg.methods
        for pair in cfg.pairs
        for family in cfg.families
        for n in cfg.sizes
    ]
    logger.info(f"power study '{cfg.name}': {len(cells)} cells x {cfg.replications} replications on {n_jobs} workers")

    references: Dict[Tuple[int, str, str], np.ndarray] = {}
    runnable: List[int] = []
    rows: List[Optional[PowerRow]] = [None] * len(cells)
    for index, (family, pair, n, method) in enumerate(cells):
        if method == TestMethod.CAUCHY and abs(pair.theta.total - pair.eta.total) > EQUAL_TOTAL_TOL:
            note = f"Cauchy calibration needs equal weight totals ({pair.theta.total:g} vs {pair.eta.total:g})"
            logger.warning(f"skipping {family.label} {pair.display} n={n}: {note}")
            rows[index] = _row(family, pair, n, method, skipped=True, note=note)
            continue
        runnable.append(index)
        ref_key = (n, str(pair.theta), str(pair.eta))
        if method == TestMethod.CAUCHY and ref_key not in references:
            ref_cfg = _test_config(cfg, method, cell_hash(cfg.seed, "cauchy-reference", *ref_key) >> 1)
            references[ref_key] = cauchy_reference(n, pair.theta, pair.eta, ref_cfg.model_copy(update={"workers": n_jobs}))

    tasks = []
    for index in runnable:
        family, pair, n, method = cells[index]
        key = cell_hash(family.label, pair.theta, pair.eta, n, method.value)
        reference = references.get((n, str(pair.theta), str(pair.eta))) if method == TestMethod.CAUCHY else None
        for block in _blocks(cfg.replications, n_jobs):
            tasks.append((index, (cfg, family, pair, n, method, key, list(block), reference)))

    outcomes = Parallel(n_jobs=n_jobs)(delayed(_replicate)(*arguments) for _, arguments in tasks)

    rejections = {index: 0 for index in runnable}
    seconds = {index: 0.0 for index in runnable}
    for (index, _), (rejected, spent) in zip(tasks, outcomes):
        rejections[index] += rejected
        seconds[index] += spent

    for index in runnable:
        family, pair, n, method = cells[index]
        rate = rejections[index] / cfg.replications
        rows[index] = _row(
            family, pair, n, method,
            rate=rate,
            se=math.sqrt(rate * (1.0 - rate) / cfg.replications),
            seconds=seconds[index],
            rejections=rejections[index],
            replications=cfg.replications,
        )
        logger.info(f"{family.label} {pair.display} n={n} {method.value}: rate {rate:.3f} ({seconds[index]:.1f}s)")

    return PowerTable(table_id=cfg.name, title=cfg.title, replications=cfg.replications, rows=[row for row in rows if row])


# ============================================================================
# PRESETS
# ============================================================================

def _family(kind: FamilyKind, **params: float) -> FamilySpec:
    return FamilySpec(kind=kind, **params)


def _shape_families(kind: FamilyKind) -> List[FamilySpec]:
    if kind == FamilyKind.STUDENT:
        return [_family(kind, df=df) for df in STUDENT_DF]
    return [_family(kind, sh=sh) for sh in SHAPES]


def _all_shape_families() -> List[FamilySpec]:
    families: List[FamilySpec] = []
    for kind in (FamilyKind.PARETO, FamilyKind.LOGLOGISTIC, FamilyKind.FRECHET, FamilyKind.STUDENT):
        families.extend(_shape_families(kind))
    return families


def _pair(theta: Sequence[float], eta: Sequence[float], label: Optional[str] = None) -> WeightPair:
    return WeightPair(theta=WeightVector(entries=tuple(theta)), eta=WeightVector(entries=tuple(eta)), label=label)


def _mean_pairs(sizes: Sequence[int]) -> List[WeightPair]:
    """X̄_s against a single observation"""
    return [WeightPair(theta=WeightVector.sample_mean(s), eta=WeightVector(entries=(1.0,))) for s in sizes]


def _both_directions(theta: Sequence[float], eta: Sequence[float]) -> List[WeightPair]:
    return [_pair(theta, eta), _pair(eta, theta)]


def _loglogistic_directions() -> List[FamilySpec]:
    return [_family(FamilyKind.LOGLOGISTIC, sh=sh) for sh in DIRECTION_SHAPES]


def _means_preset(kind: FamilyKind) -> Dict:
    return {"families": _shape_families(kind), "pairs": _mean_pairs((2, 3, 4)), "sizes": list(SIZES)}


def _weighted_preset(pairs: List[WeightPair], method: TestMethod) -> Dict:
    return {"families": _all_shape_families(), "pairs": pairs, "sizes": [500], "methods": [method]}


_SINGLE = [_pair((0.4, 0.6), (1.0,)), _pair((0.2, 0.8), (1.0,))]
_AGAINST_MEAN = [_pair((0.1, 0.9), (0.5, 0.5)), _pair((0.25, 0.75), (0.5, 0.5))]

# (caption, scenario fields); methods default to both tests, sizes to (100, 500)
TABLE_PRESETS: Dict[str, Tuple[str, Callable[[], Dict]]] = {
    "pareto-means": (
        "Test for X̄_s ≥st X. Simulated power with Pareto alternatives.",
        lambda: _means_preset(FamilyKind.PARETO),
    ),
    "loglogistic-means": (
        "Test for X̄_s ≥st X. Simulated power with loglogistic alternatives.",
        lambda: _means_preset(FamilyKind.LOGLOGISTIC),
    ),
    "frechet-means": (
        "Test for X̄_s ≥st X. Simulated power with Fréchet alternatives.",
        lambda: _means_preset(FamilyKind.FRECHET),
    ),
    "student-means": (
        "Test for X̄_s ≥st X. Simulated power with Student's t alternatives.",
        lambda: _means_preset(FamilyKind.STUDENT),
    ),
    "mixture-means": (
        "Test for X̄_s ≥st X. Simulated power with alternative X = 0.45 Y + 0.55 Z, "
        "Y Bernoulli(1/2), Z Pareto with sh=1.",
        lambda: {
            "families": [_family(FamilyKind.BERNOULLI_PARETO)],
            "pairs": _mean_pairs((2, 3, 4, 5)),
            "sizes": list(SIZES),
        },
    ),
    "weighted-bootstrap": (
        "Simulated power of the bootstrap test for weighted combinations.",
        lambda: _weighted_preset(list(_SINGLE), TestMethod.BOOTSTRAP),
    ),
    "weighted-cauchy": (
        "Simulated power of the Cauchy-based test for weighted combinations.",
        lambda: _weighted_preset(list(_SINGLE), TestMethod.CAUCHY),
    ),
    "weighted-pairs-bootstrap": (
        "Simulated power of the bootstrap test between different weighted combinations.",
        lambda: _weighted_preset(list(_AGAINST_MEAN), TestMethod.BOOTSTRAP),
    ),
    "weighted-pairs-cauchy": (
        "Simulated power of the Cauchy-based test between different weighted combinations.",
        lambda: _weighted_preset(list(_AGAINST_MEAN), TestMethod.CAUCHY),
    ),
    "nonmajorized-1": (
        "Simulated power to detect the direction of stochastic dominance in the presence of "
        "nonmajorized weights (underlying distribution is the loglogistic with shape parameter sh).",
        lambda: {
            "families": _loglogistic_directions(),
            "pairs": _both_directions((0.1, 0.35, 0.55), (0.15, 0.25, 0.6)),
            "sizes": [500],
        },
    ),
    "nonmajorized-2": (
        "Simulated power to detect the direction of stochastic dominance in the presence of "
        "nonmajorized weights (underlying distribution is the loglogistic with shape parameter sh).",
        lambda: {
            "families": _loglogistic_directions(),
            "pairs": _both_directions((0.09, 0.41, 0.5), (0.1, 0.1, 0.8)),
            "sizes": [500],
        },
    ),
    # The reference rows carry the labels of the opposite null: (0.2,0.3,0.5) is
    # majorized by (0.1,0.1,0.8), so its combination dominates and the row with
    # power near 1 tests (0.1,0.1,0.8) ≥st (0.2,0.3,0.5).
    "direction-majorized": (
        "Simulated power with majorized weights (underlying distribution is the loglogistic "
        "with shape parameter sh).",
        lambda: {
            "families": _loglogistic_directions(),
            "pairs": [
                _pair((0.1, 0.1, 0.8), (0.2, 0.3, 0.5), label="(0.2,0.3,0.5) vs (0.1,0.1,0.8)"),
                _pair((0.2, 0.3, 0.5), (0.1, 0.1, 0.8), label="(0.1,0.1,0.8) vs (0.2,0.3,0.5)"),
            ],
            "sizes": [500],
        },
    ),
}

# Families and weight vectors drawn in the CDF figures
FIGURE_PRESETS: Dict[str, Tuple[FamilySpec, List[WeightVector]]] = {
    "pareto-means": (
        _family(FamilyKind.PARETO, sh=3.0),
        [WeightVector.sample_mean(s) for s in (1, 2, 3, 4)],
    ),
    "mixture-means": (
        _family(FamilyKind.BERNOULLI_PARETO),
        [WeightVector.sample_mean(s) for s in (1, 2, 3, 4)],
    ),
}


def table_ids() -> List[str]:
    return list(TABLE_PRESETS)


def scaled_counts(scale: float) -> Tuple[int, int]:
    """(replications, test draws) at a fraction of the full 1000/1000 design"""
    if not 0.0 < scale <= 1.0:
        raise ParameterDomainError(f"scale must be in (0, 1], got {scale}")
    return (
        max(MIN_REPLICATIONS, round(FULL_REPLICATIONS * scale)),
        max(MIN_REPS, round(FULL_REPS * scale)),
    )


def table_config(
    table_id: str,
    scale: float = 0.5,
    *,
    seed: int = 0,
    workers: int = 0,
    grid_points: Optional[int] = None,
) -> ScenarioConfig:
    """
    ScenarioConfig of a preset table.

    Raises:
        UnknownTableError: id not among the presets (the message lists them)
        ParameterDomainError: scale outside (0, 1]
    """
    if table_id not in TABLE_PRESETS:
        raise UnknownTableError(f"unknown table '{table_id}'; valid ids: {', '.join(table_ids())}")
    replications, reps = scaled_counts(scale)
    title, fields = TABLE_PRESETS[table_id]
    return ScenarioConfig(
        name=table_id,
        title=title,
        replications=replications,
        reps=reps,
        seed=seed,
        workers=workers,
        grid=GridSpec(points=grid_points or settings.harness_grid_points),
        **fields(),
    )


def reproduce_table(
    table_id: str,
    scale: float = 0.5,
    *,
    seed: int = 0,
    workers: Optional[int] = None,
    grid_points: Optional[int] = None,
) -> PowerTable:
    """Run a preset table at a fraction of the full replication counts"""
    cfg = table_config(table_id, scale, seed=seed, workers=workers or 0, grid_points=grid_points)
    return run_power_study(cfg, workers=workers)
