"""
Tests for the dominance test statistic and its Cauchy and bootstrap calibrations.
"""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / "backend"))

import numpy as np
import pytest

from config import settings
from errors import UnsupportedConfigurationError
from models import EvaluatorMode, FamilyKind, FamilySpec, GridSpec, TestConfig, TestMethod
from services import sdtest
from services.distributions import parse_family, sample
from services.empirical import Sample, derived_rng

TWO_POINT = Sample.from_values([0.0, 1.0])
CAUCHY = FamilySpec(kind=FamilyKind.CAUCHY)


def _pareto_sample(sh: float, n: int, seed: int) -> Sample:
    return Sample.from_values(sample(parse_family(f"pareto(sh={sh})"), n, derived_rng(seed, 0)))


# ============================================================================
# STATISTIC
# ============================================================================

def test_statistic_zero_for_equal_weights():
    """Test identical combinations give T = 0"""
    data = _pareto_sample(2, 40, 1)
    statistic, _ = sdtest.test_statistic(data, "0.5,0.5", "0.5,0.5")
    assert statistic == 0.0


def test_statistic_two_point_sample():
    """Test the hand-computed statistic for {0, 1}"""
    statistic, witness = sdtest.test_statistic(TWO_POINT, "0.5,0.5", "1")
    assert statistic == pytest.approx(0.25)
    assert witness == 0.5


def test_statistic_grid_mode_close_to_exact():
    """Test the grid evaluator reproduces the exact statistic"""
    data = _pareto_sample(3, 60, 2)
    exact, _ = sdtest.test_statistic(data, "0.5,0.5", "1", TestConfig(mode=EvaluatorMode.EXACT))
    grid, _ = sdtest.test_statistic(data, "0.5,0.5", "1", TestConfig(mode=EvaluatorMode.GRID))
    assert abs(exact - grid) <= 0.01


def test_statistic_location_scale_invariant():
    """Test affine maps of the data leave T unchanged for equal weight totals"""
    data = _pareto_sample(2, 25, 7)
    exact = TestConfig(mode=EvaluatorMode.EXACT)
    moved = Sample.from_values(2.5 * data.values + 10.0)
    original, _ = sdtest.test_statistic(data, "0.5,0.5", "1", exact)
    shifted, _ = sdtest.test_statistic(moved, "0.5,0.5", "1", exact)
    assert abs(original - shifted) <= 1e-12

    # power-of-two scaling is exact in floating point, so ties survive for any weights
    scaled = Sample.from_values(4.0 * data.values)
    original, _ = sdtest.test_statistic(data, "0.2,0.3,0.5", "0.1,0.1,0.8", exact)
    rescaled, _ = sdtest.test_statistic(scaled, "0.2,0.3,0.5", "0.1,0.1,0.8", exact)
    assert abs(original - rescaled) <= 1e-12


def test_decision_location_scale_invariant():
    """Test affine maps of the data give the same Cauchy decision"""
    data = _pareto_sample(3, 30, 8)
    moved = Sample.from_values(0.5 * data.values - 2.0)
    cfg = TestConfig(method=TestMethod.CAUCHY, reps=100, mode=EvaluatorMode.EXACT, workers=1)
    first = sdtest.run_test(data, "0.5,0.5", "1", cfg)
    second = sdtest.run_test(moved, "0.5,0.5", "1", cfg)
    assert first.scaled_statistic == pytest.approx(second.scaled_statistic, abs=1e-10)
    assert first.reject == second.reject
    assert first.p_value == second.p_value


# ============================================================================
# CAUCHY TEST
# ============================================================================

def test_cauchy_requires_equal_totals():
    """Test the Cauchy method refuses unequal weight totals"""
    cfg = TestConfig(method=TestMethod.CAUCHY, reps=100)
    with pytest.raises(UnsupportedConfigurationError):
        sdtest.run_test(TWO_POINT, "0.5,0.5", "2", cfg)


def test_cauchy_with_given_reference():
    """Test p-value and decision against a supplied reference"""
    cfg = TestConfig(method=TestMethod.CAUCHY, reps=100)
    rejected = sdtest.cauchy_test(TWO_POINT, "0.5,0.5", "1", cfg, reference=np.zeros(100))
    assert rejected.reject
    assert rejected.p_value == pytest.approx(1 / 101)

    kept = sdtest.cauchy_test(TWO_POINT, "0.5,0.5", "1", cfg, reference=np.full(100, 1e9))
    assert not kept.reject
    assert kept.p_value == 1.0


def test_cauchy_reference_deterministic():
    """Test the Cauchy reference depends only on the seed"""
    cfg = TestConfig(method=TestMethod.CAUCHY, reps=100, seed=5)
    first = sdtest.cauchy_reference(30, "0.5,0.5", "1", cfg)
    second = sdtest.cauchy_reference(30, "0.5,0.5", "1", cfg)
    assert first.shape == (100,)
    assert np.array_equal(first, second)
    assert np.all(first >= 0)


def test_cauchy_reference_scales_weights():
    """Test weights with a common total other than 1 give the normalized reference"""
    cfg = TestConfig(method=TestMethod.CAUCHY, reps=100, seed=1)
    unit = sdtest.cauchy_reference(25, "0.5,0.5", "1", cfg)
    doubled = sdtest.cauchy_reference(25, "1,1", "2", cfg)
    assert np.allclose(unit, doubled)


def test_cauchy_result_fields():
    """Test the Cauchy result carries its diagnostics"""
    data = _pareto_sample(1, 50, 3)
    result = sdtest.run_test(data, "0.5,0.5", "1", TestConfig(method=TestMethod.CAUCHY, reps=100))
    assert result.method == TestMethod.CAUCHY
    assert result.reps == 100 and result.n == 50
    assert result.reject == (result.scaled_statistic >= result.critical_value)
    assert set(result.reference_quantiles) == {"q50", "q90", "q95", "q99"}
    assert result.grid_points is None, "exact mode has no grid"


def test_p_value_monotone_in_statistic():
    """Test a larger observed statistic never gets a larger p-value"""
    cfg = TestConfig(method=TestMethod.CAUCHY, reps=100, workers=1)
    reference = sdtest.cauchy_reference(30, "0.5,0.5", "1", cfg)
    results = [
        sdtest.cauchy_test(_pareto_sample(sh, 30, seed), "0.5,0.5", "1", cfg, reference=reference)
        for sh in (1, 2, 5)
        for seed in range(4)
    ]
    results.sort(key=lambda result: result.scaled_statistic)
    p_values = [result.p_value for result in results]
    assert all(later <= earlier for earlier, later in zip(p_values, p_values[1:])), p_values


def test_cauchy_grid_reference_shares_observed_grid():
    """Test grid-mode draws are evaluated on the observed grid in median/IQR units"""
    data = _pareto_sample(2, 40, 9)
    moved = Sample.from_values(3.0 * data.values - 5.0)
    cfg = TestConfig(
        method=TestMethod.CAUCHY, reps=100, mode=EvaluatorMode.GRID, grid=GridSpec(points=128), workers=1,
    )
    first = sdtest.cauchy_test(data, "0.5,0.5", "1", cfg)
    second = sdtest.cauchy_test(moved, "0.5,0.5", "1", cfg)
    assert first.grid_points == 128
    assert first.statistic == pytest.approx(second.statistic, abs=1e-9)
    for key, value in first.reference_quantiles.items():
        assert value == pytest.approx(second.reference_quantiles[key], rel=1e-9, abs=1e-12), key


def test_cauchy_grid_reference_deterministic():
    """Test the grid-mode reference without an observed grid depends only on the seed"""
    cfg = TestConfig(method=TestMethod.CAUCHY, reps=100, mode=EvaluatorMode.GRID, grid=GridSpec(points=64), seed=4, workers=1)
    first = sdtest.cauchy_reference(40, "0.5,0.5", "1", cfg)
    second = sdtest.cauchy_reference(40, "0.5,0.5", "1", cfg.model_copy(update={"workers": 2}))
    assert np.array_equal(first, second)
    assert np.all(first >= 0)


@pytest.mark.skipif(not settings.run_slow_tests, reason="set SDTEST_RUN_SLOW_TESTS=true")
def test_large_cauchy_sample_statistic_small():
    """Test T stays below 0.05 for Cauchy samples of 10 000 (median of 20)"""
    cfg = TestConfig(mode=EvaluatorMode.GRID, grid=GridSpec(points=1024))
    statistics = [
        sdtest.test_statistic(Sample.from_values(sample(CAUCHY, 10_000, derived_rng(13, rep))), "0.5,0.5", "1", cfg)[0]
        for rep in range(20)
    ]
    assert np.median(statistics) < 0.05, f"median T {np.median(statistics):.4f}"


# ============================================================================
# BOOTSTRAP TEST
# ============================================================================

def test_bootstrap_minimum_reps():
    """Test B = 100 draws are used when requested"""
    data = _pareto_sample(2, 40, 4)
    result = sdtest.run_test(data, "0.5,0.5", "1", TestConfig(reps=100))
    assert result.method == TestMethod.BOOTSTRAP
    assert result.reps == 100
    assert result.reject == (result.scaled_statistic > result.critical_value)
    assert 0.0 <= result.p_value <= 1.0


def test_bootstrap_deterministic_and_worker_independent():
    """Test identical data, config and seed give identical results for any worker count"""
    data = _pareto_sample(4, 60, 5)
    single = sdtest.bootstrap_test(data, "0.5,0.5", "1", TestConfig(reps=120, seed=9, workers=1))
    again = sdtest.bootstrap_test(data, "0.5,0.5", "1", TestConfig(reps=120, seed=9, workers=1))
    parallel = sdtest.bootstrap_test(data, "0.5,0.5", "1", TestConfig(reps=120, seed=9, workers=2))
    assert single == again
    assert single == parallel


def test_bootstrap_grid_mode_reports_points():
    """Test grid mode records the grid size"""
    data = _pareto_sample(2, 50, 6)
    cfg = TestConfig(reps=100, mode=EvaluatorMode.GRID, grid=GridSpec(points=256))
    result = sdtest.bootstrap_test(data, "0.5,0.5", "1", cfg)
    assert result.mode == EvaluatorMode.GRID
    assert result.grid_points == 256


def test_result_key_value_lines():
    """Test machine-readable output of a result"""
    result = sdtest.run_test(TWO_POINT, "0.5,0.5", "1", TestConfig(reps=100))
    lines = result.to_kv()
    assert f"reject={str(result.reject).lower()}" in lines
    assert "method=bootstrap" in lines
    assert any(line.startswith("reference_q95=") for line in lines)
