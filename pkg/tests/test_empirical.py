"""
Tests for weighted samples, empirical CDFs and bootstrap reweighting.
"""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / "backend"))

import numpy as np
import pytest

from errors import ParameterDomainError
from models import FamilyKind, FamilySpec
from services.distributions import cdf, parse_family, sample
from services.empirical import (
    EmpiricalCDF,
    Sample,
    bootstrap_counts,
    bootstrap_resample,
    cauchy_sample_ecdf,
    derived_rng,
    ecdf_eval,
)


def test_ecdf_simple_values():
    """Test step values of a three-point sample"""
    sample = Sample.from_values([3.0, 1.0, 2.0])
    assert ecdf_eval(sample, 0.5) == 0.0
    assert ecdf_eval(sample, 1.0) == pytest.approx(1 / 3)
    assert ecdf_eval(sample, 2.5) == pytest.approx(2 / 3)
    assert ecdf_eval(sample, 3.0) == 1.0, "ECDF must be exactly 1 at the maximum"


def test_ecdf_ties_and_weights():
    """Test tied observations and explicit weights"""
    sample = Sample.from_values([1.0, 1.0, 4.0], weights=[0.2, 0.3, 0.5])
    assert ecdf_eval(sample, 1.0) == pytest.approx(0.5)
    assert np.allclose(ecdf_eval(sample, np.array([0.0, 1.0, 4.0])), [0.0, 0.5, 1.0])
    assert list(EmpiricalCDF(sample).jumps) == [1.0, 4.0]


def test_from_values_sorts_weights_with_values():
    """Test weights follow their observations when sorting"""
    sample = Sample.from_values([5.0, -1.0], weights=[0.9, 0.1])
    assert list(sample.values) == [-1.0, 5.0]
    assert list(sample.weights) == [0.1, 0.9]


def test_sample_rejects_bad_input():
    """Test empty, non-finite and badly weighted samples"""
    with pytest.raises(ParameterDomainError):
        Sample.from_values([])
    with pytest.raises(ParameterDomainError):
        Sample.from_values([1.0, float("nan")])
    with pytest.raises(ParameterDomainError):
        Sample.from_values([1.0, 2.0], weights=[0.5, 0.6])
    with pytest.raises(ParameterDomainError):
        Sample.from_values([1.0, 2.0], weights=[1.0])


def test_bootstrap_weights_sum_to_one():
    """Test bootstrap reweighting keeps values and sums to 1"""
    sample = Sample.from_values(np.arange(25, dtype=float))
    rng = np.random.default_rng(0)
    for _ in range(50):
        resample = bootstrap_resample(sample, rng)
        assert resample.values is sample.values, "values must be shared"
        assert abs(resample.weights.sum() - 1.0) < 1e-12
        assert np.all(resample.weights * sample.n == np.round(resample.weights * sample.n))


def test_bootstrap_counts_mean():
    """Test multinomial counts average one per position"""
    rng = np.random.default_rng(5)
    counts = np.array([bootstrap_counts(20, rng) for _ in range(2000)])
    assert np.all(counts.sum(axis=1) == 20)
    assert np.allclose(counts.mean(axis=0), 1.0, atol=0.1)


def test_cauchy_ecdf_dkw_bound():
    """Test the Cauchy sample ECDF stays inside a DKW band"""
    n = 20_000
    ecdf = cauchy_sample_ecdf(n, np.random.default_rng(9))
    grid = np.linspace(-20, 20, 2001)
    deviation = np.max(np.abs(ecdf(grid) - cdf(FamilySpec(kind=FamilyKind.CAUCHY), grid)))
    # 99.9% band: sqrt(log(2 / 0.001) / (2n))
    assert deviation < np.sqrt(np.log(2 / 0.001) / (2 * n))


def test_derived_rng_deterministic():
    """Test derived streams depend only on seed and index"""
    first = derived_rng(3, 7, 1).random(5)
    second = derived_rng(3, 7, 1).random(5)
    other = derived_rng(3, 7, 2).random(5)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)


def test_ecdf_two_point_sample():
    """Test the uniform and weighted two-point sample"""
    uniform = Sample.from_values([0.0, 1.0])
    assert ecdf_eval(uniform, 0.5) == pytest.approx(0.5)
    assert ecdf_eval(uniform, -1.0) == 0.0
    weighted = Sample.from_values([0.0, 1.0], weights=[0.25, 0.75])
    assert ecdf_eval(weighted, 0.0) == pytest.approx(0.25)


def test_bootstrap_single_observation():
    """Test n = 1 always resamples the only observation"""
    sample = Sample.from_values([4.2])
    resample = bootstrap_resample(sample, np.random.default_rng(0))
    assert list(resample.weights) == [1.0]


def test_bootstrap_first_count_mean():
    """Test the first multinomial count has mean 1 at n = 500"""
    rng = np.random.default_rng(12)
    first = np.array([bootstrap_counts(500, rng)[0] for _ in range(10_000)])
    assert abs(first.mean() - 1.0) < 0.05


def test_cauchy_ecdf_single_draw_and_seed():
    """Test a one-draw ECDF and seed determinism"""
    ecdf = cauchy_sample_ecdf(1, np.random.default_rng(2))
    assert ecdf(ecdf.sample.values[0] + 1.0) == 1.0
    first = cauchy_sample_ecdf(100, derived_rng(8, 0))
    second = cauchy_sample_ecdf(100, derived_rng(8, 0))
    assert np.array_equal(first.sample.values, second.sample.values)


def test_glivenko_cantelli_pareto():
    """Test the median sup error of the Pareto(1) ECDF shrinks across n = 100, 1000, 10000"""
    family = parse_family("pareto(sh=1)")
    medians = []
    for n in (100, 1_000, 10_000):
        errors = []
        for rep in range(50):
            data = Sample.from_values(sample(family, n, derived_rng(21, n, rep)))
            truth = np.asarray(cdf(family, data.values))
            right = np.asarray(ecdf_eval(data, data.values))
            # the ECDF jumps by 1/n at each observation
            errors.append(max(np.max(right - truth), np.max(truth - (right - 1.0 / n))))
        medians.append(float(np.median(errors)))
    assert medians[0] > medians[1] > medians[2], medians
