"""
Unit tests for the parametric families: CDF, quantile and sampler.
"""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / "backend"))

import numpy as np
import pytest

from errors import ParameterDomainError
from models import FamilyKind, FamilySpec
from services.distributions import (
    cdf,
    family_label,
    family_param,
    parse_family,
    quantile,
    sample,
    st_petersburg_distribution,
    to_discrete,
)

CONTINUOUS = [
    "pareto(sh=1)",
    "pareto(sh=2.5)",
    "frechet(sh=0.7)",
    "loglogistic(sh=3)",
    "cauchy",
    "piecewise-example",
    "transformed-pareto(alpha=1,a=2,b=3)",
    "pareto-zero(alpha=1)",
    "uniform(lo=-1,hi=2)",
]


# ============================================================================
# PARSING
# ============================================================================

def test_parse_family_text_forms():
    """Test keyword, positional and alias forms of family specifiers"""
    assert parse_family("pareto(sh=2)") == FamilySpec(kind=FamilyKind.PARETO, sh=2.0)
    assert parse_family("student(1.5)").df == 1.5
    assert parse_family("t(df=3)").kind == FamilyKind.STUDENT
    assert parse_family("mix-bern-pareto").kind == FamilyKind.BERNOULLI_PARETO
    assert parse_family("st-petersburg").k == 40, "St. Petersburg truncation defaults to 40 terms"


def test_parse_family_rejects_bad_parameters():
    """Test parameter-domain errors for invalid specifiers"""
    for text in ["pareto(sh=0)", "pareto", "student(df=-1)", "transformed-pareto(alpha=1,a=3,b=2)",
                 "transformed-pareto(alpha=1,a=0.5,b=2)", "cauchy(sh=1)", "gamma(2)"]:
        with pytest.raises(ParameterDomainError):
            parse_family(text)


def test_family_labels_for_tables():
    """Test the family/param columns used in power tables"""
    spec = parse_family("loglogistic(sh=0.8)")
    assert family_label(spec) == "loglogistic"
    assert family_param(spec) == "0.8"
    assert family_param(parse_family("cauchy")) == ""
    assert str(spec) == "loglogistic(sh=0.8)"


# ============================================================================
# CDF
# ============================================================================

def test_cdf_reference_values():
    """Test closed-form CDF values"""
    assert cdf(parse_family("cauchy"), 0.0) == pytest.approx(0.5)
    assert cdf(parse_family("pareto(sh=1)"), 2.0) == pytest.approx(0.5)
    assert cdf(parse_family("pareto(sh=1)"), 0.5) == 0.0, "Pareto puts no mass below 1"
    assert cdf(parse_family("loglogistic(sh=1)"), 1.0) == pytest.approx(0.5)
    assert cdf(parse_family("frechet(sh=1)"), 1.0) == pytest.approx(np.exp(-1.0))


def test_cdf_mixture_support_starts_at_055():
    """Test the Bernoulli-Pareto sum has no mass below 0.55"""
    spec = parse_family("mix-bern-pareto")
    assert cdf(spec, 0.549) == 0.0
    # half of the mass (Bernoulli = 0) with Z <= 2
    assert cdf(spec, 1.1) == pytest.approx(0.5 * 0.5 + 0.5 * (1 - 0.55 / 0.65))


def test_cdf_piecewise_flat_region():
    """Test the piecewise example is flat at 0.4 on [1/2, 1)"""
    spec = parse_family("piecewise-example")
    assert cdf(spec, 0.75) == pytest.approx(0.4)
    assert cdf(spec, 0.5) == pytest.approx(0.4)
    assert cdf(spec, 0.2) == 0.0
    assert cdf(spec, 2.0) == pytest.approx(0.7)


def test_cdf_monotone_and_bounded():
    """Test every family's CDF is nondecreasing with values in [0, 1]"""
    grid = np.linspace(-50.0, 200.0, 10_000)
    for text in CONTINUOUS + ["mix-bern-pareto", "st-petersburg", "student(df=1.5)"]:
        values = np.asarray(cdf(parse_family(text), grid))
        assert np.all(np.diff(values) >= -1e-12), f"{text}: CDF decreases"
        assert values.min() >= 0.0 and values.max() <= 1.0, f"{text}: CDF outside [0, 1]"


def test_student_one_df_matches_cauchy():
    """Test Student t with one degree of freedom equals the Cauchy CDF"""
    grid = np.concatenate([np.linspace(-30, 30, 121), [-1e4, 1e4]])
    student = np.asarray(cdf(parse_family("student(df=1)"), grid))
    cauchy = np.asarray(cdf(parse_family("cauchy"), grid))
    assert np.max(np.abs(student - cauchy)) < 1e-8


def test_student_cdf_symmetry():
    """Test F(-x) = 1 - F(x) for the Student family"""
    spec = parse_family("student(df=3)")
    x = np.array([0.3, 1.0, 2.5, 10.0])
    assert np.allclose(np.asarray(cdf(spec, -x)), 1.0 - np.asarray(cdf(spec, x)), atol=1e-10)


def test_st_petersburg_cdf_exact():
    """Test the St. Petersburg CDF steps at powers of two"""
    spec = parse_family("st-petersburg")
    assert cdf(spec, 1.99) == 0.0
    assert cdf(spec, 2.0) == pytest.approx(0.5)
    assert cdf(spec, 7.9) == pytest.approx(0.75)
    assert cdf(spec, 8.0) == pytest.approx(0.875)


def test_st_petersburg_truncation_mass():
    """Test stored pmf plus truncation mass sums to one"""
    dist = st_petersburg_distribution(40)
    assert dist.truncation_mass == pytest.approx(2.0 ** -40)
    assert abs(dist.pmf.sum() + dist.truncation_mass - 1.0) < 1e-12
    assert to_discrete(parse_family("st-petersburg(k=10)")).support.size == 10


# ============================================================================
# QUANTILE
# ============================================================================

def test_quantile_reference_values():
    """Test closed-form quantiles"""
    assert quantile(parse_family("cauchy"), 0.75) == pytest.approx(1.0)
    assert quantile(parse_family("pareto(sh=2)"), 0.75) == pytest.approx(2.0)
    assert quantile(parse_family("loglogistic(sh=1)"), 0.5) == pytest.approx(1.0)


def test_quantile_outside_unit_interval():
    """Test probabilities outside (0, 1) are rejected"""
    for p in [0.0, 1.0, -0.1, 1.5]:
        with pytest.raises(ParameterDomainError):
            quantile(parse_family("cauchy"), p)


def test_quantile_inverts_cdf():
    """Test cdf(quantile(p)) = p for continuous families"""
    rng = np.random.default_rng(7)
    p = rng.uniform(0.001, 0.999, 1000)
    for text in CONTINUOUS:
        spec = parse_family(text)
        roundtrip = np.asarray(cdf(spec, np.asarray(quantile(spec, p))))
        assert np.max(np.abs(roundtrip - p)) < 1e-9, f"{text}: quantile does not invert the CDF"


def test_quantile_numeric_inversion():
    """Test the numerically inverted families on fewer points"""
    p = np.linspace(0.02, 0.98, 25)
    for text in ["student(df=0.5)", "student(df=3)", "mix-bern-pareto"]:
        spec = parse_family(text)
        roundtrip = np.asarray(cdf(spec, np.asarray(quantile(spec, p))))
        assert np.max(np.abs(roundtrip - p)) < 1e-9, f"{text}: numeric quantile off"


# ============================================================================
# SAMPLING
# ============================================================================

def test_sample_cauchy_median():
    """Test the Cauchy sample median is near 0"""
    draws = sample(parse_family("cauchy"), 100_000, np.random.default_rng(1))
    assert abs(np.median(draws)) < 0.02


def test_sample_student_one_df_is_cauchy():
    """Test Student t(1) draws follow the Cauchy CDF"""
    draws = np.sort(sample(parse_family("student(df=1)"), 100_000, np.random.default_rng(2)))
    n = draws.size
    reference = np.asarray(cdf(parse_family("cauchy"), draws))
    ks = max(np.max(np.arange(1, n + 1) / n - reference), np.max(reference - np.arange(n) / n))
    assert ks < 0.01, f"KS distance {ks:.4f}"


def test_sample_pareto_probability():
    """Test P(X <= 2) for Pareto(1) draws"""
    draws = sample(parse_family("pareto(sh=1)"), 100_000, np.random.default_rng(3))
    assert abs(np.mean(draws <= 2.0) - 0.5) < 0.01


def test_sample_deterministic_given_seed():
    """Test identical draws for identical generator seeds"""
    spec = parse_family("frechet(sh=2)")
    first = sample(spec, 50, np.random.default_rng(11))
    second = sample(spec, 50, np.random.default_rng(11))
    assert np.array_equal(first, second)


def test_sample_supports():
    """Test draws respect the family supports"""
    rng = np.random.default_rng(4)
    assert sample(parse_family("mix-bern-pareto"), 1000, rng).min() >= 0.55
    petersburg = sample(parse_family("st-petersburg"), 1000, rng)
    assert np.all(np.log2(petersburg) == np.round(np.log2(petersburg)))
    with pytest.raises(ParameterDomainError):
        sample(parse_family("cauchy"), 0, rng)
