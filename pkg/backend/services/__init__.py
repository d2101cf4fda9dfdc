"""
Services Module

Numerical core: distributions, empirical CDFs, combination CDFs,
majorization, shape classes, dominance tests, limit covariance and the
power study harness.
"""

from .distributions import cdf, parse_family, quantile, sample, st_petersburg_distribution, to_discrete
from .empirical import EmpiricalCDF, Sample, bootstrap_resample, cauchy_sample_ecdf, derived_rng, ecdf_eval
from .combine import (
    CombinationCDF,
    check_dominance,
    exact_combination_cdf,
    grid_combination_cdf,
    parametric_combination_cdf,
    sup_abs_diff,
    sup_positive_diff,
    weighted_convolution,
)
from .majorization import (
    dominance_network,
    is_h_split_majorized,
    is_majorized,
    kronecker,
    mixture_bound_weights,
    relation,
    t_transform_chain,
)
from .shapeclass import corpus, run_checks
from .sdtest import bootstrap_test, cauchy_test, run_test
from .asymptotics import (
    cauchy_covariance,
    covariance_matrix,
    covariance_omega,
    empirical_process_covariance,
    samplemean_covariance,
    total_covariance,
)
from .simharness import reproduce_table, run_power_study, table_config, table_ids

__all__ = [
    "cdf",
    "parse_family",
    "quantile",
    "sample",
    "st_petersburg_distribution",
    "to_discrete",
    "EmpiricalCDF",
    "Sample",
    "bootstrap_resample",
    "cauchy_sample_ecdf",
    "derived_rng",
    "ecdf_eval",
    "CombinationCDF",
    "check_dominance",
    "exact_combination_cdf",
    "grid_combination_cdf",
    "parametric_combination_cdf",
    "sup_abs_diff",
    "sup_positive_diff",
    "weighted_convolution",
    "dominance_network",
    "is_h_split_majorized",
    "is_majorized",
    "kronecker",
    "mixture_bound_weights",
    "relation",
    "t_transform_chain",
    "corpus",
    "run_checks",
    "bootstrap_test",
    "cauchy_test",
    "run_test",
    "cauchy_covariance",
    "covariance_matrix",
    "covariance_omega",
    "empirical_process_covariance",
    "samplemean_covariance",
    "total_covariance",
    "reproduce_table",
    "run_power_study",
    "table_config",
    "table_ids",
]
