"""
Empirical Distributions

Weighted samples, their step CDFs and bootstrap reweighting.
A bootstrap resample keeps the original sorted values and only changes the
weights (multinomial counts / n), so evaluators can reuse precomputed
structure built on the observed values.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from errors import ParameterDomainError
from models import FamilyKind, FamilySpec

from .distributions import sample as draw_family

logger = logging.getLogger(__name__)

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Sample:
    """Sorted finite observations with nonnegative weights summing to 1"""
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values, weights = self.values, self.weights
        if values.ndim != 1 or values.size < 1:
            raise ParameterDomainError("a sample needs at least one observation")
        if weights.shape != values.shape:
            raise ParameterDomainError("values and weights must have the same length")
        if not np.all(np.isfinite(values)):
            raise ParameterDomainError("observations must be finite")
        if np.any(np.diff(values) < 0):
            raise ParameterDomainError("sample values must be sorted")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ParameterDomainError("weights must be nonnegative and sum to 1")
        values.setflags(write=False)
        weights.setflags(write=False)

    @classmethod
    def from_values(cls, values: Sequence[float], weights: Optional[Sequence[float]] = None) -> "Sample":
        """
        Sort observations (carrying weights along); equal weights by default.

        Raises:
            ParameterDomainError: empty input, non-finite values, bad weights
        """
        raw = np.array(values, dtype=float).ravel()
        if raw.size == 0:
            raise ParameterDomainError("a sample needs at least one observation")
        if not np.all(np.isfinite(raw)):
            raise ParameterDomainError("observations must be finite")
        order = np.argsort(raw, kind="stable")
        if weights is None:
            w = np.full(raw.size, 1.0 / raw.size)
        else:
            w = np.array(weights, dtype=float).ravel()
            if w.shape != raw.shape:
                raise ParameterDomainError("values and weights must have the same length")
            w = w[order]
        return cls(values=raw[order], weights=w)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def with_weights(self, weights: np.ndarray) -> "Sample":
        return Sample(values=self.values, weights=np.array(weights, dtype=float))


@dataclass(frozen=True, eq=False)
class EmpiricalCDF:
    """Right-continuous step CDF of a weighted sample"""
    sample: Sample

    def __call__(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return ecdf_eval(self.sample, x)

    @property
    def jumps(self) -> np.ndarray:
        return np.unique(self.sample.values[self.sample.weights > 0])


def ecdf_eval(sample: Sample, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Weighted empirical CDF at x: the total weight of observations <= x.

    Exactly 0 below the minimum and exactly 1 at or above the maximum.
    """
    cumulative = np.concatenate(([0.0], np.cumsum(sample.weights)))
    # cumsum can overshoot 1 by an ulp
    cumulative[-1] = 1.0
    positions = np.searchsorted(sample.values, np.asarray(x, dtype=float), side="right")
    values = np.minimum(cumulative[positions], 1.0)
    if np.ndim(x) == 0:
        return float(values)
    return values


def bootstrap_counts(n: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts of n draws with replacement from n positions"""
    return np.bincount(rng.integers(0, n, size=n), minlength=n)


def bootstrap_resample(sample: Sample, rng: np.random.Generator) -> Sample:
    """
    One nonparametric bootstrap resample as reweighting: weight_i = count_i / n.

    The values are shared with the original sample.
    """
    counts = bootstrap_counts(sample.n, rng)
    return sample.with_weights(counts / sample.n)


def cauchy_sample_ecdf(n: int, rng: np.random.Generator) -> EmpiricalCDF:
    """Empirical CDF of n standard Cauchy draws"""
    values = draw_family(FamilySpec(kind=FamilyKind.CAUCHY), n, rng)
    return EmpiricalCDF(Sample.from_values(values))


def derived_rng(seed: int, *index: int) -> np.random.Generator:
    """
    Generator for one draw of a Monte Carlo loop.

    Streams depend only on (seed, index...), never on how draws are split
    between workers.
    """
    return np.random.default_rng([int(seed), *(int(i) for i in index)])
