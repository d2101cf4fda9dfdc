"""
Distribution Families

CDFs, generalized quantiles and samplers for every FamilySpec kind:
- Pareto, Frechet and loglogistic with tail shape sh
- Student t (CDF by adaptive quadrature of the density) and Cauchy
- Bernoulli-Pareto sum 0.45*Y + 0.55*Z
- St. Petersburg 2^Y, with a truncated DiscreteDistribution for exact convolution
- the piecewise and transformed-Pareto shape examples, Pareto started at 0, uniform
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy import integrate, optimize, special

from errors import ParameterDomainError
from models import FamilyKind, FamilySpec

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

MIXTURE_BERNOULLI_WEIGHT = 0.45
MIXTURE_PARETO_WEIGHT = 0.55
STUDENT_QUADRATURE_TOL = 1e-10

_TINY = np.finfo(float).tiny


def parse_family(text: Union[str, dict, FamilySpec]) -> FamilySpec:
    """
    Build a FamilySpec from its text form, e.g. ``pareto(sh=1)`` or ``t(df=3)``.

    Raises:
        ParameterDomainError: unknown name or parameters outside their domain
    """
    if isinstance(text, FamilySpec):
        return text
    try:
        return FamilySpec.model_validate(text)
    except ValidationError as exc:
        reason = "; ".join(error["msg"] for error in exc.errors())
        raise ParameterDomainError(f"invalid family {text!r}: {reason}") from exc


def family_label(spec: FamilySpec) -> str:
    """Family name used in power tables"""
    return spec.kind.value


def family_param(spec: FamilySpec) -> str:
    """Shape parameter as shown in power tables, empty when parameter-free"""
    params = spec.parameters
    if not params or spec.kind == FamilyKind.ST_PETERSBURG:
        return ""
    if len(params) == 1:
        return f"{next(iter(params.values())):g}"
    return ";".join(f"{name}={value:g}" for name, value in params.items())


def is_discrete(spec: FamilySpec) -> bool:
    return spec.kind == FamilyKind.ST_PETERSBURG


def support_bounds(spec: FamilySpec) -> Tuple[float, float]:
    """Closed hull of the support"""
    kind = spec.kind
    if kind == FamilyKind.PARETO:
        return 1.0, math.inf
    if kind in (FamilyKind.FRECHET, FamilyKind.LOGLOGISTIC, FamilyKind.TRANSFORMED_PARETO, FamilyKind.PARETO_ZERO):
        return 0.0, math.inf
    if kind == FamilyKind.BERNOULLI_PARETO:
        return MIXTURE_PARETO_WEIGHT, math.inf
    if kind == FamilyKind.ST_PETERSBURG:
        return 2.0, math.inf
    if kind == FamilyKind.PIECEWISE_EXAMPLE:
        return 0.25, math.inf
    if kind == FamilyKind.UNIFORM:
        return spec.lo, spec.hi
    return -math.inf, math.inf


# ============================================================================
# DISCRETE FAMILIES
# ============================================================================

@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finite stored support with masses; truncation_mass is the mass left out"""
    support: np.ndarray
    pmf: np.ndarray
    truncation_mass: float = 0.0

    def __post_init__(self):
        if self.support.shape != self.pmf.shape or self.support.ndim != 1:
            raise ParameterDomainError("support and pmf must be 1-d arrays of equal length")
        if np.any(np.diff(self.support) <= 0):
            raise ParameterDomainError("support must be strictly increasing")
        self.support.setflags(write=False)
        self.pmf.setflags(write=False)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        """Lower bound of the CDF (exact up to truncation_mass)"""
        cumulative = np.concatenate(([0.0], np.cumsum(self.pmf)))
        positions = np.searchsorted(self.support, np.asarray(x, dtype=float), side="right")
        return _like_input(x, cumulative[positions])


def st_petersburg_distribution(k: int = 40) -> DiscreteDistribution:
    """St. Petersburg payoff 2^Y, P(Y = j) = 2^-j, truncated after k terms."""
    if k < 1:
        raise ParameterDomainError(f"truncation must be >= 1, got {k}")
    powers = np.arange(1, k + 1, dtype=float)
    return DiscreteDistribution(
        support=np.exp2(powers),
        pmf=np.exp2(-powers),
        truncation_mass=math.ldexp(1.0, -k),
    )


def to_discrete(spec: FamilySpec) -> DiscreteDistribution:
    if not is_discrete(spec):
        raise ParameterDomainError(f"{spec.label} is not a discrete family")
    return st_petersburg_distribution(spec.k)


# ============================================================================
# CDF
# ============================================================================

def _like_input(x, values: np.ndarray) -> ArrayLike:
    if np.ndim(x) == 0:
        return float(values)
    return values


def _pareto_cdf(x: np.ndarray, sh: float) -> np.ndarray:
    safe = np.maximum(x, 1.0)
    return np.where(x >= 1.0, -np.expm1(-sh * np.log(safe)), 0.0)


def _pareto_zero_cdf(x: np.ndarray, alpha: float) -> np.ndarray:
    safe = np.maximum(x, 0.0)
    return np.where(x >= 0.0, -np.expm1(-alpha * np.log1p(safe)), 0.0)


def _student_log_density(t: np.ndarray, df: float) -> np.ndarray:
    const = special.gammaln((df + 1) / 2) - special.gammaln(df / 2) - 0.5 * math.log(df * math.pi)
    with np.errstate(divide="ignore"):
        log_ratio = 2 * np.log(t) - math.log(df)
    return const - (df + 1) / 2 * np.logaddexp(0.0, log_ratio)


def _student_cdf(x: np.ndarray, df: float) -> np.ndarray:
    """
    Student t CDF by adaptive quadrature of the density.

    |x| <= 1 integrates the density over [0, |x|]; the tail beyond |x| > 1 is
    integrated after t = |x| r^(-1/df), which leaves a bounded integrand on (0, 1].
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    result = np.empty_like(flat)
    magnitude = np.abs(flat)

    body = np.isfinite(flat) & (magnitude <= 1.0)
    if np.any(body):
        m = magnitude[body]

        def body_integrand(s):
            return m * np.exp(_student_log_density(m * s, df))

        mass, _ = integrate.quad_vec(body_integrand, 0.0, 1.0, epsabs=STUDENT_QUADRATURE_TOL, epsrel=0.0, norm="max")
        result[body] = 0.5 + np.sign(flat[body]) * mass

    tail = np.isfinite(flat) & (magnitude > 1.0)
    if np.any(tail):
        m = magnitude[tail]
        log_m = np.log(m)

        def tail_integrand(r):
            log_r = math.log(max(r, 1e-300))
            log_t = log_m - log_r / df
            return np.exp(_student_log_density(np.exp(log_t), df) + log_m - math.log(df) - (1.0 / df + 1.0) * log_r)

        mass, _ = integrate.quad_vec(tail_integrand, 0.0, 1.0, epsabs=STUDENT_QUADRATURE_TOL, epsrel=0.0, norm="max")
        result[tail] = np.where(flat[tail] > 0, 1.0 - mass, mass)

    result[np.isposinf(flat)] = 1.0
    result[np.isneginf(flat)] = 0.0
    return np.clip(result, 0.0, 1.0).reshape(x.shape)


def _piecewise_cdf(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.select(
            [x < 0.25, x < 0.5, x < 1.0],
            [0.0, 0.8 - 0.2 / x, 0.4],
            default=1.0 - 0.6 / x,
        )


def _transformed_pareto_cdf(x: np.ndarray, alpha: float, a: float, b: float) -> np.ndarray:
    safe = np.maximum(x, 0.0)
    z = np.where(safe < 1.0, safe ** (1.0 / a), safe ** (1.0 / b))
    return np.where(x > 0.0, _pareto_zero_cdf(z, alpha), 0.0)


def _st_petersburg_cdf(x: np.ndarray) -> np.ndarray:
    safe = np.maximum(x, 2.0)
    exponent = np.floor(np.log2(safe))
    return np.where(x >= 2.0, -np.expm1(-exponent * math.log(2.0)), 0.0)


def cdf(spec: FamilySpec, x: ArrayLike) -> ArrayLike:
    """
    Evaluate the CDF of a family.

    Args:
        spec: Family and parameters
        x: Scalar or array of evaluation points

    Returns:
        Values in [0, 1] with the shape of x
    """
    points = np.asarray(x, dtype=float)
    kind = spec.kind

    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if kind == FamilyKind.PARETO:
            values = _pareto_cdf(points, spec.sh)
        elif kind == FamilyKind.FRECHET:
            safe = np.where(points > 0, points, 1.0)
            values = np.where(points > 0, np.exp(-safe ** -spec.sh), 0.0)
        elif kind == FamilyKind.LOGLOGISTIC:
            safe = np.where(points > 0, points, 1.0)
            values = np.where(points > 0, 1.0 / (1.0 + safe ** -spec.sh), 0.0)
        elif kind == FamilyKind.STUDENT:
            values = _student_cdf(points, spec.df)
        elif kind == FamilyKind.CAUCHY:
            values = 0.5 + np.arctan(points) / math.pi
        elif kind == FamilyKind.BERNOULLI_PARETO:
            values = 0.5 * _pareto_cdf(points / MIXTURE_PARETO_WEIGHT, 1.0) + 0.5 * _pareto_cdf(
                (points - MIXTURE_BERNOULLI_WEIGHT) / MIXTURE_PARETO_WEIGHT, 1.0
            )
        elif kind == FamilyKind.ST_PETERSBURG:
            values = _st_petersburg_cdf(points)
        elif kind == FamilyKind.PIECEWISE_EXAMPLE:
            values = _piecewise_cdf(points)
        elif kind == FamilyKind.TRANSFORMED_PARETO:
            values = _transformed_pareto_cdf(points, spec.alpha, spec.a, spec.b)
        elif kind == FamilyKind.PARETO_ZERO:
            values = _pareto_zero_cdf(points, spec.alpha)
        elif kind == FamilyKind.UNIFORM:
            values = np.clip((points - spec.lo) / (spec.hi - spec.lo), 0.0, 1.0)
        else:
            raise ParameterDomainError(f"no CDF for {kind}")

    return _like_input(x, np.clip(values, 0.0, 1.0))


# ============================================================================
# QUANTILE
# ============================================================================

def _invert_cdf(spec: FamilySpec, p: float) -> float:
    """Solve cdf(x) = p by bracketing and Brent's method"""
    lo, hi = -1.0, 1.0
    support_lo, support_hi = support_bounds(spec)
    if math.isfinite(support_lo):
        lo = support_lo - 1.0
    while cdf(spec, lo) >= p:
        lo = lo * 2.0 if lo < 0 else lo - 1.0 - abs(lo)
    if hi <= lo:
        hi = lo + 1.0
    while cdf(spec, hi) < p:
        hi = hi * 2.0 if hi > 0 else hi + 1.0 + abs(hi)
        if hi > 1e300:
            raise ParameterDomainError(f"quantile {p} of {spec.label} is not finite")
    return optimize.brentq(lambda t: cdf(spec, t) - p, lo, hi, xtol=1e-13, rtol=1e-14, maxiter=500)


def _quantile_array(spec: FamilySpec, p: np.ndarray) -> np.ndarray:
    kind = spec.kind
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if kind == FamilyKind.PARETO:
            return (1.0 - p) ** (-1.0 / spec.sh)
        if kind == FamilyKind.FRECHET:
            return (-np.log(p)) ** (-1.0 / spec.sh)
        if kind == FamilyKind.LOGLOGISTIC:
            return (p / (1.0 - p)) ** (1.0 / spec.sh)
        if kind == FamilyKind.CAUCHY:
            return np.tan(math.pi * (p - 0.5))
        if kind == FamilyKind.PARETO_ZERO:
            return np.expm1(-np.log1p(-p) / spec.alpha)
        if kind == FamilyKind.TRANSFORMED_PARETO:
            z = np.expm1(-np.log1p(-p) / spec.alpha)
            return np.where(z < 1.0, z ** spec.a, z ** spec.b)
        if kind == FamilyKind.UNIFORM:
            return spec.lo + p * (spec.hi - spec.lo)
        if kind == FamilyKind.PIECEWISE_EXAMPLE:
            return np.where(p <= 0.4, 0.2 / (0.8 - p), 0.6 / (1.0 - p))
        if kind == FamilyKind.ST_PETERSBURG:
            exponent = np.maximum(1.0, np.ceil(-np.log2(1.0 - p) - 1e-12))
            return np.exp2(exponent)
    # Student and the Bernoulli-Pareto sum have no closed-form inverse
    flat = np.asarray(p, dtype=float).ravel()
    return np.array([_invert_cdf(spec, float(q)) for q in flat]).reshape(np.shape(p))


def quantile(spec: FamilySpec, p: ArrayLike) -> ArrayLike:
    """
    Generalized inverse inf{x : F(x) >= p}.

    Raises:
        ParameterDomainError: p outside (0, 1)
    """
    probabilities = np.asarray(p, dtype=float)
    if np.any(~(probabilities > 0.0) | ~(probabilities < 1.0)):
        raise ParameterDomainError("quantile probabilities must lie in (0, 1)")
    return _like_input(p, np.asarray(_quantile_array(spec, probabilities), dtype=float))


# ============================================================================
# SAMPLING
# ============================================================================

def _open_uniform(n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    return np.maximum(u, _TINY)


def sample(spec: FamilySpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draw n i.i.d. observations.

    Student draws are a standard normal over sqrt(chi-square/df); the
    Bernoulli-Pareto sum draws the Bernoulli flags first; St. Petersburg is
    sampled without truncation. Every other family uses its quantile.
    """
    if n < 1:
        raise ParameterDomainError(f"sample size must be >= 1, got {n}")
    kind = spec.kind

    if kind == FamilyKind.STUDENT:
        normal = rng.standard_normal(n)
        chi2 = rng.chisquare(spec.df, n)
        return normal / np.sqrt(chi2 / spec.df)
    if kind == FamilyKind.BERNOULLI_PARETO:
        flags = rng.integers(0, 2, n)
        pareto = _quantile_array(FamilySpec(kind=FamilyKind.PARETO, sh=1.0), _open_uniform(n, rng))
        return MIXTURE_BERNOULLI_WEIGHT * flags + MIXTURE_PARETO_WEIGHT * pareto
    if kind == FamilyKind.ST_PETERSBURG:
        return np.exp2(rng.geometric(0.5, n).astype(float))

    return np.asarray(_quantile_array(spec, _open_uniform(n, rng)), dtype=float)
