"""
Limit Covariance

Covariance of the Gaussian limit of sqrt(n)(F_n,theta - F_theta), the plug-in
CDF of a linear combination. With theta_-j the weights without coordinate j,
the projection of the plug-in estimator on single observations gives

    Omega_jk(x, y) = int F_-j(x - theta_j u) F_-k(y - theta_k u) dF(u) - F_theta(x) F_theta(y)

and the limit covariance is the sum over all (j, k). Integrals run over
p in (0, 1) with u = F^-1(p), so heavy tails are handled without truncation.
The Monte Carlo oracle estimates the same covariance from simulated samples.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import integrate

from config import settings
from errors import CapabilityError, ParameterDomainError
from models import CovarianceSpec, FamilySpec, GridSpec, WeightVector

from .combine import WeightsLike, as_weights, grid_combination_cdf, parametric_combination_cdf, weighted_convolution
from .distributions import _quantile_array, cdf as family_cdf, is_discrete, parse_family, sample as draw_family
from .empirical import Sample, derived_rng, ecdf_eval

logger = logging.getLogger(__name__)

OMEGA_TOL = 1e-6
CAUCHY_TOL = 1e-7
ORACLE_MIN_REPS = 1000
DIAGONAL_FORMS = ("projection", "min")

# keeps u = F^-1(p) finite at the ends of (0, 1)
_P_EDGE = 1e-15

Component = Callable[[np.ndarray], np.ndarray]


def _covariance_spec(spec: Union[CovarianceSpec, FamilySpec, str], theta: Optional[WeightsLike] = None) -> CovarianceSpec:
    if isinstance(spec, CovarianceSpec):
        return spec
    if theta is None:
        raise ParameterDomainError("weights are required with a bare family")
    return CovarianceSpec(family=parse_family(spec), theta=as_weights(theta))


def _require_continuous(family: FamilySpec) -> None:
    if is_discrete(family):
        raise CapabilityError(f"limit covariance needs a continuous family, got {family.label}")


def _component_cdf(family: FamilySpec, weights: Sequence[float], tol: float) -> Component:
    """
    CDF of sum(weights_i X_i) as a vectorized callable.

    No weights: the point mass at 0. One weight: closed form. Two: pointwise
    weighted convolution. More: the parametric grid, interpolated.
    """
    weights = sorted(weights, reverse=True)
    if not weights:
        return lambda z: (np.asarray(z) >= 0).astype(float)
    if len(weights) == 1:
        scale = weights[0]
        return lambda z: np.asarray(family_cdf(family, np.asarray(z) / scale), dtype=float)
    if len(weights) == 2:
        first, second = weights
        return lambda z: np.atleast_1d(weighted_convolution(first, second, family, family, np.asarray(z, dtype=float)))
    combination = parametric_combination_cdf(family, WeightVector(entries=tuple(weights)), GridSpec(points=settings.grid_points), tol=tol)
    return lambda z: np.asarray(combination(np.asarray(z, dtype=float)), dtype=float)


def _integrate(family: FamilySpec, integrand: Callable[[np.ndarray], np.ndarray], tol: float) -> np.ndarray:
    """int integrand(u) dF(u), computed over p with u = F^-1(p)"""
    def over_p(p):
        u = float(_quantile_array(family, np.array(min(max(p, _P_EDGE), 1.0 - _P_EDGE))))
        return integrand(np.array([u]))

    value, error = integrate.quad_vec(over_p, 0.0, 1.0, epsabs=tol, epsrel=0.0, norm="max", limit=20_000)
    if error > tol:
        logger.warning(f"covariance quadrature for {family.label} stopped at error {error:.2e} (tolerance {tol:.0e})")
    return np.asarray(value, dtype=float)


def _leave_out(theta: Sequence[float], j: int) -> List[float]:
    return [w for index, w in enumerate(theta) if index != j]


# ============================================================================
# GENERAL FAMILIES
# ============================================================================

def covariance_omega(
    spec: Union[CovarianceSpec, FamilySpec, str],
    j: int,
    k: int,
    x: float,
    y: float,
    theta: Optional[WeightsLike] = None,
    diagonal: str = "projection",
) -> float:
    """
    One term Omega_jk(x, y) of the limit covariance.

    Args:
        spec: CovarianceSpec, or a family together with `theta`
        j, k: 0-based coordinates
        x, y: Evaluation points
        diagonal: For j == k, "projection" integrates F_-j(x - .) F_-j(y - .);
            "min" integrates F_-j(min(x, y) - .) instead

    Raises:
        CapabilityError: discrete family
        ParameterDomainError: index out of range or unknown diagonal form
    """
    cov = _covariance_spec(spec, theta)
    _require_continuous(cov.family)
    if diagonal not in DIAGONAL_FORMS:
        raise ParameterDomainError(f"diagonal must be one of {DIAGONAL_FORMS}, got '{diagonal}'")
    weights = list(cov.theta.entries)
    s = len(weights)
    if not (0 <= j < s and 0 <= k < s):
        raise ParameterDomainError(f"indices must be in [0, {s}), got j={j}, k={k}")

    if s == 1:
        scale = weights[0]
        fx, fy, fxy = family_cdf(cov.family, np.array([x, y, min(x, y)]) / scale)
        return float(fxy - fx * fy)

    component_j = _component_cdf(cov.family, _leave_out(weights, j), cov.tol)
    component_k = component_j if k == j else _component_cdf(cov.family, _leave_out(weights, k), cov.tol)
    tj, tk = weights[j], weights[k]
    use_min = j == k and diagonal == "min"

    def integrand(u):
        gx = component_j(x - tj * u)
        gy = component_j(y - tj * u)
        if use_min:
            cross = component_j(min(x, y) - tj * u)
        else:
            cross = gx * component_k(y - tk * u) if k != j else gx * gy
        return np.concatenate([cross, gx, gy])

    cross, fx, fy = _integrate(cov.family, integrand, cov.tol)
    return float(cross - fx * fy)


def total_covariance(
    spec: Union[CovarianceSpec, FamilySpec, str],
    x: float,
    y: float,
    theta: Optional[WeightsLike] = None,
    diagonal: str = "projection",
) -> float:
    """
    Sum of Omega_jk(x, y) over all (j, k).

    In projection form the sum factors as
    int (sum_j g_j(x, u)) (sum_k g_k(y, u)) dF(u) - s^2 F_theta(x) F_theta(y).
    """
    cov = _covariance_spec(spec, theta)
    _require_continuous(cov.family)
    weights = list(cov.theta.entries)
    s = len(weights)
    if s == 1 or diagonal == "min":
        return float(sum(
            covariance_omega(cov, j, k, x, y, diagonal=diagonal) for j in range(s) for k in range(s)
        ))
    if diagonal not in DIAGONAL_FORMS:
        raise ParameterDomainError(f"diagonal must be one of {DIAGONAL_FORMS}, got '{diagonal}'")

    components = [_component_cdf(cov.family, _leave_out(weights, j), cov.tol) for j in range(s)]

    def integrand(u):
        gx = sum(component(x - w * u) for component, w in zip(components, weights))
        gy = sum(component(y - w * u) for component, w in zip(components, weights))
        return np.concatenate([gx * gy, gx, gy])

    cross, sx, sy = _integrate(cov.family, integrand, cov.tol)
    # sx = s F_theta(x), sy = s F_theta(y)
    return float(cross - sx * sy)


def covariance_matrix(
    spec: Union[CovarianceSpec, FamilySpec, str],
    points: Sequence[float],
    theta: Optional[WeightsLike] = None,
    diagonal: str = "projection",
) -> np.ndarray:
    """Total covariance on all pairs of `points`; symmetric by construction"""
    cov = _covariance_spec(spec, theta)
    size = len(points)
    matrix = np.empty((size, size))
    for a in range(size):
        for b in range(a, size):
            matrix[a, b] = matrix[b, a] = total_covariance(cov, points[a], points[b], diagonal=diagonal)
    return matrix


# ============================================================================
# CLOSED FORMS
# ============================================================================

def _cauchy_cdf(z: np.ndarray) -> np.ndarray:
    return 0.5 + np.arctan(z) / math.pi


def cauchy_covariance(theta: WeightsLike, x: float, y: float, tol: float = CAUCHY_TOL) -> float:
    """
    Limit covariance for standard Cauchy data.

    A Cauchy combination with total weight 1 - theta_j is Cauchy with that
    scale, so every leave-one-out CDF is closed form.

    Raises:
        ParameterDomainError: weights do not sum to 1
    """
    weights = as_weights(theta)
    if abs(weights.total - 1.0) > 1e-9:
        raise ParameterDomainError(f"Cauchy covariance needs weights summing to 1, got {weights.total:g}")
    t = np.asarray(weights.entries, dtype=float)
    if t.size == 1:
        fx, fy, fxy = _cauchy_cdf(np.array([x, y, min(x, y)]))
        return float(fxy - fx * fy)
    rest = 1.0 - t

    def over_p(p):
        u = math.tan(math.pi * (min(max(p, _P_EDGE), 1.0 - _P_EDGE) - 0.5))
        gx = float(np.sum(_cauchy_cdf((x - t * u) / rest)))
        gy = float(np.sum(_cauchy_cdf((y - t * u) / rest)))
        return np.array([gx * gy])

    value, _ = integrate.quad_vec(over_p, 0.0, 1.0, epsabs=tol, epsrel=0.0, norm="max", limit=20_000)
    return float(value[0] - t.size ** 2 * _cauchy_cdf(x) * _cauchy_cdf(y))


def samplemean_covariance(family: Union[FamilySpec, str], s: int, x: float, y: float, tol: float = OMEGA_TOL) -> float:
    """
    Limit covariance for the sample mean of s observations:
    s^2 (int F^{*(s-1)}(sx - u) F^{*(s-1)}(sy - u) dF(u) - F^{*s}(sx) F^{*s}(sy)).
    """
    if s < 2:
        raise ParameterDomainError(f"sample-mean covariance needs s >= 2, got {s}")
    family = parse_family(family)
    _require_continuous(family)
    power = _component_cdf(family, [1.0] * (s - 1), tol)

    def integrand(u):
        gx = power(s * x - u)
        gy = power(s * y - u)
        return np.concatenate([gx * gy, gx, gy])

    cross, fx, fy = _integrate(family, integrand, tol)
    return float(s * s * (cross - fx * fy))


# ============================================================================
# MONTE CARLO ORACLE
# ============================================================================

def _plugin_at(values: np.ndarray, thetas: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Plug-in CDF of the combination at a few points"""
    if thetas.size == 1:
        return np.asarray(ecdf_eval(Sample.from_values(values), points / thetas[0]))
    if thetas.size == 2:
        ordered = np.sort(values)
        n = ordered.size
        # pairs (i, l) with t0 X_i + t1 X_l <= x
        bounds = (points[:, None] - thetas[0] * ordered[None, :]) / thetas[1]
        return np.searchsorted(ordered, bounds, side="right").sum(axis=1) / (n * n)
    combination = grid_combination_cdf(Sample.from_values(values), thetas, GridSpec(points=settings.grid_points))
    return np.asarray(combination(points))


def _oracle_draws(family: FamilySpec, thetas: np.ndarray, points: np.ndarray, n: int, seed: int, indices: Sequence[int]) -> np.ndarray:
    draws = np.empty((len(indices), points.size))
    for position, index in enumerate(indices):
        values = draw_family(family, n, derived_rng(seed, index))
        draws[position] = math.sqrt(n) * _plugin_at(values, thetas, points)
    return draws


def _jackknife_covariance(a: np.ndarray, b: np.ndarray) -> Tuple[float, float]:
    reps = a.size
    estimate = float(np.cov(a, b, ddof=1)[0, 1])
    sa, sb, sab = a.sum(), b.sum(), float(np.dot(a, b))
    mean_a = (sa - a) / (reps - 1)
    mean_b = (sb - b) / (reps - 1)
    leave_one_out = (sab - a * b - (reps - 1) * mean_a * mean_b) / (reps - 2)
    se = math.sqrt((reps - 1) / reps * float(np.sum((leave_one_out - leave_one_out.mean()) ** 2)))
    return estimate, se


def empirical_process_covariance(
    family: Union[FamilySpec, str],
    theta: WeightsLike,
    x: float,
    y: float,
    n: int = 2000,
    reps: int = ORACLE_MIN_REPS,
    seed: int = 0,
    workers: Optional[int] = 1,
) -> Tuple[float, float]:
    """
    Monte Carlo covariance of sqrt(n) F_n,theta at (x, y) with its jackknife SE.

    Subtracting F_theta does not change the covariance, so the raw scaled
    plug-in values are used. Replicate r draws from derived_rng(seed, r).

    Returns:
        (estimate, standard_error)
    """
    if reps < ORACLE_MIN_REPS:
        raise ParameterDomainError(f"the covariance oracle needs at least {ORACLE_MIN_REPS} replicates, got {reps}")
    if n < 2:
        raise ParameterDomainError(f"sample size must be >= 2, got {n}")
    family = parse_family(family)
    thetas = np.sort(np.asarray(as_weights(theta).entries, dtype=float))[::-1]
    points = np.array([x, y], dtype=float)

    n_jobs = settings.resolved_workers(workers)
    pieces = max(1, min(reps, n_jobs * 4))
    bounds = np.linspace(0, reps, pieces + 1).astype(int)
    parts = Parallel(n_jobs=n_jobs)(
        delayed(_oracle_draws)(family, thetas, points, n, seed, list(range(lo, hi)))
        for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
    )
    draws = np.concatenate(parts)
    estimate, se = _jackknife_covariance(draws[:, 0], draws[:, 1])
    logger.info(f"covariance oracle {family.label} {as_weights(theta)} at ({x:g}, {y:g}): {estimate:.5f} ± {se:.5f}")
    return estimate, se

