"""
Shape Classes

Grid checks of the shape properties that drive dominance between weighted
sums of nonnegative variables. With H(x) = 1 - F(1/x):
- class L: V(z) = F(x + y z) + F(x + y/z) decreasing on (0, 1] for 0 <= y <= x
- inverted concavity: H concave
- anti-starshaped: H(λx) >= λH(x)
- subadditive: H(x + y) <= H(x) + H(y)

Concave H implies the other three. A report only certifies the grid it
was computed on.
"""

import logging
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy import optimize

from errors import ParameterDomainError
from models import FamilySpec, ShapeProperty, ShapeReport

from .distributions import cdf as family_cdf, parse_family, quantile as family_quantile

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9

CDFSource = Union[FamilySpec, Callable[[np.ndarray], np.ndarray]]


def _cdf_callable(F: CDFSource) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(F, FamilySpec):
        return lambda x: np.asarray(family_cdf(F, x), dtype=float)
    return lambda x: np.asarray(F(x), dtype=float)


def inverted_cdf(F: CDFSource) -> Callable[[np.ndarray], np.ndarray]:
    """H(x) = 1 - F(1/x) for x > 0"""
    cdf = _cdf_callable(F)
    return lambda x: 1.0 - cdf(1.0 / np.asarray(x, dtype=float))


def _quantiles(F: CDFSource, probabilities: np.ndarray) -> np.ndarray:
    if isinstance(F, FamilySpec):
        return np.asarray(family_quantile(F, probabilities), dtype=float)
    cdf = _cdf_callable(F)
    result = []
    for p in probabilities:
        hi = 1.0
        while cdf(np.array(hi)) < p:
            hi *= 2.0
            if hi > 1e300:
                raise ParameterDomainError("CDF never reaches the requested probability")
        result.append(optimize.brentq(lambda t: float(cdf(np.array(t))) - p, 0.0, hi, xtol=1e-12))
    return np.array(result)


def _require_nonnegative_support(F: CDFSource, tol: float) -> None:
    mass_below_zero = float(_cdf_callable(F)(np.array(-1e-12)))
    if mass_below_zero > tol:
        raise ParameterDomainError(f"CDF puts mass {mass_below_zero:.3g} below 0; shape checks need F(0-) = 0")


def _log_grid(points: int) -> np.ndarray:
    return np.geomspace(1e-3, 1e3, points)


def check_class_L(
    F: CDFSource,
    tol: float = DEFAULT_TOL,
    x_points: int = 64,
    y_points: int = 32,
    z_points: int = 64,
) -> ShapeReport:
    """
    Grid check of class L membership.

    x runs over the F-quantiles 0.01..0.999, y over [0, x], z over a
    decreasing geometric grid in (0, 1]. The violation is the largest
    increase of V as z grows.

    Raises:
        ParameterDomainError: F puts mass on (-inf, 0)
    """
    _require_nonnegative_support(F, tol)
    cdf = _cdf_callable(F)
    x = _quantiles(F, np.linspace(0.01, 0.999, x_points))
    y = x[:, None] * np.linspace(0.0, 1.0, y_points)[None, :]
    z = np.geomspace(1.0, 1e-2, z_points)

    xs, ys, zs = x[:, None, None], y[:, :, None], z[None, None, :]
    V = cdf(xs + ys * zs) + cdf(xs + ys / zs)

    # z decreases along the last axis, so V must not decrease along it
    later_min = np.minimum.accumulate(V[..., ::-1], axis=-1)[..., ::-1]
    increase = V[..., :-1] - later_min[..., 1:]
    index = np.unravel_index(int(np.argmax(increase)), increase.shape)
    violation = max(float(increase[index]), 0.0)
    i, j, k = index
    report = ShapeReport(
        property=ShapeProperty.CLASS_L,
        holds=violation <= tol,
        max_violation=violation,
        witness=(float(x[i]), float(y[i, j]), float(z[k])),
        evaluations=int(2 * V.size),
    )
    logger.debug(f"class L check: violation {violation:.3e}")
    return report


def check_inverted_concavity(F: CDFSource, tol: float = DEFAULT_TOL, points: int = 512) -> ShapeReport:
    """Midpoint concavity of H on all pairs of a log-spaced grid"""
    _require_nonnegative_support(F, tol)
    H = inverted_cdf(F)
    u = _log_grid(points)
    Hu = H(u)
    gap = (Hu[:, None] + Hu[None, :]) / 2.0 - H((u[:, None] + u[None, :]) / 2.0)
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    violation = max(float(gap[i, j]), 0.0)
    return ShapeReport(
        property=ShapeProperty.INVERTED_CONCAVITY,
        holds=violation <= tol,
        max_violation=violation,
        witness=(float(u[i]), float(u[j])),
        evaluations=int(gap.size + points),
    )


def check_anti_starshaped(F: CDFSource, tol: float = DEFAULT_TOL, points: int = 512, lambdas: int = 64) -> ShapeReport:
    """H(λx) >= λH(x) for λ in (0, 1)"""
    _require_nonnegative_support(F, tol)
    H = inverted_cdf(F)
    x = _log_grid(points)
    lam = np.arange(1, lambdas + 1) / (lambdas + 1.0)
    gap = lam[None, :] * H(x)[:, None] - H(lam[None, :] * x[:, None])
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    violation = max(float(gap[i, j]), 0.0)
    return ShapeReport(
        property=ShapeProperty.ANTI_STARSHAPED,
        holds=violation <= tol,
        max_violation=violation,
        witness=(float(x[i]), float(lam[j])),
        evaluations=int(gap.size + points),
    )


def check_subadditive(F: CDFSource, tol: float = DEFAULT_TOL, points: int = 512) -> ShapeReport:
    """H(x + y) <= H(x) + H(y) on all pairs of a log-spaced grid"""
    if points * points > 1_000_000:
        raise ParameterDomainError("subadditivity check is limited to 10^6 pairs")
    _require_nonnegative_support(F, tol)
    H = inverted_cdf(F)
    x = _log_grid(points)
    Hx = H(x)
    gap = H(x[:, None] + x[None, :]) - Hx[:, None] - Hx[None, :]
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    violation = max(float(gap[i, j]), 0.0)
    return ShapeReport(
        property=ShapeProperty.SUBADDITIVE,
        holds=violation <= tol,
        max_violation=violation,
        witness=(float(x[i]), float(x[j])),
        evaluations=int(gap.size + points),
    )


CHECKS: Dict[ShapeProperty, Callable[..., ShapeReport]] = {
    ShapeProperty.CLASS_L: check_class_L,
    ShapeProperty.INVERTED_CONCAVITY: check_inverted_concavity,
    ShapeProperty.ANTI_STARSHAPED: check_anti_starshaped,
    ShapeProperty.SUBADDITIVE: check_subadditive,
}


def run_checks(F: CDFSource, prop: Optional[ShapeProperty] = None, tol: float = DEFAULT_TOL) -> Dict[ShapeProperty, ShapeReport]:
    """One property, or all four when prop is None"""
    selected = [prop] if prop is not None else list(CHECKS)
    return {item: CHECKS[item](F, tol=tol) for item in selected}


def corpus() -> Dict[str, FamilySpec]:
    """Reference CDFs for the shape-class implications"""
    return {
        "pareto-at-zero": parse_family("pareto-zero(alpha=1)"),
        "transformed-pareto": parse_family("transformed-pareto(alpha=1,a=2,b=3)"),
        "piecewise-example": parse_family("piecewise-example"),
        # H(x) = x^2 on [0, 1]
        "convex-h": parse_family("pareto(sh=2)"),
    }


def run_all_checks(F: CDFSource, tol: float = DEFAULT_TOL) -> Dict[ShapeProperty, ShapeReport]:
    return run_checks(F, None, tol)
