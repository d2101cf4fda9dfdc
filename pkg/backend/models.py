"""
Pydantic models derived from the contracts in ``contracts/``.

Every validated input and every serialized result goes through these
models: the CLI, the HTTP app, the simulation harness and the results store
all share them. Array-backed value types (samples, CDFs) live next to the
services that build them.
"""

import math
import re
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import settings


# ============================================================================
# DISTRIBUTION FAMILIES
# ============================================================================

class FamilyKind(str, Enum):
    """Parametric families known to the library"""
    PARETO = "pareto"
    FRECHET = "frechet"
    LOGLOGISTIC = "loglogistic"
    STUDENT = "student"
    CAUCHY = "cauchy"
    BERNOULLI_PARETO = "mix-bern-pareto"
    ST_PETERSBURG = "st-petersburg"
    PIECEWISE_EXAMPLE = "piecewise-example"
    TRANSFORMED_PARETO = "transformed-pareto"
    PARETO_ZERO = "pareto-zero"
    UNIFORM = "uniform"


# Parameter names each kind accepts, in positional order
FAMILY_PARAMETERS: Dict[FamilyKind, Tuple[str, ...]] = {
    FamilyKind.PARETO: ("sh",),
    FamilyKind.FRECHET: ("sh",),
    FamilyKind.LOGLOGISTIC: ("sh",),
    FamilyKind.STUDENT: ("df",),
    FamilyKind.CAUCHY: (),
    FamilyKind.BERNOULLI_PARETO: (),
    FamilyKind.ST_PETERSBURG: ("k",),
    FamilyKind.PIECEWISE_EXAMPLE: (),
    FamilyKind.TRANSFORMED_PARETO: ("alpha", "a", "b"),
    FamilyKind.PARETO_ZERO: ("alpha",),
    FamilyKind.UNIFORM: ("lo", "hi"),
}

FAMILY_DEFAULTS: Dict[FamilyKind, Dict[str, float]] = {
    FamilyKind.ST_PETERSBURG: {"k": 40},
    FamilyKind.PARETO_ZERO: {"alpha": 1.0},
    FamilyKind.UNIFORM: {"lo": 0.0, "hi": 1.0},
}

FAMILY_ALIASES: Dict[str, FamilyKind] = {
    "t": FamilyKind.STUDENT,
    "studentt": FamilyKind.STUDENT,
    "llogis": FamilyKind.LOGLOGISTIC,
    "log-logistic": FamilyKind.LOGLOGISTIC,
    "bernoulli-pareto": FamilyKind.BERNOULLI_PARETO,
    "mixture": FamilyKind.BERNOULLI_PARETO,
    "stpetersburg": FamilyKind.ST_PETERSBURG,
    "st_petersburg": FamilyKind.ST_PETERSBURG,
    "piecewise": FamilyKind.PIECEWISE_EXAMPLE,
    "lomax": FamilyKind.PARETO_ZERO,
}

_FAMILY_PATTERN = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*$")


def _parse_family_text(text: str) -> Dict[str, Any]:
    """Turn ``name(key=value, ...)`` into FamilySpec fields."""
    match = _FAMILY_PATTERN.match(text)
    if not match:
        raise ValueError(f"cannot parse family '{text}'")
    name = match.group(1).lower()
    try:
        kind = FAMILY_ALIASES.get(name) or FamilyKind(name)
    except ValueError:
        known = ", ".join(k.value for k in FamilyKind)
        raise ValueError(f"unknown family '{name}' (known: {known})")

    fields: Dict[str, Any] = {"kind": kind}
    args = (match.group(2) or "").strip()
    if not args:
        return fields
    positional = FAMILY_PARAMETERS[kind]
    for position, item in enumerate(part.strip() for part in args.split(",")):
        if "=" in item:
            key, value = (piece.strip() for piece in item.split("=", 1))
        elif position < len(positional):
            key, value = positional[position], item
        else:
            raise ValueError(f"too many parameters for '{kind.value}'")
        fields[key] = float(value)
    return fields


class FamilySpec(BaseModel):
    """
    A parametric distribution family with its parameters.

    Accepts the text form ``pareto(sh=1)`` wherever a FamilySpec is expected.
    """
    model_config = ConfigDict(frozen=True)

    kind: FamilyKind
    sh: Optional[float] = Field(default=None, description="Tail shape (Pareto, Frechet, loglogistic)")
    df: Optional[float] = Field(default=None, description="Student degrees of freedom")
    alpha: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    k: Optional[int] = Field(default=None, description="St. Petersburg truncation")
    lo: Optional[float] = None
    hi: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def _from_text(cls, data: Any) -> Any:
        if isinstance(data, str):
            data = _parse_family_text(data)
        if isinstance(data, dict) and "kind" in data:
            data = dict(data)
            kind = data["kind"]
            if isinstance(kind, str) and not isinstance(kind, FamilyKind):
                kind = FAMILY_ALIASES.get(kind.lower(), kind)
            try:
                kind = FamilyKind(kind)
            except ValueError:
                return data
            data["kind"] = kind
            for name, default in FAMILY_DEFAULTS.get(kind, {}).items():
                data.setdefault(name, default)
        return data

    @model_validator(mode="after")
    def _check_parameters(self) -> "FamilySpec":
        allowed = FAMILY_PARAMETERS[self.kind]
        for name in ("sh", "df", "alpha", "a", "b", "k", "lo", "hi"):
            value = getattr(self, name)
            if value is None and name in allowed:
                raise ValueError(f"{self.kind.value} requires parameter '{name}'")
            elif value is not None and name not in allowed:
                raise ValueError(f"{self.kind.value} does not take parameter '{name}'")
            elif value is not None and not math.isfinite(float(value)):
                raise ValueError(f"parameter '{name}' must be finite")

        for name in ("sh", "df", "alpha"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ValueError(f"parameter '{name}' must be > 0, got {value}")
        if self.kind == FamilyKind.TRANSFORMED_PARETO and not (self.b > self.a >= 1):
            raise ValueError(f"transformed-pareto needs b > a >= 1, got a={self.a}, b={self.b}")
        if self.kind == FamilyKind.ST_PETERSBURG and not (1 <= self.k <= 60):
            raise ValueError(f"st-petersburg truncation must be in [1, 60], got {self.k}")
        if self.kind == FamilyKind.UNIFORM and not self.lo < self.hi:
            raise ValueError(f"uniform needs lo < hi, got lo={self.lo}, hi={self.hi}")
        return self

    @property
    def parameters(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in FAMILY_PARAMETERS[self.kind]}

    @property
    def label(self) -> str:
        """Canonical text form, e.g. ``pareto(sh=1)``"""
        params = self.parameters
        if not params:
            return self.kind.value
        inner = ",".join(f"{name}={value:g}" for name, value in params.items())
        return f"{self.kind.value}({inner})"

    def __str__(self) -> str:
        return self.label


# ============================================================================
# WEIGHT VECTORS AND GRIDS
# ============================================================================

class WeightVector(BaseModel):
    """
    Strictly positive finite weights of a linear combination.

    Accepts ``"0.5,0.5"`` or a list of numbers wherever a WeightVector is
    expected.
    """
    model_config = ConfigDict(frozen=True)

    entries: Tuple[float, ...] = Field(min_length=1)

    @model_validator(mode="before")
    @classmethod
    def _from_text(cls, data: Any) -> Any:
        if isinstance(data, str):
            parts = [part for part in re.split(r"[,\s]+", data.strip()) if part]
            return {"entries": tuple(float(part) for part in parts)}
        if isinstance(data, (list, tuple)):
            return {"entries": tuple(data)}
        return data

    @field_validator("entries")
    @classmethod
    def _positive(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        for value in v:
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"weights must be finite and > 0, got {value}")
        return v

    @classmethod
    def sample_mean(cls, s: int) -> "WeightVector":
        """Weights (1/s, ..., 1/s) of the sample mean of s observations"""
        if s < 1:
            raise ValueError(f"sample mean needs s >= 1, got {s}")
        return cls(entries=(1.0 / s,) * s)

    @property
    def dimension(self) -> int:
        return len(self.entries)

    @property
    def total(self) -> float:
        return math.fsum(self.entries)

    @property
    def label(self) -> str:
        return ",".join(f"{value:g}" for value in self.entries)

    def __str__(self) -> str:
        return f"({self.label})"


class GridSpacing(str, Enum):
    """How grid points are laid out between lo and hi"""
    ASINH = "asinh"
    LINEAR = "linear"


class GridSpec(BaseModel):
    """Grid used by the grid evaluator; lo/hi default to the padded support"""
    model_config = ConfigDict(frozen=True)

    points: int = Field(default=4096, ge=16, le=1_000_000)
    lo: Optional[float] = None
    hi: Optional[float] = None
    spacing: GridSpacing = Field(default_factory=lambda: GridSpacing(settings.grid_spacing))
    pad: float = Field(default=0.01, ge=0.0, le=1.0, description="Padding as a fraction of the range")

    @model_validator(mode="after")
    def _ordered(self) -> "GridSpec":
        if (self.lo is None) != (self.hi is None):
            raise ValueError("grid lo and hi must be given together")
        if self.lo is not None and not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got {self.lo} >= {self.hi}")
        return self


# ============================================================================
# TESTS
# ============================================================================

class TestMethod(str, Enum):
    """Critical value source for the dominance test"""
    CAUCHY = "cauchy"
    BOOTSTRAP = "bootstrap"


class EvaluatorMode(str, Enum):
    """Which combination CDF evaluator a test uses"""
    AUTO = "auto"
    EXACT = "exact"
    GRID = "grid"


class TestConfig(BaseModel):
    """Settings of one dominance test"""
    __test__ = False

    alpha: float = Field(default=0.1, gt=0.0, lt=1.0)
    method: TestMethod = TestMethod.BOOTSTRAP
    reps: int = Field(default=1000, ge=100, le=1_000_000, description="Bootstrap or Monte Carlo draws")
    seed: int = Field(default=0, ge=0)
    grid: GridSpec = Field(default_factory=GridSpec)
    budget: int = Field(default=20_000_000, ge=1, description="Maximum enumerated tuples in exact mode")
    mode: EvaluatorMode = EvaluatorMode.AUTO
    workers: int = Field(default=1, ge=0, description="joblib workers, 0 for all cores")


class TestResult(BaseModel):
    """Outcome of one dominance test, with diagnostics"""
    __test__ = False

    statistic: float = Field(ge=0.0)
    scaled_statistic: float = Field(ge=0.0)
    critical_value: float
    p_value: float = Field(ge=0.0, le=1.0)
    reject: bool
    witness_x: float
    method: TestMethod
    mode: EvaluatorMode
    n: int
    reps: int
    alpha: float
    seed: int
    grid_points: Optional[int] = None
    reference_quantiles: Dict[str, float] = Field(default_factory=dict)

    def to_kv(self) -> List[str]:
        """Machine-readable ``key=value`` lines"""
        lines = [
            f"statistic={self.statistic:.10g}",
            f"scaled_statistic={self.scaled_statistic:.10g}",
            f"critical_value={self.critical_value:.10g}",
            f"p_value={self.p_value:.10g}",
            f"reject={str(self.reject).lower()}",
            f"witness_x={self.witness_x:.10g}",
            f"method={self.method.value}",
            f"mode={self.mode.value}",
            f"n={self.n}",
            f"reps={self.reps}",
            f"alpha={self.alpha:g}",
            f"seed={self.seed}",
        ]
        if self.grid_points is not None:
            lines.append(f"grid_points={self.grid_points}")
        for key, value in self.reference_quantiles.items():
            lines.append(f"reference_{key}={value:.10g}")
        return lines


# ============================================================================
# MAJORIZATION
# ============================================================================

class TTransform(BaseModel):
    """
    T-transform on coordinates i, j (0-based):
    new_i = lam*v_i + (1-lam)*v_j, new_j = (1-lam)*v_i + lam*v_j.
    """
    model_config = ConfigDict(frozen=True)

    i: int = Field(ge=0)
    j: int = Field(ge=0)
    lam: float = Field(ge=0.0, le=1.0)

    def describe(self) -> str:
        return f"T(i={self.i + 1}, j={self.j + 1}, lambda={self.lam:.6g})"


class DominanceEdge(BaseModel):
    """Mean of `larger` observations dominates the mean of `smaller` ones"""
    model_config = ConfigDict(frozen=True)

    larger: int = Field(ge=1)
    smaller: int = Field(ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "DominanceEdge":
        if self.larger <= self.smaller:
            raise ValueError(f"edge needs larger > smaller, got {self.larger} -> {self.smaller}")
        return self

    def __str__(self) -> str:
        return f"{self.larger} -> {self.smaller}"


# ============================================================================
# SHAPE CLASSES
# ============================================================================

class ShapeProperty(str, Enum):
    """Distributional shape properties checked numerically"""
    CLASS_L = "class-L"
    INVERTED_CONCAVITY = "inverted-concavity"
    ANTI_STARSHAPED = "anti-starshaped"
    SUBADDITIVE = "subadditive"


class ShapeReport(BaseModel):
    """Result of a grid check of one shape property"""
    property: ShapeProperty
    holds: bool
    max_violation: float
    witness: Tuple[float, ...] = ()
    evaluations: int = 0


# ============================================================================
# ASYMPTOTIC COVARIANCE
# ============================================================================

class CovarianceSpec(BaseModel):
    """Family and weights whose plug-in CDF covariance is evaluated"""
    family: FamilySpec
    theta: WeightVector
    tol: float = Field(default=1e-6, gt=0.0, le=1e-2)


# ============================================================================
# SIMULATION HARNESS
# ============================================================================

class WeightPair(BaseModel):
    """Null hypothesis: sum(theta*X) dominates sum(eta*X)"""
    model_config = ConfigDict(frozen=True)

    theta: WeightVector
    eta: WeightVector
    label: Optional[str] = Field(default=None, description="Reference row label when it differs from the tested null")

    @property
    def display(self) -> str:
        return self.label or f"{self.theta} vs {self.eta}"


class ScenarioConfig(BaseModel):
    """A power study: every family x pair x size x method cell"""
    name: str = Field(default="custom", max_length=100)
    title: str = Field(default="", max_length=200)
    families: List[FamilySpec] = Field(min_length=1)
    pairs: List[WeightPair] = Field(default_factory=list)
    sizes: List[int] = Field(default_factory=lambda: [100, 500], min_length=1)
    methods: List[TestMethod] = Field(default_factory=lambda: [TestMethod.BOOTSTRAP, TestMethod.CAUCHY], min_length=1)
    alpha: float = Field(default=0.1, gt=0.0, lt=1.0)
    replications: int = Field(default=1000, ge=50)
    reps: int = Field(default=1000, ge=100)
    seed: int = Field(default=0, ge=0)
    workers: int = Field(default=0, ge=0)
    grid: GridSpec = Field(default_factory=lambda: GridSpec(points=2048))
    budget: int = Field(default=20_000_000, ge=1)

    @field_validator("sizes")
    @classmethod
    def _sizes(cls, v: List[int]) -> List[int]:
        for n in v:
            if n < 2:
                raise ValueError(f"sample sizes must be >= 2, got {n}")
        return v


def _quoted(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


class PowerRow(BaseModel):
    """One cell of a power table"""
    family: str
    param: str
    theta: str
    eta: str
    n: int
    method: TestMethod
    label: Optional[str] = None
    rate: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    se: Optional[float] = None
    seconds: float = 0.0
    rejections: int = 0
    replications: int = 0
    skipped: bool = False
    note: str = ""

    def to_csv(self) -> str:
        rate = "" if self.rate is None else f"{self.rate:.4f}"
        se = "" if self.se is None else f"{self.se:.4f}"
        return ",".join([
            self.family,
            self.param,
            f'"{self.theta}"',
            f'"{self.eta}"',
            str(self.n),
            self.method.value,
            _quoted(self.label or ""),
            rate,
            se,
            f"{self.seconds:.2f}",
            _quoted(self.note),
        ])


POWER_TABLE_HEADER = "family,param,theta,eta,n,method,label,rate,se,seconds,note"


class PowerTable(BaseModel):
    """Rejection rates of a power study"""
    table_id: str
    title: str = ""
    replications: int
    rows: List[PowerRow] = Field(default_factory=list)

    def to_csv(self) -> str:
        lines = [POWER_TABLE_HEADER]
        lines.extend(row.to_csv() for row in self.rows)
        return "\n".join(lines) + "\n"

    def cell(self, *, family: str, theta: str, eta: str, n: int, method: TestMethod, param: Optional[str] = None) -> PowerRow:
        """Find one row; raises KeyError when absent."""
        for row in self.rows:
            if (row.family == family and row.theta == theta and row.eta == eta
                    and row.n == n and row.method == method
                    and (param is None or row.param == param)):
                return row
        raise KeyError(f"no cell {family}/{param}/{theta}/{eta}/{n}/{method.value}")


# ============================================================================
# HTTP REQUEST BODIES
# ============================================================================

class TestRequest(BaseModel):
    """Observations and hypothesis for POST /api/v1/test"""
    __test__ = False

    data: List[float] = Field(min_length=2, max_length=100_000)
    theta: WeightVector
    eta: WeightVector
    config: TestConfig = Field(default_factory=TestConfig)


class MajorizeRequest(BaseModel):
    theta: WeightVector
    eta: WeightVector


class CheckClassRequest(BaseModel):
    family: FamilySpec
    property: Optional[ShapeProperty] = None
    tol: float = Field(default=1e-9, gt=0.0, le=1e-2)


class CovarianceRequest(BaseModel):
    family: FamilySpec
    theta: WeightVector
    x: float
    y: float
    diagonal: str = Field(default="projection", pattern=r"^(projection|min)$")


class CurvesRequest(BaseModel):
    """Either a family or observations, and the combinations to draw"""
    family: Optional[FamilySpec] = None
    data: Optional[List[float]] = Field(default=None, min_length=1, max_length=100_000)
    thetas: List[WeightVector] = Field(min_length=1, max_length=16)
    grid_points: int = Field(default=512, ge=16, le=8192)

    @model_validator(mode="after")
    def _one_source(self) -> "CurvesRequest":
        if (self.family is None) == (self.data is None):
            raise ValueError("give exactly one of 'family' or 'data'")
        return self


class SimulateRequest(BaseModel):
    table: str = Field(max_length=50, pattern=r"^[a-z0-9-]+$")
    scale: float = Field(default=0.05, gt=0.0, le=1.0)
    grid_points: Optional[int] = Field(default=None, ge=16, le=8192)
    store: bool = True
