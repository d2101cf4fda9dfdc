"""
Stochastic Dominance FastAPI Application

HTTP surface over the same services as the CLI:
- dominance tests on posted observations
- majorization, dominance networks and shape-class checks
- limit covariance and CDF curves
- power studies, stored in the results database

SECURITY: Rate limited, CORS configured, input validated.
"""

import logging
from typing import Optional

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from slowapi import Limiter, _rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded
from slowapi.util import get_remote_address
from sqlalchemy.orm import Session

from config import settings
from data_store import data_store
from db import get_db, init_db
from db.repository import PowerTableRepository
from errors import DominanceError
from models import (
    CheckClassRequest,
    CovarianceRequest,
    CovarianceSpec,
    CurvesRequest,
    GridSpec,
    MajorizeRequest,
    SimulateRequest,
    TestRequest,
)
from services.asymptotics import total_covariance
from services.combine import combination_curves
from services.empirical import Sample
from services.majorization import (
    H_SPLIT_MAX_DIMENSION,
    NETWORK_MAX_SIZE,
    dominance_network,
    is_h_split_majorized,
    relation,
    t_transform_chain,
)
from services.sdtest import run_test
from services.shapeclass import run_checks
from services.simharness import TABLE_PRESETS, reproduce_table, table_config

# Configure logging
logging.basicConfig(level=settings.log_level.upper())
logger = logging.getLogger(__name__)

# Initialize rate limiter
limiter = Limiter(key_func=get_remote_address)

app = FastAPI(
    title="Stochastic Dominance",
    description="Tests of stochastic dominance between linear combinations of i.i.d. variables",
    version="0.1.0",
)

app.state.limiter = limiter
app.add_exception_handler(RateLimitExceeded, _rate_limit_exceeded_handler)

# Restrict with SDTEST_ALLOWED_ORIGINS in production
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"] if "*" in settings.origins else settings.origins,
    allow_credentials=True,
    allow_methods=["GET", "POST"],
    allow_headers=["*"],
)

init_db()


# ============================================================================
# ERROR HANDLERS
# ============================================================================

@app.exception_handler(DominanceError)
async def dominance_error_handler(request: Request, exc: DominanceError):
    return JSONResponse(
        status_code=exc.http_status,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """
    Global exception handler - never leaks stack traces to clients.

    Logs full error internally, returns safe generic message.
    """
    logger.error(f"Unhandled exception: {exc}", exc_info=True)
    return JSONResponse(status_code=500, content={"detail": "Internal server error"})


# ============================================================================
# HEALTH & INFO ENDPOINTS
# ============================================================================

@app.get("/")
@limiter.limit(settings.rate_limit)
def read_root(request: Request):
    """Root endpoint - API information"""
    return {
        "name": "Stochastic Dominance API",
        "version": "0.1.0",
        "description": "Dominance tests, majorization and power studies for linear combinations",
        "status": "running",
    }


@app.get("/health")
@limiter.limit(settings.rate_limit)
def health_check(request: Request):
    """Health check endpoint"""
    return {
        "status": "healthy",
        "tables": len(TABLE_PRESETS),
        "scenarios_loaded": len(data_store.scenarios),
        "datasets_loaded": len(data_store.datasets),
    }


# ============================================================================
# DOMINANCE TESTS
# ============================================================================

@app.post("/api/v1/test")
@limiter.limit(settings.compute_rate_limit)
def test_dominance(request: Request, body: TestRequest):
    """
    Test H0: sum(theta X) >=st sum(eta X) on the posted observations.

    A rejected null is a normal result (`reject: true`), not an error.
    """
    sample = Sample.from_values(body.data)
    result = run_test(sample, body.theta, body.eta, body.config)
    return {"theta": str(body.theta), "eta": str(body.eta), "result": result.model_dump(mode="json")}


# ============================================================================
# MAJORIZATION & SHAPE CLASSES
# ============================================================================

@app.post("/api/v1/majorize")
@limiter.limit(settings.rate_limit)
def majorize(request: Request, body: MajorizeRequest):
    """Majorization relation, the T-transform chain and the h-split check"""
    order = relation(body.theta, body.eta)
    chain = t_transform_chain(body.theta, body.eta) or []
    h_split: Optional[bool] = None
    if max(body.theta.dimension, body.eta.dimension) <= H_SPLIT_MAX_DIMENSION:
        h_split = is_h_split_majorized(body.theta, body.eta)
    return {
        "theta": str(body.theta),
        "eta": str(body.eta),
        "relation": order,
        "t_transforms": [step.model_dump() for step in chain],
        "h_split": h_split,
    }


@app.get("/api/v1/network")
@limiter.limit(settings.rate_limit)
def network(
    request: Request,
    base: str = Query(default="2:1,3:2", max_length=500, pattern=r"^\d+:\d+(,\d+:\d+)*$"),
    max_size: int = Query(default=24, ge=1, le=NETWORK_MAX_SIZE, alias="max"),
):
    """
    Dominance relations between sample means derivable from `base`.

    Query params:
        base: Relations a:b meaning the mean of a dominates the mean of b
        max: Largest sample size
    """
    pairs = [tuple(int(part) for part in item.split(":")) for item in base.split(",")]
    edges = dominance_network(pairs, max_size)
    return {"count": len(edges), "edges": [edge.model_dump() for edge in edges]}


@app.post("/api/v1/check-class")
@limiter.limit(settings.rate_limit)
def check_class(request: Request, body: CheckClassRequest):
    """Grid checks of class L and the inverted-CDF properties"""
    reports = run_checks(body.family, body.property, body.tol)
    return {"family": body.family.label, "reports": [report.model_dump(mode="json") for report in reports.values()]}


# ============================================================================
# COVARIANCE & CURVES
# ============================================================================

@app.post("/api/v1/covariance")
@limiter.limit(settings.compute_rate_limit)
def covariance(request: Request, body: CovarianceRequest):
    """Limit covariance of sqrt(n)(F_n,theta - F_theta) at (x, y)"""
    spec = CovarianceSpec(family=body.family, theta=body.theta)
    value = total_covariance(spec, body.x, body.y, diagonal=body.diagonal)
    return {"family": body.family.label, "theta": str(body.theta), "x": body.x, "y": body.y, "covariance": value}


@app.post("/api/v1/curves")
@limiter.limit(settings.compute_rate_limit)
def curves(request: Request, body: CurvesRequest):
    """CDF curves of several combinations on common points"""
    source = body.family if body.family is not None else Sample.from_values(body.data)
    points, values = combination_curves(source, body.thetas, GridSpec(points=body.grid_points))
    return {
        "x": points.tolist(),
        "curves": [{"theta": str(theta), "values": column.tolist()} for theta, column in zip(body.thetas, values)],
    }


# ============================================================================
# POWER STUDIES
# ============================================================================

@app.get("/api/v1/tables")
@limiter.limit(settings.rate_limit)
def list_tables(request: Request):
    """Preset power tables"""
    return {"count": len(TABLE_PRESETS), "tables": [{"id": key, "title": title} for key, (title, _) in TABLE_PRESETS.items()]}


@app.post("/api/v1/simulate")
@limiter.limit(settings.compute_rate_limit)
def simulate(request: Request, body: SimulateRequest, db: Session = Depends(get_db)):
    """
    Run a preset table at the requested scale.

    Keep the scale small here; full-scale runs belong on the command line.
    """
    table = reproduce_table(body.table, body.scale, grid_points=body.grid_points)
    run_id = None
    if body.store:
        cfg = table_config(body.table, body.scale, grid_points=body.grid_points)
        run_id = PowerTableRepository(db).save_table(table, cfg, body.scale).id
    return {"run_id": run_id, "table": table.model_dump(mode="json")}


@app.get("/api/v1/power-tables")
@limiter.limit(settings.rate_limit)
def list_power_tables(request: Request, table: Optional[str] = None, db: Session = Depends(get_db)):
    """Stored power study runs, most recent first"""
    runs = PowerTableRepository(db).list_runs(table)
    return {
        "count": len(runs),
        "runs": [
            {
                "id": run.id,
                "table_id": run.table_id,
                "title": run.title,
                "created": run.created_date.isoformat() if run.created_date else None,
                "scale": run.scale,
                "replications": run.replications,
            }
            for run in runs
        ],
    }


@app.get("/api/v1/power-tables/{run_id}")
@limiter.limit(settings.rate_limit)
def get_power_table(request: Request, run_id: int, db: Session = Depends(get_db)):
    """One stored power table"""
    table = PowerTableRepository(db).get_table(run_id)
    if table is None:
        raise HTTPException(status_code=404, detail=f"Power table {run_id} not found")
    return table.model_dump(mode="json")


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
