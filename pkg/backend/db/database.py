"""
Results Database

Engine and sessions for stored power tables. The URL comes from
settings.database_url; SQLite files are the default, any SQLAlchemy URL works.
All access goes through the ORM.
"""

import logging

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import declarative_base, sessionmaker
from sqlalchemy.pool import StaticPool

from config import settings

logger = logging.getLogger(__name__)


def create_results_engine(url: str) -> Engine:
    """
    Engine for a results database URL.

    In-memory SQLite (``sqlite://``) shares one connection across threads so
    every session sees the same tables.
    """
    if not url.startswith("sqlite"):
        return create_engine(url, pool_pre_ping=True)
    options = {"connect_args": {"check_same_thread": False}}
    if url in ("sqlite://", "sqlite:///:memory:"):
        options["poolclass"] = StaticPool
    return create_engine(url, **options)


engine = create_results_engine(settings.database_url)

SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

# Base class for ORM models
Base = declarative_base()


def init_db(bind: Engine | None = None) -> None:
    """Create the power table schema where missing"""
    from . import models  # noqa: F401  (registers the tables on Base)

    target = bind or engine
    Base.metadata.create_all(bind=target)
    logger.debug(f"Results schema ready on {target.url.render_as_string(hide_password=True)}")


def get_db():
    """Request-scoped session for FastAPI endpoints (``Depends(get_db)``)"""
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
