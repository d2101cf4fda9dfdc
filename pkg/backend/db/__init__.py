"""
Database Module

SQLAlchemy storage of power study results.
"""

from .database import Base, SessionLocal, create_results_engine, engine, get_db, init_db
from . import models
from . import repository

__all__ = ["Base", "SessionLocal", "create_results_engine", "engine", "get_db", "init_db", "models", "repository"]
