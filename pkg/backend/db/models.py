"""
SQLAlchemy ORM Models

NOTE: These are separate from the pydantic models.
Pydantic = validation and exchange, SQLAlchemy = storage schema.
"""

from datetime import datetime

from sqlalchemy import Boolean, Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship

from .database import Base


class PowerStudyRun(Base):
    """One executed power study"""
    __tablename__ = "power_study_runs"

    id = Column(Integer, primary_key=True, index=True)
    table_id = Column(String(100), index=True, nullable=False)
    title = Column(String(300), nullable=False, default="")
    created_date = Column(DateTime, default=datetime.utcnow)
    scale = Column(Float, nullable=True)
    seed = Column(Integer, nullable=False, default=0)
    replications = Column(Integer, nullable=False)
    config_json = Column(Text, nullable=True)

    # Relationships
    cells = relationship("PowerCell", back_populates="run", cascade="all, delete-orphan", order_by="PowerCell.position")


class PowerCell(Base):
    """One row of a power table"""
    __tablename__ = "power_cells"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("power_study_runs.id"), nullable=False, index=True)
    position = Column(Integer, nullable=False)
    family = Column(String(50), nullable=False)
    param = Column(String(50), nullable=False, default="")
    theta = Column(String(200), nullable=False)
    eta = Column(String(200), nullable=False)
    label = Column(String(200), nullable=True)
    n = Column(Integer, nullable=False)
    method = Column(String(20), nullable=False)
    rate = Column(Float, nullable=True)
    se = Column(Float, nullable=True)
    seconds = Column(Float, nullable=False, default=0.0)
    rejections = Column(Integer, nullable=False, default=0)
    replications = Column(Integer, nullable=False, default=0)
    skipped = Column(Boolean, nullable=False, default=False)
    note = Column(Text, nullable=False, default="")

    # Relationships
    run = relationship("PowerStudyRun", back_populates="cells")
