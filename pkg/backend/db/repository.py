"""
Database Repository Pattern

Converts between pydantic PowerTable objects and their ORM rows. All queries
go through ORM methods.
"""

from typing import List, Optional

from sqlalchemy.orm import Session

from models import PowerRow, PowerTable, ScenarioConfig, TestMethod

from . import models

_CELL_FIELDS = (
    "family", "param", "theta", "eta", "label", "n", "rate", "se",
    "seconds", "rejections", "replications", "skipped", "note",
)


class PowerTableRepository:
    """Repository for power study runs"""

    def __init__(self, db: Session):
        self.db = db

    def save_table(
        self,
        table: PowerTable,
        config: Optional[ScenarioConfig] = None,
        scale: Optional[float] = None,
    ) -> models.PowerStudyRun:
        """Store a table with its rows; returns the new run"""
        run = models.PowerStudyRun(
            table_id=table.table_id,
            title=table.title,
            scale=scale,
            seed=config.seed if config else 0,
            replications=table.replications,
            config_json=config.model_dump_json() if config else None,
        )
        for position, row in enumerate(table.rows):
            cell = models.PowerCell(position=position, method=row.method.value)
            for name in _CELL_FIELDS:
                setattr(cell, name, getattr(row, name))
            run.cells.append(cell)
        self.db.add(run)
        self.db.commit()
        self.db.refresh(run)
        return run

    def list_runs(self, table_id: Optional[str] = None, limit: int = 50) -> List[models.PowerStudyRun]:
        """Most recent runs first"""
        query = self.db.query(models.PowerStudyRun)
        if table_id:
            query = query.filter(models.PowerStudyRun.table_id == table_id)
        return query.order_by(models.PowerStudyRun.id.desc()).limit(limit).all()

    def get_table(self, run_id: int) -> Optional[PowerTable]:
        run = self.db.query(models.PowerStudyRun).filter(models.PowerStudyRun.id == run_id).first()
        if run is None:
            return None
        rows = [
            PowerRow(method=TestMethod(cell.method), **{name: getattr(cell, name) for name in _CELL_FIELDS})
            for cell in run.cells
        ]
        return PowerTable(table_id=run.table_id, title=run.title, replications=run.replications, rows=rows)
