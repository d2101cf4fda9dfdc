"""
Tests for power table storage.

Each test gets its own in-memory SQLite database.
"""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / "backend"))

import pytest
from sqlalchemy.orm import sessionmaker

from db import create_results_engine, init_db
from db.repository import PowerTableRepository
from models import PowerRow, PowerTable, ScenarioConfig, TestMethod, WeightPair
from services.distributions import parse_family


@pytest.fixture
def repo():
    engine = create_results_engine("sqlite://")
    init_db(bind=engine)
    session = sessionmaker(autocommit=False, autoflush=False, bind=engine)()
    try:
        yield PowerTableRepository(session)
    finally:
        session.close()


def _table(table_id: str = "pareto-means") -> PowerTable:
    rows = [
        PowerRow(
            family="pareto", param="2", theta="(0.5,0.5)", eta="(1)", n=100,
            method=TestMethod.BOOTSTRAP, rate=0.12, se=0.0325, seconds=1.5,
            rejections=6, replications=50,
        ),
        PowerRow(
            family="pareto", param="2", theta="(0.5,0.5)", eta="(2)", n=100,
            method=TestMethod.CAUCHY, skipped=True,
            note="the Cauchy method needs equal weight totals",
        ),
    ]
    return PowerTable(table_id=table_id, title="Pareto alternatives", replications=50, rows=rows)


def test_save_and_get_table(repo):
    """Test a stored table comes back row for row"""
    run = repo.save_table(_table())
    assert run.id is not None
    assert len(run.cells) == 2

    loaded = repo.get_table(run.id)
    assert loaded is not None
    assert loaded.table_id == "pareto-means"
    assert loaded.title == "Pareto alternatives"
    assert loaded.rows == _table().rows
    assert loaded.to_csv() == _table().to_csv()


def test_skipped_row_kept(repo):
    """Test skipped cells keep their note and empty rate"""
    run = repo.save_table(_table())
    skipped = repo.get_table(run.id).rows[1]
    assert skipped.skipped
    assert skipped.rate is None
    assert "equal weight totals" in skipped.note


def test_config_stored_with_run(repo):
    """Test the scenario and scale are stored alongside the rows"""
    cfg = ScenarioConfig(
        name="pareto-means",
        families=[parse_family("pareto(sh=2)")],
        pairs=[WeightPair(theta="0.5,0.5", eta="1")],
        sizes=[100],
        replications=50,
        reps=100,
        seed=17,
    )
    run = repo.save_table(_table(), config=cfg, scale=0.05)
    assert run.seed == 17
    assert run.scale == 0.05
    assert ScenarioConfig.model_validate_json(run.config_json) == cfg


def test_list_runs_newest_first(repo):
    """Test listing order and filtering by table id"""
    first = repo.save_table(_table("pareto-means"))
    second = repo.save_table(_table("mixture-means"))
    third = repo.save_table(_table("pareto-means"))

    assert [run.id for run in repo.list_runs()] == [third.id, second.id, first.id]
    assert [run.id for run in repo.list_runs("pareto-means")] == [third.id, first.id]
    assert len(repo.list_runs(limit=1)) == 1


def test_missing_run(repo):
    """Test unknown run ids return None"""
    assert repo.get_table(12345) is None
    assert repo.list_runs("nonmajorized-1") == []
