"""
Tests for observation files, scenario files and CSV output.
"""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent / "backend"))

import json

import numpy as np
import pytest
from pydantic import ValidationError

from data_store import (
    DataStore,
    format_curves,
    load_sample,
    load_scenario_config,
    parse_observations,
    write_power_table,
)
from errors import DataLoadError
from models import POWER_TABLE_HEADER, PowerRow, PowerTable, TestMethod

TINY_SCENARIO = {
    "name": "tiny",
    "title": "Tiny Pareto run",
    "families": ["pareto(sh=2)"],
    "pairs": [{"theta": "0.5,0.5", "eta": "1"}],
    "sizes": [20],
    "replications": 50,
    "reps": 100,
}


# ============================================================================
# OBSERVATIONS
# ============================================================================

def test_parse_skips_comments_and_blanks():
    """Test comments and blank lines are ignored"""
    values = parse_observations(["# header", "1.5", "", "  2.25  ", "# note", "3e-1"])
    assert np.array_equal(values, np.array([1.5, 2.25, 0.3]))


def test_parse_error_carries_line_number():
    """Test the failing line is named"""
    with pytest.raises(DataLoadError) as excinfo:
        parse_observations(["# header", "1.0", "two"])
    assert excinfo.value.line == 3
    assert "line 3" in str(excinfo.value)


def test_parse_rejects_non_finite():
    """Test inf and nan are refused"""
    for bad in ["inf", "nan", "-inf"]:
        with pytest.raises(DataLoadError):
            parse_observations(["1.0", bad])


def test_parse_empty_input():
    """Test a file without observations is an error"""
    with pytest.raises(DataLoadError):
        parse_observations(["# only a comment", ""])


def test_load_sample_from_file(tmp_path):
    """Test values come back in file order"""
    path = tmp_path / "obs.txt"
    path.write_text("3\n1\n2\n")
    assert load_sample(path).tolist() == [3.0, 1.0, 2.0]
    with pytest.raises(DataLoadError):
        load_sample(tmp_path / "missing.txt")


def test_load_sample_invalid_utf8(tmp_path):
    """Test undecodable bytes are a data error"""
    path = tmp_path / "latin.txt"
    path.write_bytes(b"1.0\n\xff\xfe2.0\n")
    with pytest.raises(DataLoadError) as excinfo:
        load_sample(path)
    assert "UTF-8" in str(excinfo.value)


# ============================================================================
# SCENARIO FILES
# ============================================================================

def test_load_scenario_config(tmp_path):
    """Test a scenario file validates into a config"""
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY_SCENARIO))
    cfg = load_scenario_config(path)
    assert cfg.name == "tiny"
    assert cfg.families[0].label == "pareto(sh=2)"
    assert cfg.sizes == [20]


def test_scenario_json_error_line(tmp_path):
    """Test malformed JSON reports its line"""
    path = tmp_path / "broken.json"
    path.write_text('{\n  "name": "x",\n  "sizes": [20,\n}\n')
    with pytest.raises(DataLoadError) as excinfo:
        load_scenario_config(path)
    assert excinfo.value.line is not None
    assert excinfo.value.line >= 3


def test_scenario_invalid_utf8(tmp_path):
    """Test undecodable scenario files are a data error"""
    path = tmp_path / "latin.json"
    path.write_bytes(b'{"name": "\xe9t\xe9"}\n')
    with pytest.raises(DataLoadError):
        load_scenario_config(path)


def test_scenario_out_of_domain(tmp_path):
    """Test field errors surface as validation errors"""
    path = tmp_path / "few.json"
    path.write_text(json.dumps({**TINY_SCENARIO, "replications": 10}))
    with pytest.raises(ValidationError):
        load_scenario_config(path)


# ============================================================================
# OUTPUT & CATALOG
# ============================================================================

def test_format_curves():
    """Test the curve CSV layout"""
    text = format_curves(np.array([0.0, 1.0]), {"(1)": np.array([0.5, 0.75]), "(0.5,0.5)": np.array([0.5, 0.7])})
    assert text.splitlines() == ["x,(1),(0.5,0.5)", "0,0.5,0.5", "1,0.75,0.7"]


def test_write_power_table_creates_directories(tmp_path):
    """Test tables are written below missing directories"""
    path = write_power_table(PowerTable(table_id="empty", replications=50), tmp_path / "out" / "t.csv")
    assert path.read_text() == POWER_TABLE_HEADER + "\n"


def test_write_power_table_keeps_label_and_skip_reason(tmp_path):
    """Test skipped cells keep their reason and pairs keep their label"""
    table = PowerTable(table_id="mixed", replications=50, rows=[
        PowerRow(family="pareto", param="2", theta="(0.5,0.5)", eta="(1)", n=20,
                 method=TestMethod.BOOTSTRAP, label="(1) vs (0.5,0.5)", rate=0.12, se=0.046,
                 rejections=6, replications=50),
        PowerRow(family="cauchy", param="", theta="(0.5,0.5)", eta="(2)", n=20,
                 method=TestMethod.CAUCHY, skipped=True,
                 note="Cauchy calibration needs equal weight totals (1 vs 2)"),
    ])
    lines = write_power_table(table, tmp_path / "mixed.csv").read_text().splitlines()
    assert lines[0] == "family,param,theta,eta,n,method,label,rate,se,seconds,note"
    assert lines[1] == 'pareto,2,"(0.5,0.5)","(1)",20,bootstrap,"(1) vs (0.5,0.5)",0.1200,0.0460,0.00,""'
    assert lines[2] == 'cauchy,,"(0.5,0.5)","(2)",20,cauchy,"",,,0.00,"Cauchy calibration needs equal weight totals (1 vs 2)"'


def test_data_store_catalog(tmp_path):
    """Test bundled scenarios and datasets are found; broken files are skipped"""
    (tmp_path / "scenarios").mkdir()
    (tmp_path / "data").mkdir()
    (tmp_path / "scenarios" / "tiny.json").write_text(json.dumps(TINY_SCENARIO))
    (tmp_path / "scenarios" / "broken.json").write_text("{")
    (tmp_path / "data" / "obs.txt").write_text("1\n2\n")

    store = DataStore(tmp_path)
    assert [name for name, _ in store.list_scenarios()] == ["tiny"]
    assert store.get_scenario("tiny").title == "Tiny Pareto run"
    assert store.get_scenario("broken") is None
    assert store.list_datasets() == ["obs"]
    assert store.dataset("obs").tolist() == [1.0, 2.0]
    with pytest.raises(DataLoadError):
        store.dataset("other")


def test_data_store_empty_root(tmp_path):
    """Test an empty root gives an empty catalog"""
    store = DataStore(tmp_path)
    assert store.list_scenarios() == []
    assert store.list_datasets() == []
