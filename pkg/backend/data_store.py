"""
File ingestion and export.

Observation files hold one value per line (blank lines and ``#`` comments
are skipped). Scenario files are JSON documents following
``contracts/scenario_config.json``. Power tables and curves are written as
comma-separated text.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from errors import DataLoadError
from models import PowerTable, ScenarioConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def parse_observations(lines: Iterable[str]) -> np.ndarray:
    """
    Parse observation lines.

    Raises:
        DataLoadError: a line that is not a finite decimal number, or no data
    """
    values: List[float] = []
    for number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        try:
            value = float(text)
        except ValueError:
            raise DataLoadError(f"not a number: '{text}'", line=number)
        if not np.isfinite(value):
            raise DataLoadError(f"observations must be finite, got '{text}'", line=number)
        values.append(value)
    if not values:
        raise DataLoadError("no observations found")
    return np.array(values)


def load_sample(path: PathLike) -> np.ndarray:
    """Observations of a data file, in file order"""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            values = parse_observations(handle)
    except OSError as exc:
        raise DataLoadError(f"cannot read {path}: {exc.strerror}")
    except UnicodeDecodeError as exc:
        raise DataLoadError(f"{path} is not valid UTF-8 (byte offset {exc.start})")
    logger.debug(f"Loaded {values.size} observations from {path}")
    return values


def load_scenario_config(path: PathLike) -> ScenarioConfig:
    """
    Read a ScenarioConfig from a JSON file.

    Raises:
        DataLoadError: unreadable file or malformed JSON
        pydantic.ValidationError: fields outside their domain
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except OSError as exc:
        raise DataLoadError(f"cannot read {path}: {exc.strerror}")
    except UnicodeDecodeError as exc:
        raise DataLoadError(f"{path} is not valid UTF-8 (byte offset {exc.start})")
    except json.JSONDecodeError as exc:
        raise DataLoadError(f"invalid JSON in {path}: {exc.msg}", line=exc.lineno)
    return ScenarioConfig.model_validate(payload)


def format_curves(points: np.ndarray, columns: Dict[str, np.ndarray]) -> str:
    """x followed by one value column per curve"""
    names = list(columns)
    lines = [",".join(["x", *names])]
    for index, x in enumerate(points):
        lines.append(",".join([f"{x:.10g}", *(f"{columns[name][index]:.10g}" for name in names)]))
    return "\n".join(lines) + "\n"


def write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_power_table(table: PowerTable, path: PathLike) -> Path:
    return write_text(path, table.to_csv())


class DataStore:
    """Catalog of the bundled scenario and observation files"""

    def __init__(self, root: Optional[PathLike] = None):
        self.scenarios: Dict[str, ScenarioConfig] = {}
        self.datasets: Dict[str, Path] = {}
        self._load_bundled(Path(root) if root else None)

    def _find(self, name: str, root: Optional[Path]) -> Optional[Path]:
        candidates = [root / name] if root else [
            Path(__file__).parent.parent / name,
            Path(name),
            Path("..") / name,
        ]
        for candidate in candidates:
            if candidate.is_dir():
                return candidate
        return None

    def _load_bundled(self, root: Optional[Path]) -> None:
        scenario_dir = self._find("scenarios", root)
        if scenario_dir is None:
            logger.warning("No scenarios directory found")
        else:
            for scenario_file in sorted(scenario_dir.glob("*.json")):
                try:
                    scenario = load_scenario_config(scenario_file)
                except (DataLoadError, ValidationError) as exc:
                    logger.error(f"Error loading {scenario_file.name}: {exc}")
                    continue
                self.scenarios[scenario_file.stem] = scenario
                logger.debug(f"Loaded scenario {scenario_file.stem}: {scenario.title or scenario.name}")

        data_dir = self._find("data", root)
        if data_dir is not None:
            for data_file in sorted(data_dir.glob("*.txt")):
                self.datasets[data_file.stem] = data_file

    def get_scenario(self, name: str) -> Optional[ScenarioConfig]:
        return self.scenarios.get(name)

    def list_scenarios(self) -> List[Tuple[str, ScenarioConfig]]:
        return sorted(self.scenarios.items())

    def dataset(self, name: str) -> np.ndarray:
        """
        Observations of a bundled data file.

        Raises:
            DataLoadError: unknown name or malformed file
        """
        if name not in self.datasets:
            raise DataLoadError(f"unknown dataset '{name}'; available: {', '.join(sorted(self.datasets)) or 'none'}")
        return load_sample(self.datasets[name])

    def list_datasets(self) -> Sequence[str]:
        return sorted(self.datasets)


# Global catalog instance
data_store = DataStore()
