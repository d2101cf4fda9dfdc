"""
Application settings.

Values come from the environment (prefix ``SDTEST_``) or an optional ``.env``
file next to the process working directory. Command-line flags override them.
"""

import os
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime configuration shared by the CLI, the HTTP app and the tests"""

    model_config = SettingsConfigDict(
        env_prefix="SDTEST_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    log_level: str = "INFO"

    # Persistence of power tables
    database_url: str = "sqlite:///./dominance_results.db"

    # HTTP surface
    allowed_origins: str = "*"
    rate_limit: str = "100/minute"
    compute_rate_limit: str = "10/minute"

    # Evaluators
    enumeration_budget: int = 20_000_000
    grid_points: int = 4096
    harness_grid_points: int = 2048
    grid_spacing: Literal["asinh", "linear"] = "asinh"

    # Tests
    default_alpha: float = 0.1
    default_reps: int = 1000

    # 0 means every available core
    workers: int = 0

    run_slow_tests: bool = False

    def resolved_workers(self, requested: int | None = None) -> int:
        """Number of joblib workers for a run (explicit request wins)."""
        workers = self.workers if requested is None else requested
        if workers <= 0:
            return os.cpu_count() or 1
        return workers

    @property
    def origins(self) -> list[str]:
        return [origin.strip() for origin in self.allowed_origins.split(",") if origin.strip()]


settings = Settings()
