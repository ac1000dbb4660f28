"""
Configuration management for the blockpf experiment harness.

Handles environment-based process settings with sensible defaults for
desk-scale runs. Experiment recipes themselves live in flat key=value files
(see blockpf.utils.config_loader).
"""

from functools import lru_cache
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseSettings):
    """Process settings with BLOCKPF_* environment variable support."""

    model_config = SettingsConfigDict(
        env_prefix="BLOCKPF_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    # Logging Configuration
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"
    LOG_TO_FILE: bool = False
    LOG_JSON: bool = False

    # Execution Configuration
    WORKERS: int = 1

    # Paths
    EXPERIMENTS_DIR: str = "config/experiments"
    OUTPUT_DIR: str = "results"

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Normalise and validate the logging level."""
        level = v.upper()
        if level not in _LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL must be one of {', '.join(_LOG_LEVELS)}")
        return level

    @field_validator("WORKERS")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be a positive integer")
        return v

    @property
    def experiments_path(self) -> Path:
        return Path(self.EXPERIMENTS_DIR)

    @property
    def output_path(self) -> Path:
        return Path(self.OUTPUT_DIR)

    @property
    def parallel(self) -> bool:
        """Whether replicates run in a process pool."""
        return self.WORKERS > 1


@lru_cache()
def get_settings() -> Settings:
    """Get cached process settings."""
    return Settings()
