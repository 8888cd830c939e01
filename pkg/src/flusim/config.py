"""
Configuration management using Pydantic Settings.

Supports loading from environment variables and .env files. Scenario-level
parameters live in scenario JSON documents (see flusim.runner.scenario);
these settings cover process-wide behaviour of the batch runner.
"""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="FLUSIM_",
        case_sensitive=False,
    )

    # Output
    output_dir: Path = Field(
        default=Path("results"),
        description="Default root directory for scenario artifacts",
    )
    cache_dir: Path = Field(
        default=Path(".flusim_cache"),
        description="Directory for cached synthesized populations",
    )

    # Execution
    max_workers: int = Field(
        default=1,
        ge=1,
        le=64,
        description="Worker processes used to run seeds of a batch in parallel",
    )
    log_json: bool = Field(default=False, description="Emit logs as JSON lines")

    # Reporting
    quantiles: list[float] = Field(
        default=[0.1, 0.5, 0.9],
        description="Quantiles written to the aggregate curves CSV",
    )
    unimodal_tolerance: float = Field(
        default=0.02,
        ge=0.0,
        le=1.0,
        description="Fluctuation (fraction of N) ignored when testing curve unimodality",
    )
    unimodal_window: int = Field(
        default=5,
        ge=1,
        description="Width (days) of the rolling mean applied before the unimodality test",
    )
    alignment_peak_window: int = Field(
        default=5,
        ge=0,
        description="Max peak-day distance (days) counted as aligned with the ODE",
    )


# Global settings instance
settings = Settings()
