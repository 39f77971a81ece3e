"""Harness settings for the simulator CLI."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Harness defaults loaded from environment variables (or a local .env file)."""

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8")

    runs_per_point: int = Field(
        200,
        alias="VFPE_RUNS_PER_POINT",
        description=(
            "Independent seeded runs per (scheme, sweep value) when a campaign file "
            "does not say otherwise."
        ),
    )
    workers: int | None = Field(
        None,
        alias="VFPE_WORKERS",
        description="Worker processes for campaigns. Unset means one per CPU.",
    )
    output_dir: str = Field(
        "results",
        alias="VFPE_OUTPUT_DIR",
        description="Default directory for campaign CSV tables.",
    )
    trace_dir: str | None = Field(
        None,
        alias="VFPE_TRACE_DIR",
        description=(
            "Optional directory for trajectory traces written by `simulate one --trace`. "
            "Defaults to docs/traces in the repo root."
        ),
    )
    log_level: str = Field(
        "INFO",
        alias="VFPE_LOG_LEVEL",
        description="Logging level for the rich console handler.",
    )


def get_settings() -> Settings:
    """Return a fresh settings instance; environment changes apply on the next call."""
    return Settings()
