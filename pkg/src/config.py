"""Configuration settings and logging setup.

Defaults can be overridden through ``MCCS_*`` environment variables or a
``.env`` file; command-line flags take precedence over both.
"""

import logging
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from rich.console import Console
from rich.logging import RichHandler


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="MCCS_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Background model fitting
    tolerance: float = Field(default=1e-8, gt=0)
    max_iterations: int = Field(default=10000, ge=1)

    # Mining
    min_nodes: int = Field(default=2, ge=1)
    threads: int = Field(default=1, ge=1)

    # Output
    float_digits: int = Field(default=12, ge=1, le=17)
    log_level: str = "WARNING"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def configure_logging(level: str | int = "WARNING") -> None:
    """Route the standard logging tree through a Rich handler on stderr."""
    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
    )
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[handler],
        force=True,
    )
