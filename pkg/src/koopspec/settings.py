"""Pydantic settings for koopspec command-line runs."""

from __future__ import annotations

import logging
from functools import lru_cache
from pathlib import Path
from typing import ClassVar, Literal, Optional

from pydantic import AliasChoices, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]
VALID_LOG_LEVELS: tuple[LogLevel, ...] = ("DEBUG", "INFO", "WARNING", "ERROR")


class Settings(BaseSettings):
    """Environment-driven configuration shared by every CLI invocation."""

    model_config: ClassVar[SettingsConfigDict] = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        populate_by_name=True,
    )

    seed: Optional[int] = Field(
        default=None,
        ge=0,
        validation_alias=AliasChoices("KOOP_SEED", "KOOPSPEC_SEED"),
        description="Overrides the seed stored in a run config.",
    )
    log_level: LogLevel = Field(
        default="WARNING",
        validation_alias=AliasChoices("KOOPSPEC_LOG_LEVEL", "LOG_LEVEL"),
    )
    max_workers: int = Field(
        default=1,
        ge=1,
        le=64,
        validation_alias=AliasChoices("KOOPSPEC_MAX_WORKERS"),
        description="Thread pool size for independent schedule entries.",
    )
    output_dir: Path = Field(
        default_factory=Path.cwd,
        validation_alias=AliasChoices("KOOPSPEC_OUTPUT_DIR"),
        description="Base directory for relative output paths.",
    )

    @field_validator("log_level", mode="before")
    @classmethod
    def _normalise_level(cls, value: object) -> LogLevel | object:
        if isinstance(value, str):
            candidate = value.strip().upper()
            if candidate in VALID_LOG_LEVELS:
                return candidate
        return value

    @field_validator("seed", mode="before")
    @classmethod
    def _blank_seed_is_unset(cls, value: object) -> object:
        if isinstance(value, str) and not value.strip():
            return None
        return value

    def resolve_output(self, path: Path) -> Path:
        """Anchor relative output paths at ``output_dir``."""

        return path if path.is_absolute() else self.output_dir / path


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return a cached settings instance."""

    return Settings()


__all__ = ["Settings", "get_settings", "LogLevel"]
