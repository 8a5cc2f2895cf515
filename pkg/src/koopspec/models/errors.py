"""Error payload model printed by the command line on failure."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field

__all__ = ["ErrorPayload"]


class ErrorPayload(BaseModel):
    """Standardised error payload emitted on stderr."""

    model_config = ConfigDict(extra="forbid")

    code: str = Field(min_length=1)
    message: str = Field(min_length=1)
    details: dict[str, Any] = Field(default_factory=dict)
    exit_code: int = Field(ge=1)
