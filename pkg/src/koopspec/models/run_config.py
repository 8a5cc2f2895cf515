"""Serializable run configuration written next to every CLI output."""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .results import ComplexValue

SystemName = Literal["rotation", "doubling", "torus_rotation", "rotation_contraction", "identity"]
CommandName = Literal["generate", "edmd", "svd", "hankel", "gla", "weak", "convergence"]


class SystemSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: SystemName
    omega: Optional[float] = None
    mu: Optional[float] = None
    frequencies: Optional[list[float]] = None

    def params(self) -> dict[str, object]:
        params: dict[str, object] = {}
        if self.omega is not None:
            params["omega"] = self.omega
        if self.mu is not None:
            params["mu"] = self.mu
        if self.frequencies is not None:
            params["frequencies"] = tuple(self.frequencies)
        return params


class TrajectorySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    x0: Optional[list[float]] = None
    steps: int = Field(default=500, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)
    source: Optional[Path] = None
    points: Optional[Path] = None
    data: Optional[tuple[Path, Path]] = None

    @model_validator(mode="after")
    def _single_source(self) -> "TrajectorySpec":
        given = [name for name in ("source", "points", "data") if getattr(self, name) is not None]
        if len(given) > 1:
            raise ValueError(f"choose one sample source, got {', '.join(given)}")
        return self


class MethodParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    delays: Optional[int] = Field(default=None, ge=1)
    rank_tol: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    lambdas: list[ComplexValue] = Field(default_factory=list)
    schedule: list[int] = Field(default_factory=list)
    k_schedule: list[int] = Field(default_factory=list)
    analytic: bool = False
    force: bool = False
    allow_decaying: bool = False
    method: Literal["edmd", "hankel"] = "edmd"
    estimator: Optional[Literal["time_average", "pseudoinverse"]] = None
    slope_window: Optional[tuple[float, float]] = None

    @field_validator("schedule", "k_schedule")
    @classmethod
    def _positive_counts(cls, value: list[int]) -> list[int]:
        if any(entry < 1 for entry in value):
            raise ValueError("schedule entries must be positive")
        return value

    @field_validator("slope_window")
    @classmethod
    def _ordered_window(
        cls, value: Optional[tuple[float, float]]
    ) -> Optional[tuple[float, float]]:
        if value is not None and value[0] > value[1]:
            raise ValueError("slope window must be (low, high)")
        return value


class RunConfig(BaseModel):
    """Everything needed to reproduce one command invocation."""

    model_config = ConfigDict(extra="forbid")

    command: CommandName
    system: SystemSpec
    dictionary: Optional[str] = None
    observable: Optional[str] = None
    trajectory: TrajectorySpec = Field(default_factory=TrajectorySpec)
    method: MethodParams = Field(default_factory=MethodParams)
    output: Path
    emit_plot_data: bool = False

    @model_validator(mode="after")
    def _command_inputs(self) -> "RunConfig":
        from_data = self.trajectory.data is not None
        if self.command in {"edmd", "svd"} and not (self.dictionary or from_data):
            raise ValueError(f"'{self.command}' requires a dictionary spec or data matrices")
        if self.command == "weak" and not self.dictionary:
            raise ValueError(f"'{self.command}' requires a dictionary spec")
        if self.command == "hankel" and not self.observable:
            raise ValueError("'hankel' requires an observable spec")
        pairs_only = from_data or self.trajectory.points is not None
        if pairs_only and self.command not in {"edmd", "svd"}:
            raise ValueError("point clouds and data matrices feed only edmd and svd runs")
        if from_data and self.method.analytic:
            raise ValueError("the closed-form section needs a dictionary, not data matrices")
        return self


__all__ = ["CommandName", "MethodParams", "RunConfig", "SystemSpec", "TrajectorySpec"]
