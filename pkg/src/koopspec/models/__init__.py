"""Pydantic models for koopspec IO."""

from .errors import ErrorPayload
from .results import (
    CompanionResult,
    ComplexValue,
    ConvergenceResult,
    ConvergenceRow,
    GlaComponentResult,
    GlaResult,
    SpectrumResult,
    WeakEntryResult,
    WeakResult,
    finite_or_none,
)
from .run_config import MethodParams, RunConfig, SystemSpec, TrajectorySpec

__all__ = [
    "CompanionResult",
    "ComplexValue",
    "ConvergenceResult",
    "ConvergenceRow",
    "ErrorPayload",
    "GlaComponentResult",
    "GlaResult",
    "MethodParams",
    "RunConfig",
    "SpectrumResult",
    "SystemSpec",
    "TrajectorySpec",
    "WeakEntryResult",
    "WeakResult",
    "finite_or_none",
]
