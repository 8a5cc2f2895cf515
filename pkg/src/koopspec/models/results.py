"""Pydantic schemas for JSON result files."""

from __future__ import annotations

import math
from typing import Iterable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


def finite_or_none(value: float | None) -> float | None:
    """JSON has no infinity; unbounded diagnostics are written as null."""

    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


class ComplexValue(BaseModel):
    """A complex number written as ``{"re": ..., "im": ...}``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    re: float
    im: float

    @classmethod
    def of(cls, value: complex) -> "ComplexValue":
        value = complex(value)
        return cls(re=float(value.real), im=float(value.imag))

    @classmethod
    def many(cls, values: Iterable[complex]) -> list["ComplexValue"]:
        return [cls.of(value) for value in np.asarray(list(values)).ravel()]

    def to_complex(self) -> complex:
        return complex(self.re, self.im)


class _ResultBase(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    command: str
    worked_example: Optional[str] = None
    notice: Optional[str] = None
    seed: Optional[int] = None


class SpectrumResult(_ResultBase):
    """Finite-section style result shared by ``edmd`` and ``svd``."""

    construction: Literal["analytic", "empirical", "svd"]
    eigenvalues: list[ComplexValue]
    modes: Optional[list[list[ComplexValue]]] = None
    residual_norms: Optional[list[float]] = None
    m: int = Field(ge=0)
    N: int = Field(ge=1)
    rank: Optional[int] = None
    truncated: bool = False
    dropped_singular_values: list[float] = Field(default_factory=list)
    condition_A: Optional[float] = None
    similarity_distance: Optional[float] = None


class CompanionResult(_ResultBase):
    c: list[ComplexValue]
    eigenvalues: list[ComplexValue]
    residual_norm: float = Field(ge=0.0)
    pseudo_eps: list[float]
    N: int = Field(ge=1)
    m: int = Field(ge=1)
    circulant: bool
    gram_condition: Optional[float] = None
    rank: int = Field(ge=0)


class GlaComponentResult(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    lambda_: ComplexValue = Field(alias="lambda")
    mode: list[ComplexValue]
    eigenfunction_value: ComplexValue
    tail: float = Field(ge=0.0)


class GlaResult(_ResultBase):
    n: int = Field(ge=1)
    components: list[GlaComponentResult]


class WeakEntryResult(BaseModel):
    model_config = ConfigDict(extra="forbid")

    h: str
    K: int = Field(ge=1)
    value: ComplexValue


class WeakResult(_ResultBase):
    lambda_: ComplexValue = Field(alias="lambda")
    L: list[WeakEntryResult]
    defect: float = Field(ge=0.0)
    defect_bound: float = Field(ge=0.0)
    gla_crosscheck: Optional[float] = None


class ConvergenceRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    size: int = Field(ge=1)
    error: float = Field(ge=0.0)


class ConvergenceResult(_ResultBase):
    method: Literal["edmd", "hankel"]
    rows: list[ConvergenceRow]
    slope: Optional[float] = None
    slope_window: Optional[tuple[float, float]] = None
    passed: Optional[bool] = None
    monotone_fraction: Optional[float] = None
    status: Literal["ok", "failed", "not_applicable"]


__all__ = [
    "ComplexValue",
    "CompanionResult",
    "ConvergenceResult",
    "ConvergenceRow",
    "GlaComponentResult",
    "GlaResult",
    "SpectrumResult",
    "WeakEntryResult",
    "WeakResult",
    "finite_or_none",
]
