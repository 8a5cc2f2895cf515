"""Error definitions and exception types mapped to CLI exit codes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, ClassVar, Dict

from .models.errors import ErrorPayload


@dataclass(frozen=True)
class ErrorDefinition:
    code: str
    message: str
    exit_code: int


ERROR_DEFINITIONS: Dict[str, ErrorDefinition] = {
    "INTERNAL": ErrorDefinition("INTERNAL", "Internal error.", 1),
    "INVALID_INPUT": ErrorDefinition("INVALID_INPUT", "Invalid input.", 2),
    "IO_FAILED": ErrorDefinition("IO_FAILED", "File could not be read or written.", 2),
    "UNIT_BAND": ErrorDefinition("UNIT_BAND", "Eigenvalue modulus outside the unit band.", 2),
    "RANK_DEFICIENT": ErrorDefinition("RANK_DEFICIENT", "Data matrix is rank deficient.", 3),
    "COLLINEAR_KRYLOV": ErrorDefinition(
        "COLLINEAR_KRYLOV", "Krylov columns are collinear.", 3
    ),
    "TRUNCATED": ErrorDefinition("TRUNCATED", "All singular values were truncated.", 3),
    "EIG_FAILED": ErrorDefinition("EIG_FAILED", "Eigensolver did not converge.", 4),
    "DEFECTIVE": ErrorDefinition("DEFECTIVE", "Eigenvector matrix is defective.", 4),
}


class KoopError(Exception):
    """Structured error raised by library operations."""

    default_code: ClassVar[str] = "INTERNAL"

    def __init__(
        self,
        message: str | None = None,
        *,
        code: str | None = None,
        details: dict[str, Any] | None = None,
    ) -> None:
        resolved = code or self.default_code
        definition = ERROR_DEFINITIONS.get(resolved, ERROR_DEFINITIONS["INTERNAL"])
        self.code = resolved
        self.message = message or definition.message
        self.details = details or {}
        self.exit_code = definition.exit_code
        super().__init__(self.message)

    def to_payload(self) -> ErrorPayload:
        return ErrorPayload(
            code=self.code,
            message=self.message,
            details=self.details,
            exit_code=self.exit_code,
        )


class InputError(KoopError):
    default_code = "INVALID_INPUT"


class RankDeficiencyError(KoopError):
    default_code = "RANK_DEFICIENT"


class SolverError(KoopError):
    default_code = "EIG_FAILED"


__all__ = [
    "ERROR_DEFINITIONS",
    "ErrorDefinition",
    "InputError",
    "KoopError",
    "RankDeficiencyError",
    "SolverError",
]
