"""Dense complex linear-algebra kernels shared by every estimator.

All functions are pure and operate on ``numpy`` arrays of dtype complex128.
Matrices follow one orientation library-wide: rows are sample points,
columns are observables.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TypeAlias

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .constants import DEFECTIVE_CONDITION_LIMIT, DISTINCT_TOL, EPS_RANK, MODULUS_DECIMALS
from .errors import InputError, RankDeficiencyError, SolverError

ComplexMatrix: TypeAlias = npt.NDArray[np.complex128]
ComplexVector: TypeAlias = npt.NDArray[np.complex128]

_TWO_PI = 2.0 * np.pi


def as_complex_matrix(value: npt.ArrayLike, *, name: str = "matrix") -> ComplexMatrix:
    """Validate ``value`` as a nonempty, finite, two-dimensional complex array."""

    array = np.asarray(value, dtype=np.complex128)
    if array.ndim != 2:
        raise InputError(f"{name} must be two-dimensional, got shape {array.shape}")
    if array.shape[0] < 1 or array.shape[1] < 1:
        raise InputError(f"{name} must be nonempty, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InputError(f"{name} contains NaN or infinite entries")
    return array


def _require_square(matrix: ComplexMatrix, name: str) -> int:
    rows, cols = matrix.shape
    if rows != cols:
        raise InputError(f"{name} must be square, got {rows}x{cols}")
    return rows


@dataclass(frozen=True, slots=True)
class PseudoInverse:
    """Moore-Penrose pseudoinverse together with its rank decision."""

    matrix: ComplexMatrix
    rank: int
    truncated: bool
    singular_values: npt.NDArray[np.float64]
    threshold: float

    def require_column_rank(self, columns: int, *, name: str = "F") -> None:
        """Raise when fewer than ``columns`` singular values survive the threshold."""

        if self.rank >= columns:
            return
        offending = (
            float(self.singular_values[self.rank])
            if self.rank < self.singular_values.size
            else 0.0
        )
        raise RankDeficiencyError(
            f"{name} is rank deficient: singular value {offending:.3e} at index {self.rank} "
            f"is below the threshold {self.threshold:.3e}",
            details={
                "singular_value": offending,
                "index": self.rank,
                "threshold": self.threshold,
                "rank": self.rank,
                "columns": columns,
            },
        )


def pseudoinverse(a: npt.ArrayLike, *, eps_rank: float = EPS_RANK) -> PseudoInverse:
    """Return A⁺, dropping singular values below ``eps_rank * sigma_max``."""

    matrix = as_complex_matrix(a, name="A")
    rows, cols = matrix.shape
    try:
        u, s, vh = scipy.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(
            f"SVD did not converge for a {rows}x{cols} matrix",
            details={"rows": rows, "cols": cols},
        ) from exc
    sigma_max = float(s[0])
    threshold = eps_rank * sigma_max
    rank = int(np.count_nonzero(s > threshold)) if sigma_max > 0.0 else 0
    if rank == 0:
        inverse = np.zeros((cols, rows), dtype=np.complex128)
    else:
        inverse = (vh[:rank].conj().T / s[:rank]) @ u[:, :rank].conj().T
    return PseudoInverse(
        matrix=inverse,
        rank=rank,
        truncated=rank < min(rows, cols),
        singular_values=s,
        threshold=threshold,
    )


@dataclass(frozen=True, slots=True)
class ThinSvd:
    g: ComplexMatrix
    sigma: npt.NDArray[np.float64]
    v: ComplexMatrix

    @property
    def sigma_matrix(self) -> npt.NDArray[np.float64]:
        return np.diag(self.sigma)

    def reconstruct(self) -> ComplexMatrix:
        return (self.g * self.sigma) @ self.v.conj().T


def thin_svd(a: npt.ArrayLike) -> ThinSvd:
    """A = G Σ V† with G m×n orthonormal, V n×n unitary, Σ nonincreasing."""

    matrix = as_complex_matrix(a, name="A")
    rows, cols = matrix.shape
    if rows < cols:
        raise InputError(f"thin SVD needs rows >= cols, got {rows}x{cols}")
    try:
        g, s, vh = scipy.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SolverError(
            f"SVD did not converge for a {rows}x{cols} matrix",
            details={"rows": rows, "cols": cols},
        ) from exc
    return ThinSvd(g=g, sigma=s, v=vh.conj().T)


def canonical_order(
    values: npt.ArrayLike, *, decimals: int = MODULUS_DECIMALS
) -> npt.NDArray[np.intp]:
    """Indices sorting by modulus descending, then argument ascending in [0, 2π).

    Moduli and arguments are compared after rounding so that values equal up
    to round-off tie.
    """

    array = np.asarray(values, dtype=np.complex128).ravel()
    moduli = np.round(np.abs(array), decimals)
    arguments = np.round(np.mod(np.angle(array), _TWO_PI), decimals)
    arguments[arguments >= round(_TWO_PI, decimals)] = 0.0
    arguments[moduli == 0.0] = 0.0
    return np.lexsort((arguments, -moduli))


def eigenvalues_distinct(values: npt.ArrayLike, *, tol: float) -> bool:
    array = np.asarray(values, dtype=np.complex128).ravel()
    if array.size < 2:
        return True
    gaps = np.abs(array[:, None] - array[None, :])
    gaps[np.diag_indices_from(gaps)] = np.inf
    return bool(gaps.min() > tol)


@dataclass(frozen=True, slots=True)
class EigenResult:
    """Eigenvalues in canonical order with unit right vectors and paired left rows."""

    eigenvalues: ComplexVector
    right_vectors: ComplexMatrix
    left_vectors: ComplexMatrix
    distinct: bool
    condition: float

    @property
    def size(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def defective(self) -> bool:
        return not self.distinct or not self.condition < DEFECTIVE_CONDITION_LIMIT

    def right_residuals(self, matrix: npt.ArrayLike) -> npt.NDArray[np.float64]:
        m = np.asarray(matrix, dtype=np.complex128)
        diff = m @ self.right_vectors - self.right_vectors * self.eigenvalues
        return np.linalg.norm(diff, axis=0)

    def left_residuals(self, matrix: npt.ArrayLike) -> npt.NDArray[np.float64]:
        m = np.asarray(matrix, dtype=np.complex128)
        diff = self.left_vectors @ m - self.eigenvalues[:, None] * self.left_vectors
        return np.linalg.norm(diff, axis=1)


def eig(m: npt.ArrayLike) -> EigenResult:
    """General dense eigendecomposition with left and right vectors."""

    matrix = as_complex_matrix(m, name="M")
    n = _require_square(matrix, "M")
    try:
        values, left, right = scipy.linalg.eig(matrix, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(
            f"Eigensolver did not converge for a {n}x{n} matrix",
            details={"rows": n, "cols": n},
        ) from exc
    if not np.all(np.isfinite(values)):
        raise SolverError(
            f"Eigensolver returned non-finite eigenvalues for a {n}x{n} matrix",
            details={"rows": n, "cols": n},
        )

    order = canonical_order(values)
    values = np.asarray(values[order], dtype=np.complex128)
    right = right[:, order]
    right = right / np.linalg.norm(right, axis=0)
    left = left[:, order]

    scale = max(1.0, float(scipy.linalg.norm(matrix, 2)))
    distinct = eigenvalues_distinct(values, tol=DISTINCT_TOL * scale)
    condition = condition_2norm(right)
    if distinct and condition < DEFECTIVE_CONDITION_LIMIT:
        left_rows = scipy.linalg.inv(right)
    else:
        # Separate left problem; rows scaled so that row_j . a_j = 1 where possible.
        left_rows = left.conj().T
        pairing = np.einsum("ij,ji->i", left_rows, right)
        for index, value in enumerate(pairing):
            if abs(value) > np.sqrt(np.finfo(float).eps):
                left_rows[index] /= value
            else:
                left_rows[index] /= np.linalg.norm(left_rows[index])
    return EigenResult(
        eigenvalues=values,
        right_vectors=right,
        left_vectors=np.asarray(left_rows, dtype=np.complex128),
        distinct=distinct,
        condition=condition,
    )


def vandermonde(lambdas: npt.ArrayLike, n: int | None = None) -> ComplexMatrix:
    """Entry (i, j) is λ_i ** j for powers j = 0..n-1."""

    values = np.asarray(lambdas, dtype=np.complex128).ravel()
    if values.size == 0:
        raise InputError("vandermonde needs at least one eigenvalue")
    return np.vander(values, N=n or values.size, increasing=True)


def condition_2norm(a: npt.ArrayLike, *, eps_rank: float = EPS_RANK) -> float:
    """σ_max / σ_min, or ``inf`` when σ_min falls below ``eps_rank * σ_max``."""

    matrix = as_complex_matrix(a, name="A")
    _require_square(matrix, "A")
    s = scipy.linalg.svdvals(matrix)
    if s[0] == 0.0 or s[-1] < eps_rank * s[0]:
        return float("inf")
    return float(s[0] / s[-1])


def spectral_norm(a: npt.ArrayLike) -> float:
    return float(scipy.linalg.norm(np.asarray(a, dtype=np.complex128), 2))


def match_eigenvalues(a: npt.ArrayLike, b: npt.ArrayLike) -> float:
    """Largest distance under the optimal one-to-one pairing of two spectra."""

    first = np.asarray(a, dtype=np.complex128).ravel()
    second = np.asarray(b, dtype=np.complex128).ravel()
    if first.size != second.size:
        raise InputError(
            f"spectra differ in size: {first.size} vs {second.size}",
            details={"sizes": [first.size, second.size]},
        )
    if first.size == 0:
        return 0.0
    cost = np.abs(first[:, None] - second[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


__all__ = [
    "ComplexMatrix",
    "ComplexVector",
    "EigenResult",
    "PseudoInverse",
    "ThinSvd",
    "as_complex_matrix",
    "canonical_order",
    "condition_2norm",
    "eig",
    "eigenvalues_distinct",
    "match_eigenvalues",
    "pseudoinverse",
    "spectral_norm",
    "thin_svd",
    "vandermonde",
]
