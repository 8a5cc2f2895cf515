"""Finite sections of the Koopman operator from data or in closed form.

A section U_N acts on coefficient vectors: column j holds the coordinates of
U f_j in the dictionary, so F′ ≈ F U_N. Eigenvectors a_j give eigenfunctions
φ_j = F a_j; rows of A⁻¹ are the Koopman modes of the dictionary itself.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import numpy.typing as npt

from .constants import EPS_RANK, REFERENCE_OVERSAMPLING, ZERO_ERROR_FLOOR
from .dynamics import MapSystem, TWO_PI, default_initial_state, trajectory
from .errors import InputError, SolverError
from .numerics import (
    ComplexMatrix,
    ComplexVector,
    EigenResult,
    as_complex_matrix,
    eig,
    pseudoinverse,
    spectral_norm,
)
from .observables import DataMatrixPair, Dictionary, dual_basis_samples

logger = logging.getLogger(__name__)

Construction = Literal["analytic", "empirical", "time_average", "dual_average"]
Estimator = Literal["time_average", "pseudoinverse"]

FAILURE_NOTICE = (
    "finite-section failure: the section is nilpotent, so no eigenvalue of the "
    "truncation approximates the spectrum of the operator"
)


@dataclass(frozen=True, slots=True)
class FiniteSection:
    matrix: ComplexMatrix
    labels: tuple[str, ...]
    dictionary_spec: str
    sample_count: int
    construction: Construction
    truncated: bool = False

    @property
    def N(self) -> int:
        return int(self.matrix.shape[0])


def empirical_section(pair: DataMatrixPair, *, eps_rank: float = EPS_RANK) -> FiniteSection:
    """U_N = F⁺ F′.

    With fewer samples than observables the minimum-norm section is returned
    with a warning; otherwise a rank-deficient F is an error.
    """

    inverse = pseudoinverse(pair.F, eps_rank=eps_rank)
    if pair.m < pair.N:
        logger.warning(
            "finite_section.underdetermined",
            extra={"extra_payload": {"m": pair.m, "N": pair.N}},
        )
    else:
        inverse.require_column_rank(pair.N, name="F")
    return FiniteSection(
        matrix=inverse.matrix @ pair.Fprime,
        labels=pair.labels,
        dictionary_spec=str(pair.meta.get("dictionary", "")),
        sample_count=pair.m,
        construction="empirical",
        truncated=inverse.truncated,
    )


def time_average_section(pair: DataMatrixPair) -> FiniteSection:
    """Entries (1/m) Σ_l f_j(x_{l+1}) conj(f_k(x_l)), for orthonormal dictionaries."""

    return FiniteSection(
        matrix=(pair.F.conj().T @ pair.Fprime) / pair.m,
        labels=pair.labels,
        dictionary_spec=str(pair.meta.get("dictionary", "")),
        sample_count=pair.m,
        construction="time_average",
    )


def dual_average_section(pair: DataMatrixPair, *, eps_rank: float = EPS_RANK) -> FiniteSection:
    """Entries (1/m) Σ_l f_j(x_{l+1}) ĝ_k^c(x_l) with ĝ^c = m·(F†F)⁻¹F†."""

    dual = dual_basis_samples(pair.F, eps_rank=eps_rank) * pair.m
    return FiniteSection(
        matrix=(dual @ pair.Fprime) / pair.m,
        labels=pair.labels,
        dictionary_spec=str(pair.meta.get("dictionary", "")),
        sample_count=pair.m,
        construction="dual_average",
    )


def analytic_section(system: MapSystem, dictionary: Dictionary) -> FiniteSection:
    """Exact section of a built-in map on a Fourier dictionary."""

    if dictionary.kind != "fourier" or dictionary.orders is None:
        raise InputError(
            f"analytic sections need a Fourier dictionary, got '{dictionary.spec}'",
            details={"system": system.name, "dictionary": dictionary.spec},
        )
    orders = np.asarray(dictionary.orders, dtype=float)
    angles = sum(system.angular)
    if orders.shape[1] != angles:
        raise InputError(
            f"multi-indices of length {orders.shape[1]} do not match {angles} angle(s)",
            details={"system": system.name, "dictionary": dictionary.spec},
        )

    if system.name in {"rotation", "rotation_contraction"}:
        phases = orders[:, 0] * float(system.params["omega"])
        matrix = np.diag(np.exp(1j * phases))
    elif system.name == "torus_rotation":
        shift = TWO_PI * np.asarray(system.params["frequencies"], dtype=float)
        matrix = np.diag(np.exp(1j * (orders @ shift)))
    elif system.name == "doubling":
        position = {order: row for row, order in enumerate(dictionary.orders)}
        matrix = np.zeros((dictionary.order, dictionary.order), dtype=np.complex128)
        for column, order in enumerate(dictionary.orders):
            row = position.get(tuple(2 * value for value in order))
            if row is not None:
                matrix[row, column] = 1.0
    else:
        raise InputError(
            f"no analytic section for system '{system.name}'",
            details={"system": system.name, "dictionary": dictionary.spec},
        )
    return FiniteSection(
        matrix=np.asarray(matrix, dtype=np.complex128),
        labels=tuple(dictionary.labels),
        dictionary_spec=dictionary.spec,
        sample_count=0,
        construction="analytic",
    )


@dataclass(frozen=True, slots=True)
class SectionResidual:
    samples: ComplexVector
    norm: float


def section_error_residual(
    F: npt.ArrayLike,
    Fprime: npt.ArrayLike,
    section: FiniteSection,
    a: npt.ArrayLike,
    *,
    eps_rank: float = EPS_RANK,
) -> SectionResidual:
    """r(X) = Σ_j a_j (F′ − F F⁺ F′)[:, j] and its RMS norm.

    This is the part of U applied to the candidate eigenfunction that falls
    outside the dictionary span.
    """

    samples = as_complex_matrix(F, name="F")
    shifted = as_complex_matrix(Fprime, name="Fprime")
    coefficients = np.asarray(a, dtype=np.complex128).ravel()
    if samples.shape != shifted.shape:
        raise InputError(f"F and Fprime shapes differ: {samples.shape} vs {shifted.shape}")
    if samples.shape[1] != section.N or coefficients.size != section.N:
        raise InputError(
            f"shape mismatch: section is {section.N}x{section.N}, F has "
            f"{samples.shape[1]} columns, a has {coefficients.size} entries"
        )
    projected = samples @ (pseudoinverse(samples, eps_rank=eps_rank).matrix @ shifted)
    residual = (shifted - projected) @ coefficients
    norm = float(np.linalg.norm(residual) / np.sqrt(residual.size))
    return SectionResidual(samples=residual, norm=norm)


@dataclass(frozen=True, slots=True)
class SpectralDecomposition:
    """Eigen-data of a section plus sampled eigenfunctions and Koopman modes.

    ``modes`` is ``None`` for defective sections, whose eigenvector matrix
    cannot be inverted reliably.
    """

    eigen: EigenResult
    eigenfunction_samples: ComplexMatrix
    modes: ComplexMatrix | None
    residual_norms: npt.NDArray[np.float64] | None
    condition_A: float
    construction: Construction

    @property
    def eigenvalues(self) -> ComplexVector:
        return self.eigen.eigenvalues

    @property
    def right_vectors(self) -> ComplexMatrix:
        return self.eigen.right_vectors

    @property
    def defective(self) -> bool:
        return self.modes is None

    @property
    def notice(self) -> str | None:
        if self.defective and np.all(np.abs(self.eigenvalues) <= 1e-10):
            return FAILURE_NOTICE
        if self.defective:
            return "defective section: Koopman modes were not extracted"
        return None


def decompose(
    section: FiniteSection,
    F: npt.ArrayLike,
    Fprime: npt.ArrayLike | None = None,
) -> SpectralDecomposition:
    samples = as_complex_matrix(F, name="F")
    if samples.shape[1] != section.N:
        raise InputError(
            f"F has {samples.shape[1]} columns but the section is {section.N}x{section.N}"
        )
    eigen = eig(section.matrix)
    modes = None if eigen.defective else eigen.left_vectors
    if modes is None:
        logger.warning(
            "finite_section.defective",
            extra={
                "extra_payload": {
                    "construction": section.construction,
                    "condition_A": eigen.condition,
                    "distinct": eigen.distinct,
                }
            },
        )
    residual_norms = None
    if Fprime is not None:
        residual_norms = np.array(
            [
                section_error_residual(samples, Fprime, section, eigen.right_vectors[:, j]).norm
                for j in range(section.N)
            ]
        )
    return SpectralDecomposition(
        eigen=eigen,
        eigenfunction_samples=samples @ eigen.right_vectors,
        modes=modes,
        residual_norms=residual_norms,
        condition_A=eigen.condition,
        construction=section.construction,
    )


def _require_modes(decomposition: SpectralDecomposition) -> ComplexMatrix:
    if decomposition.modes is None:
        raise SolverError(
            "eigenvector matrix is defective or near-defective",
            code="DEFECTIVE",
            details={"condition_A": decomposition.condition_A},
        )
    return decomposition.modes


def predict(
    F: npt.ArrayLike, decomposition: SpectralDecomposition, steps: int = 1
) -> ComplexMatrix:
    """F A Λ^steps A⁻¹, the dictionary samples advanced ``steps`` times."""

    if steps < 0:
        raise InputError(f"steps must be >= 0, got {steps}")
    samples = as_complex_matrix(F, name="F")
    modes = _require_modes(decomposition)
    if samples.shape[1] != modes.shape[0]:
        raise InputError("F column count does not match the decomposition")
    phi = samples @ decomposition.right_vectors
    return (phi * decomposition.eigenvalues**steps) @ modes


def reconstruct(F: npt.ArrayLike, decomposition: SpectralDecomposition) -> ComplexMatrix:
    """F′_p = F A Λ A⁻¹."""

    return predict(F, decomposition, steps=1)


def vector_modes(
    decomposition: SpectralDecomposition,
    G: npt.ArrayLike,
    *,
    eps_rank: float = EPS_RANK,
) -> ComplexMatrix:
    """Koopman modes v_j of a vector observable sampled as G with G ≈ Σ_j φ_j(X) v_j."""

    values = np.asarray(G, dtype=np.complex128)
    if values.ndim == 1:
        values = values[:, None]
    phi = decomposition.eigenfunction_samples
    if values.shape[0] != phi.shape[0]:
        raise InputError(
            f"G has {values.shape[0]} samples, eigenfunctions have {phi.shape[0]}"
        )
    return pseudoinverse(phi, eps_rank=eps_rank).matrix @ values


@dataclass(frozen=True, slots=True)
class ConvergenceTable:
    sizes: tuple[int, ...]
    errors: tuple[float, ...]
    slope: float | None
    reference: Construction
    estimator: Estimator
    x0: tuple[float, ...]

    def rows(self) -> list[tuple[int, float]]:
        return list(zip(self.sizes, self.errors))


def log_log_slope(sizes: Sequence[int], errors: Sequence[float]) -> float | None:
    """Least-squares slope of log(error) against log(size); None when fewer than
    two errors exceed the round-off floor."""

    pairs = [(size, error) for size, error in zip(sizes, errors) if error > ZERO_ERROR_FLOOR]
    if len(pairs) < 2:
        return None
    x = np.log([float(size) for size, _ in pairs])
    y = np.log([error for _, error in pairs])
    slope, _intercept = np.polyfit(x, y, 1)
    return float(slope)


def convergence_study(
    system: MapSystem,
    dictionary: Dictionary,
    m_schedule: Sequence[int],
    *,
    x0: npt.ArrayLike | None = None,
    reference_m: int | None = None,
    estimator: Estimator | None = None,
    max_workers: int = 1,
) -> ConvergenceTable:
    """Spectral-norm distance between sections from m samples and a reference.

    ``m`` counts trajectory points, so each section uses m-1 sample pairs.
    The reference is the analytic section when one exists, otherwise an
    empirical section from ``reference_m`` points on the same trajectory.
    """

    schedule = sorted({int(m) for m in m_schedule})
    if len(schedule) < 3:
        raise InputError(
            f"a convergence study needs at least 3 distinct schedule points, got {len(schedule)}",
            details={"schedule": schedule},
        )
    if schedule[0] < 2:
        raise InputError("schedule entries must be >= 2 trajectory points")
    chosen: Estimator = estimator or (
        "time_average" if dictionary.kind == "fourier" else "pseudoinverse"
    )

    def _section(pair: DataMatrixPair) -> FiniteSection:
        if chosen == "time_average":
            return time_average_section(pair)
        return empirical_section(pair)

    try:
        reference = analytic_section(system, dictionary)
        length = schedule[-1]
    except InputError:
        reference = None
        length = reference_m or REFERENCE_OVERSAMPLING * schedule[-1]
        if length <= schedule[-1]:
            raise InputError(
                f"reference_m={length} must exceed the largest schedule entry {schedule[-1]}"
            )

    start = default_initial_state(system) if x0 is None else np.atleast_1d(x0)
    path = trajectory(system, start, length)
    samples = dictionary.evaluate(path.points)
    if reference is None:
        reference = _section(
            DataMatrixPair(F=samples[:-1], Fprime=samples[1:], labels=tuple(dictionary.labels))
        )

    def _error(m: int) -> float:
        pair = DataMatrixPair(
            F=samples[: m - 1], Fprime=samples[1:m], labels=tuple(dictionary.labels)
        )
        return spectral_norm(_section(pair).matrix - reference.matrix)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            errors = list(executor.map(_error, schedule))
    else:
        errors = [_error(m) for m in schedule]

    slope = log_log_slope(schedule, errors)
    logger.info(
        "finite_section.convergence_study",
        extra={
            "extra_payload": {
                "system": system.name,
                "dictionary": dictionary.spec,
                "estimator": chosen,
                "slope": slope,
            }
        },
    )
    return ConvergenceTable(
        sizes=tuple(schedule),
        errors=tuple(float(error) for error in errors),
        slope=slope,
        reference=reference.construction,
        estimator=chosen,
        x0=tuple(float(value) for value in path.x0),
    )


__all__ = [
    "ConvergenceTable",
    "FAILURE_NOTICE",
    "FiniteSection",
    "SectionResidual",
    "SpectralDecomposition",
    "analytic_section",
    "convergence_study",
    "decompose",
    "dual_average_section",
    "empirical_section",
    "log_log_slope",
    "predict",
    "reconstruct",
    "section_error_residual",
    "time_average_section",
    "vector_modes",
]
