"""SVD-based DMD as a reduced finite section.

With F = G Σ V† the reduced operator is U_S = G† F′ V Σ⁻¹. Without
truncation it is similar to F⁺F′ (U_S = Σ V† (F⁺F′) V Σ⁻¹), so both share a
spectrum; ``similarity_check`` verifies that on a given pair.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
import numpy.typing as npt

from .constants import SVD_RANK_TOL
from .errors import InputError, RankDeficiencyError
from .finite_section import empirical_section
from .numerics import ComplexMatrix, ComplexVector, EigenResult, eig, match_eigenvalues, thin_svd
from .observables import DataMatrixPair

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class SvdDmdResult:
    U_S: ComplexMatrix
    rank: int
    eigen: EigenResult
    eigenfunction_samples: ComplexMatrix
    section_eigenvectors: ComplexMatrix
    kept_singular_values: npt.NDArray[np.float64]
    dropped_singular_values: npt.NDArray[np.float64]

    @property
    def truncated(self) -> bool:
        return self.dropped_singular_values.size > 0

    @property
    def eigenvalues(self) -> ComplexVector:
        return self.eigen.eigenvalues


def _check_rank_tol(rank_tol: float) -> None:
    if not 0.0 < rank_tol < 1.0:
        raise InputError(f"rank_tol must lie in (0, 1), got {rank_tol}")


def svd_dmd(pair: DataMatrixPair, rank_tol: float = SVD_RANK_TOL) -> SvdDmdResult:
    _check_rank_tol(rank_tol)
    svd = thin_svd(pair.F)
    sigma_max = float(svd.sigma[0]) if svd.sigma.size else 0.0
    keep = svd.sigma >= rank_tol * sigma_max if sigma_max > 0.0 else np.zeros_like(svd.sigma, bool)
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        raise RankDeficiencyError(
            "every singular value of F is below the truncation threshold",
            code="TRUNCATED",
            details={"rank_tol": rank_tol, "sigma_max": sigma_max},
        )

    g = svd.g[:, :rank]
    sigma = svd.sigma[:rank]
    v = svd.v[:, :rank]
    reduced = (g.conj().T @ pair.Fprime @ v) / sigma
    eigen = eig(reduced)
    dropped = svd.sigma[rank:]
    if dropped.size:
        logger.warning(
            "svd_dmd.truncated",
            extra={
                "extra_payload": {
                    "rank": rank,
                    "N": pair.N,
                    "dropped": dropped,
                    "rank_tol": rank_tol,
                }
            },
        )
    return SvdDmdResult(
        U_S=reduced,
        rank=rank,
        eigen=eigen,
        eigenfunction_samples=g @ eigen.right_vectors,
        section_eigenvectors=(v / sigma) @ eigen.right_vectors,
        kept_singular_values=sigma.copy(),
        dropped_singular_values=dropped.copy(),
    )


@dataclass(frozen=True, slots=True)
class SimilarityReport:
    status: Literal["ok", "truncated"]
    rank: int
    distance: float | None
    eigenvector_error: float | None
    sample_error: float | None
    svd_eigenvalues: ComplexVector
    section_eigenvalues: ComplexVector | None


def similarity_check(pair: DataMatrixPair, rank_tol: float = SVD_RANK_TOL) -> SimilarityReport:
    """Compare spectra of U_S and F⁺F′ and verify the eigenvector map V Σ⁻¹ a_j."""

    result = svd_dmd(pair, rank_tol)
    if result.truncated:
        return SimilarityReport(
            status="truncated",
            rank=result.rank,
            distance=None,
            eigenvector_error=None,
            sample_error=None,
            svd_eigenvalues=result.eigenvalues,
            section_eigenvalues=None,
        )

    section = empirical_section(pair)
    section_eigen = eig(section.matrix)
    vectors = result.section_eigenvectors
    scale = np.linalg.norm(vectors, axis=0)
    eigenvector_error = float(
        np.max(
            np.linalg.norm(section.matrix @ vectors - vectors * result.eigenvalues, axis=0) / scale
        )
    )
    sample_error = float(np.max(np.abs(result.eigenfunction_samples - pair.F @ vectors)))
    return SimilarityReport(
        status="ok",
        rank=result.rank,
        distance=match_eigenvalues(result.eigenvalues, section_eigen.eigenvalues),
        eigenvector_error=eigenvector_error,
        sample_error=sample_error,
        svd_eigenvalues=result.eigenvalues,
        section_eigenvalues=section_eigen.eigenvalues,
    )


__all__ = ["SimilarityReport", "SvdDmdResult", "similarity_check", "svd_dmd"]
