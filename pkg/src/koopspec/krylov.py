"""Krylov (Hankel-DMD) approximation from a single observable.

Columns of the Krylov data are f, f∘T, ..., f∘T^N sampled along one
trajectory. The last column is regressed on the first N, giving the last
column c of a companion matrix whose spectrum approximates Koopman
eigenvalues.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .constants import EPS_RANK, GRAM_CONDITION_LIMIT, RESIDUAL_FLOOR
from .dynamics import MapSystem, default_initial_state, trajectory
from .errors import InputError, RankDeficiencyError
from .numerics import (
    ComplexMatrix,
    ComplexVector,
    EigenResult,
    as_complex_matrix,
    eig,
    pseudoinverse,
    vandermonde,
)
from .observables import Observable, krylov_samples

logger = logging.getLogger(__name__)

CIRCULANT_TOL = 1e-9


def _rms(values: npt.NDArray[np.complex128]) -> float:
    return float(np.linalg.norm(values) / np.sqrt(values.size))


def companion_matrix(c: npt.ArrayLike) -> ComplexMatrix:
    """Ones on the subdiagonal, ``c`` in the last column."""

    coefficients = np.asarray(c, dtype=np.complex128).ravel()
    size = coefficients.size
    if size == 0:
        raise InputError("companion matrix needs at least one coefficient")
    matrix = np.zeros((size, size), dtype=np.complex128)
    if size > 1:
        matrix[np.arange(1, size), np.arange(size - 1)] = 1.0
    matrix[:, -1] = coefficients
    return matrix


@dataclass(frozen=True, slots=True)
class CompanionModel:
    c: ComplexVector
    C: ComplexMatrix
    residual: ComplexVector
    residual_norm: float
    target_norm: float
    eigen: EigenResult
    vandermonde: ComplexMatrix
    rank: int
    gram_condition: float
    forced: bool
    krylov: ComplexMatrix

    @property
    def N(self) -> int:
        return int(self.c.size)

    @property
    def m(self) -> int:
        return int(self.krylov.shape[0])

    @property
    def eigenvalues(self) -> ComplexVector:
        return self.eigen.eigenvalues

    @property
    def relative_residual(self) -> float:
        return self.residual_norm / self.target_norm if self.target_norm > 0.0 else 0.0

    def eigenfunction_samples(self, F: npt.ArrayLike | None = None) -> ComplexMatrix:
        """Column k holds F·ẽ_k, the sampled eigenfunction for eigenvalue k."""

        samples = self.krylov if F is None else as_complex_matrix(F, name="F")
        if samples.shape[1] != self.N:
            raise InputError(
                f"F has {samples.shape[1]} columns, the companion model has N={self.N}"
            )
        return samples @ self.eigen.right_vectors


def _leading_rank(F: ComplexMatrix, eps_rank: float) -> int:
    """Index of the first Krylov column dependent on its predecessors."""

    r = scipy.linalg.qr(F, mode="r")[0]
    diagonal = np.abs(np.diag(r))
    scale = float(np.linalg.norm(F, axis=0).max())
    if scale == 0.0:
        return 0
    dependent = np.flatnonzero(diagonal <= eps_rank * scale)
    return int(dependent[0]) if dependent.size else int(diagonal.size)


def _gram_condition(F: ComplexMatrix) -> float:
    s = scipy.linalg.svdvals(F)
    if s[-1] == 0.0:
        return float("inf")
    return float((s[0] / s[-1]) ** 2)


def fit_companion(
    samples: npt.ArrayLike,
    *,
    force: bool = False,
    eps_rank: float = EPS_RANK,
    gram_limit: float = GRAM_CONDITION_LIMIT,
) -> CompanionModel:
    """Least-squares fit of f∘T^N on f, ..., f∘T^{N-1}.

    ``samples`` is m×(N+1) with entry (l, k) = f(T^k x_l). Collinear
    columns raise RankDeficiencyError naming the first dependent column
    unless ``force`` is set, in which case c is the basic solution on the
    leading independent columns with zeros for the rest.
    """

    data = as_complex_matrix(samples, name="krylov samples")
    rows, cols = data.shape
    N = cols - 1
    if N < 1:
        raise InputError("Krylov samples need at least two columns (N >= 1)")
    if rows < N:
        raise InputError(
            f"need at least N={N} sample rows, got {rows}",
            details={"m": rows, "N": N},
        )
    F = data[:, :N]
    target = data[:, N]

    rank = _leading_rank(F, eps_rank)
    gram_condition = _gram_condition(F)
    if rank < N or gram_condition > gram_limit:
        if not force:
            index = rank if rank < N else N - 1
            raise RankDeficiencyError(
                f"Krylov column {index} is collinear with the preceding columns "
                f"(Gram condition {gram_condition:.3e})",
                code="COLLINEAR_KRYLOV",
                details={
                    "index": index,
                    "rank": rank,
                    "N": N,
                    "gram_condition": gram_condition,
                },
            )
        logger.warning(
            "krylov.forced_fit",
            extra={
                "extra_payload": {"rank": rank, "N": N, "gram_condition": gram_condition}
            },
        )

    c = np.zeros(N, dtype=np.complex128)
    if rank > 0:
        c[:rank] = pseudoinverse(F[:, :rank], eps_rank=eps_rank).matrix @ target
    residual = target - F @ c
    residual_norm = _rms(residual)
    target_norm = _rms(target)
    if residual_norm <= RESIDUAL_FLOOR * target_norm:
        residual_norm = 0.0

    C = companion_matrix(c)
    eigen = eig(C)
    return CompanionModel(
        c=c,
        C=C,
        residual=residual,
        residual_norm=residual_norm,
        target_norm=target_norm,
        eigen=eigen,
        vandermonde=vandermonde(eigen.eigenvalues, N),
        rank=rank,
        gram_condition=gram_condition,
        forced=force and (rank < N or gram_condition > gram_limit),
        krylov=F,
    )


def circulant_check(model: CompanionModel, *, tol: float = CIRCULANT_TOL) -> bool:
    """True when c = (1, 0, ..., 0), i.e. C is the cyclic shift."""

    expected = np.zeros(model.N, dtype=np.complex128)
    expected[0] = 1.0
    return bool(np.max(np.abs(model.c - expected)) <= tol)


def pseudospectral_bound(model: CompanionModel, j: int) -> float:
    """ε_j = |e_N| · ‖r‖ for the unit right eigenvector ẽ_j."""

    if not 0 <= j < model.N:
        raise InputError(
            f"eigen index {j} out of range for N={model.N}",
            details={"index": j, "N": model.N},
        )
    vector = model.eigen.right_vectors[:, j]
    vector = vector / np.linalg.norm(vector)
    return float(abs(vector[-1]) * model.residual_norm)


def pseudospectral_bounds(model: CompanionModel) -> list[float]:
    return [pseudospectral_bound(model, j) for j in range(model.N)]


def smallest_invariant_span_check(
    samples: npt.ArrayLike, candidate: npt.ArrayLike, *, tol: float = 1e-8
) -> bool:
    """True when every Krylov column lies in the span of ``candidate``."""

    data = as_complex_matrix(samples, name="krylov samples")
    basis = as_complex_matrix(candidate, name="candidate")
    if basis.shape[0] != data.shape[0]:
        raise InputError(
            f"candidate has {basis.shape[0]} rows, Krylov samples have {data.shape[0]}"
        )
    projected = basis @ (pseudoinverse(basis).matrix @ data)
    norms = np.linalg.norm(data, axis=0)
    errors = np.linalg.norm(data - projected, axis=0)
    return bool(np.all(errors <= tol * np.maximum(norms, 1.0)))


@dataclass(frozen=True, slots=True)
class ResidualDecayTable:
    sizes: tuple[int, ...]
    residual_norms: tuple[float, ...]
    relative_residuals: tuple[float, ...]
    monotone_fraction: float
    m: int

    def rows(self) -> list[tuple[int, float, float]]:
        return list(zip(self.sizes, self.residual_norms, self.relative_residuals))


def monotone_fraction(values: Sequence[float]) -> float:
    """Fraction of consecutive entries that strictly decrease."""

    if len(values) < 2:
        return 0.0
    steps = [later < earlier for earlier, later in zip(values, values[1:])]
    return sum(steps) / len(steps)


def residual_decay_study(
    system: MapSystem,
    observable: Observable,
    N_schedule: Sequence[int],
    m: int,
    *,
    x0: npt.ArrayLike | None = None,
    max_workers: int = 1,
) -> ResidualDecayTable:
    """Companion residual for each N, all fitted on one trajectory with m rows."""

    schedule = [int(value) for value in N_schedule]
    if not schedule or any(value < 1 for value in schedule):
        raise InputError(
            "N schedule must contain positive integers", details={"schedule": schedule}
        )
    if schedule != sorted(schedule):
        raise InputError("N schedule must be ascending", details={"schedule": schedule})
    if len(set(schedule)) < 3:
        raise InputError(
            "N schedule needs at least 3 distinct sizes for a decay slope",
            details={"schedule": schedule},
        )
    if m < schedule[-1] + 1:
        raise InputError(
            f"m={m} rows is insufficient for N={schedule[-1]}; need at least {schedule[-1] + 1}",
            details={"m": m, "N": schedule[-1]},
        )

    start = default_initial_state(system) if x0 is None else np.atleast_1d(x0)
    path = trajectory(system, start, m + schedule[-1])
    series = observable(path.points)

    def _fit(N: int) -> CompanionModel:
        return fit_companion(krylov_samples(series, m, N), force=True)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            models = list(executor.map(_fit, schedule))
    else:
        models = [_fit(N) for N in schedule]

    norms = tuple(model.residual_norm for model in models)
    relative = tuple(model.relative_residual for model in models)
    fraction = monotone_fraction(norms)
    logger.info(
        "krylov.residual_decay_study",
        extra={
            "extra_payload": {
                "system": system.name,
                "observable": observable.label,
                "schedule": schedule,
                "monotone_fraction": fraction,
            }
        },
    )
    return ResidualDecayTable(
        sizes=tuple(schedule),
        residual_norms=norms,
        relative_residuals=relative,
        monotone_fraction=fraction,
        m=m,
    )


__all__ = [
    "CompanionModel",
    "ResidualDecayTable",
    "circulant_check",
    "companion_matrix",
    "fit_companion",
    "monotone_fraction",
    "pseudospectral_bound",
    "pseudospectral_bounds",
    "residual_decay_study",
    "smallest_invariant_span_check",
]
