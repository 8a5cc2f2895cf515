"""Sample-space regression and weak eigenfunctions along trajectories.

Functions here take data in the library orientation (rows are points,
columns are observables) and transpose internally where the sample-space
formulation needs f(x) as an N×m array: the regression generator B
minimizes ‖f(Tx) − f(x) B‖_F and C = Bᵀ acts on point samples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .constants import DELTA_UNIT, EPS_RANK
from .dynamics import MapSystem, Trajectory, default_initial_state, trajectory
from .errors import InputError, RankDeficiencyError
from .gla import gla_average
from .krylov import monotone_fraction
from .numerics import (
    ComplexMatrix,
    ComplexVector,
    as_complex_matrix,
    eig,
    match_eigenvalues,
    pseudoinverse,
)
from .observables import Dictionary

logger = logging.getLogger(__name__)


def c_mp_solve(
    F: npt.ArrayLike, target: npt.ArrayLike, *, eps_rank: float = EPS_RANK
) -> ComplexVector:
    """c = F⁺ f̃, the minimum-norm least-squares coefficients.

    ``F`` is observables×points here, as in the sample-space formulation.
    """

    matrix = as_complex_matrix(F, name="F")
    values = np.asarray(target, dtype=np.complex128).ravel()
    if values.size != matrix.shape[0]:
        raise InputError(
            f"target has {values.size} entries, F has {matrix.shape[0]} rows",
            details={"target": int(values.size), "rows": int(matrix.shape[0])},
        )
    inverse = pseudoinverse(matrix, eps_rank=eps_rank)
    expected = min(matrix.shape)
    if inverse.rank < expected:
        offending = float(inverse.singular_values[inverse.rank])
        raise RankDeficiencyError(
            f"F has rank {inverse.rank} < {expected}; singular value {offending:.3e} "
            f"is below {inverse.threshold:.3e}",
            details={
                "singular_value": offending,
                "index": inverse.rank,
                "threshold": inverse.threshold,
                "rank": inverse.rank,
            },
        )
    return inverse.matrix @ values


@dataclass(frozen=True, slots=True)
class RegressionResult:
    C: ComplexMatrix
    unique: bool
    residual: float
    max_error: float
    rank: int
    N: int
    m: int

    @property
    def B(self) -> ComplexMatrix:
        return self.C.T


def regression_objective(
    F: npt.ArrayLike, Fprime: npt.ArrayLike, B: npt.ArrayLike
) -> float:
    """‖f(Tx) − f(x) B‖_F with f(x) = Fᵀ."""

    samples = as_complex_matrix(F, name="F")
    shifted = as_complex_matrix(Fprime, name="Fprime")
    return float(np.linalg.norm(shifted.T - samples.T @ np.asarray(B, dtype=np.complex128)))


def regression_generator(
    F: npt.ArrayLike, Fprime: npt.ArrayLike, *, eps_rank: float = EPS_RANK
) -> RegressionResult:
    """m×m generator on point samples from library-orientation F, F′ (m×N)."""

    samples = as_complex_matrix(F, name="F")
    shifted = as_complex_matrix(Fprime, name="Fprime")
    if samples.shape != shifted.shape:
        raise InputError(f"F and Fprime shapes differ: {samples.shape} vs {shifted.shape}")
    m, N = samples.shape
    inverse = pseudoinverse(samples.T, eps_rank=eps_rank)
    B = inverse.matrix @ shifted.T
    residual_matrix = shifted.T - samples.T @ B
    unique = inverse.rank == m
    if N < m or not unique:
        logger.warning(
            "weak_eig.regression_not_unique",
            extra={"extra_payload": {"N": N, "m": m, "rank": inverse.rank}},
        )
    return RegressionResult(
        C=B.T,
        unique=unique,
        residual=float(np.linalg.norm(residual_matrix)),
        max_error=float(np.max(np.abs(residual_matrix))),
        rank=inverse.rank,
        N=N,
        m=m,
    )


def cyclic_permutation(m: int) -> ComplexMatrix:
    """Π with Π[l, l+1] = 1 and Π[m-1, 0] = 1."""

    if m < 1:
        raise InputError(f"permutation size must be >= 1, got {m}")
    return np.roll(np.eye(m, dtype=np.complex128), 1, axis=1)


@dataclass(frozen=True, slots=True)
class PeriodicOrbitReport:
    permutation_error: float
    spectrum_distance: float


def periodic_orbit_check(C: npt.ArrayLike) -> PeriodicOrbitReport:
    matrix = as_complex_matrix(C, name="C")
    m = matrix.shape[0]
    roots = np.exp(2j * np.pi * np.arange(m) / m)
    return PeriodicOrbitReport(
        permutation_error=float(np.max(np.abs(matrix - cyclic_permutation(m)))),
        spectrum_distance=match_eigenvalues(eig(matrix).eigenvalues, roots),
    )


@dataclass(frozen=True, slots=True)
class DensityTable:
    sizes: tuple[int, ...]
    errors: tuple[float, ...]
    unique: tuple[bool, ...]
    monotone_fraction: float


def density_error_estimate(
    system: MapSystem,
    dictionary: Dictionary,
    m_schedule: Sequence[int],
    *,
    x0: npt.ArrayLike | None = None,
) -> DensityTable:
    """Worst one-step prediction error of the regression generator per m."""

    schedule = [int(m) for m in m_schedule]
    if not schedule or schedule != sorted(schedule) or schedule[0] < 1:
        raise InputError(
            "m schedule must be ascending positive integers", details={"schedule": schedule}
        )
    start = default_initial_state(system) if x0 is None else np.atleast_1d(x0)
    samples = dictionary.evaluate(trajectory(system, start, schedule[-1] + 1).points)

    errors: list[float] = []
    unique: list[bool] = []
    for m in schedule:
        result = regression_generator(samples[:m], samples[1 : m + 1])
        errors.append(result.max_error)
        unique.append(result.unique)
    return DensityTable(
        sizes=tuple(schedule),
        errors=tuple(errors),
        unique=tuple(unique),
        monotone_fraction=monotone_fraction(errors),
    )


@dataclass(frozen=True, slots=True)
class WeakFunctional:
    """Trajectory averages L_K(h) = (1/K) Σ_{k≤K} h(x_k) ẽ(x_k).

    Weights follow ẽ(x_k) = λ^{k-1} ẽ(x_1).
    """

    lambda_: complex
    weights: ComplexVector
    labels: tuple[str, ...]
    K_schedule: tuple[int, ...]
    values: ComplexMatrix
    shifted: ComplexMatrix

    def value(self, label: str, K: int) -> complex:
        return complex(self.values[self.K_schedule.index(K), self.labels.index(label)])


@dataclass(frozen=True, slots=True)
class WeakReport:
    """Defects per K and the window cross-check.

    ``gla_crosscheck`` compares L over the first half of the longest window
    with e1·λ^H·gla_average over the disjoint second half (H = K // 2 points each);
    ``None`` when that window is shorter than two points.
    """

    defects: tuple[float, ...]
    defect_bounds: tuple[float, ...]
    gla_crosscheck: float | None = None

    @property
    def defect(self) -> float:
        return self.defects[-1]

    @property
    def defect_bound(self) -> float:
        return self.defect_bounds[-1]


def weak_functional(
    traj: Trajectory,
    lam: complex,
    h_set: Dictionary,
    K_schedule: Sequence[int],
    *,
    e1: complex = 1.0,
) -> tuple[WeakFunctional, WeakReport]:
    """Evaluate L_K(h) and the shifted average UL_K(h).

    UL_K(h) = λ (1/K) Σ_{k≤K} h(x_{k+1}) ẽ(x_{k+1}).

    For an eigenmeasure the two agree; along a finite trajectory their
    difference is the boundary term λ/K (hẽ(x_{K+1}) − hẽ(x_1)).
    """

    lam = complex(lam)
    if abs(abs(lam) - 1.0) > DELTA_UNIT:
        raise InputError(
            f"|lambda|={abs(lam):.6g} is off the unit circle",
            code="UNIT_BAND",
            details={"lambda": {"re": lam.real, "im": lam.imag}, "delta_unit": DELTA_UNIT},
        )
    schedule = tuple(sorted({int(K) for K in K_schedule}))
    if not schedule or schedule[0] < 1:
        raise InputError("K schedule must contain positive integers")
    if traj.length < schedule[-1] + 1:
        raise InputError(
            f"trajectory of length {traj.length} is too short for K={schedule[-1]}",
            details={"length": traj.length, "required": schedule[-1] + 1},
        )

    count = schedule[-1] + 1
    h_values = h_set.evaluate(traj.points[:count])
    weights = complex(e1) * np.power(lam, np.arange(count, dtype=float))
    products = h_values * weights[:, None]
    cumulative = np.cumsum(products, axis=0)

    values = np.empty((len(schedule), h_set.order), dtype=np.complex128)
    shifted = np.empty_like(values)
    defects: list[float] = []
    bounds: list[float] = []
    for row, K in enumerate(schedule):
        values[row] = cumulative[K - 1] / K
        shifted[row] = lam * (cumulative[K] - cumulative[0]) / K
        defects.append(float(np.max(np.abs(shifted[row] - lam * values[row]))))
        h_sup = float(np.max(np.abs(h_values[: K + 1])))
        e_sup = float(np.max(np.abs(weights[: K + 1])))
        bounds.append(2.0 * h_sup * e_sup / K)

    functional = WeakFunctional(
        lambda_=lam,
        weights=weights,
        labels=tuple(h_set.labels),
        K_schedule=schedule,
        values=values,
        shifted=shifted,
    )
    crosscheck: float | None = None
    half = schedule[-1] // 2
    if half >= 1:
        later = np.array(
            [
                gla_average(h_values[half : 2 * half, j], 1.0 / lam, half)
                for j in range(h_set.order)
            ]
        )
        first = cumulative[half - 1] / half
        crosscheck = float(np.max(np.abs(first - complex(e1) * lam**half * later)))
    report = WeakReport(
        defects=tuple(defects), defect_bounds=tuple(bounds), gla_crosscheck=crosscheck
    )
    logger.info(
        "weak_eig.weak_functional",
        extra={
            "extra_payload": {
                "lambda": lam,
                "K": schedule[-1],
                "defect": report.defect,
                "defect_bound": report.defect_bound,
            }
        },
    )
    return functional, report


__all__ = [
    "DensityTable",
    "PeriodicOrbitReport",
    "RegressionResult",
    "WeakFunctional",
    "WeakReport",
    "c_mp_solve",
    "cyclic_permutation",
    "density_error_estimate",
    "periodic_orbit_check",
    "regression_generator",
    "regression_objective",
    "weak_functional",
]
