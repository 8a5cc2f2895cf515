"""Generalized Laplace Analysis: eigen-projections by weighted time averages.

Eigenvalues are supplied by the caller (typically from a finite section or a
companion model) in modulus-descending order. The caller also asserts there is
no further spectrum of modulus at least |λ_K|; data alone cannot show this.
Fields with dense point spectrum should be restricted to a finite resolution
before averaging.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .constants import DELTA_UNIT, GLA_N_MAX
from .errors import InputError
from .numerics import ComplexMatrix, ComplexVector

logger = logging.getLogger(__name__)

ORDER_SLACK = 1e-12


def _check_band(lam: complex, n: int, *, allow_decaying: bool) -> bool:
    """Validate |λ| and return True when compensated summation is required."""

    modulus = abs(lam)
    if abs(modulus - 1.0) <= DELTA_UNIT:
        return False
    if allow_decaying and modulus < 1.0:
        if modulus == 0.0:
            raise InputError("GLA weights λ^-i are undefined for λ = 0", code="UNIT_BAND")
        if n > GLA_N_MAX:
            raise InputError(
                f"n={n} exceeds the cap {GLA_N_MAX} for off-circle eigenvalues",
                code="UNIT_BAND",
                details={"n": n, "n_max": GLA_N_MAX, "modulus": modulus},
            )
        return True
    raise InputError(
        f"|lambda|={modulus:.6g} is outside the unit band 1±{DELTA_UNIT:g}",
        code="UNIT_BAND",
        details={
            "lambda": {"re": float(lam.real), "im": float(lam.imag)},
            "delta_unit": DELTA_UNIT,
            "allow_decaying": allow_decaying,
        },
    )


def _weights(lam: complex, n: int) -> ComplexVector:
    weights = np.power(complex(lam), -np.arange(n, dtype=float))
    if not np.all(np.isfinite(weights)):
        raise InputError(
            f"λ^-i overflows before i={n}; reduce n",
            code="UNIT_BAND",
            details={"n": n, "modulus": abs(lam)},
        )
    return weights


def _compensated_mean(terms: npt.NDArray[np.complex128]) -> complex:
    return complex(math.fsum(terms.real), math.fsum(terms.imag)) / terms.size


def gla_average(
    series: npt.ArrayLike,
    lam: complex,
    n: int | None = None,
    *,
    allow_decaying: bool = False,
) -> complex:
    """(1/n) Σ_{i<n} λ^{-i} series[i]."""

    values = np.asarray(series, dtype=np.complex128).ravel()
    count = values.size if n is None else int(n)
    if count < 1:
        raise InputError(f"n must be >= 1, got {count}")
    if count > values.size:
        raise InputError(
            f"series has {values.size} samples, fewer than n={count}",
            details={"length": int(values.size), "n": count},
        )
    lam = complex(lam)
    compensated = _check_band(lam, count, allow_decaying=allow_decaying)
    terms = _weights(lam, count) * values[:count]
    if compensated:
        return _compensated_mean(terms)
    return complex(terms.sum() / count)


@dataclass(frozen=True, slots=True)
class GlaComponent:
    """Projection f_k = φ_k(x) s_k(z) for one eigenvalue.

    ``mode`` is s_k scaled so its largest-magnitude entry equals 1, and
    ``eigenfunction_value`` is the matching φ_k(x).
    """

    eigenvalue: complex
    projection: ComplexVector
    eigenfunction_value: complex
    mode: ComplexVector
    tail: float


@dataclass(frozen=True, slots=True)
class GlaResult:
    eigenvalues: ComplexVector
    components: tuple[GlaComponent, ...]
    n: int

    @property
    def projections(self) -> ComplexMatrix:
        return np.vstack([component.projection for component in self.components])


def _split_projection(projection: ComplexVector) -> tuple[complex, ComplexVector]:
    pivot = int(np.argmax(np.abs(projection)))
    value = complex(projection[pivot])
    if value == 0.0:
        return 0.0j, np.zeros_like(projection)
    return value, projection / value


def _column_means(
    weights: ComplexVector, block: ComplexMatrix, *, compensated: bool
) -> ComplexVector:
    if not compensated:
        return (weights @ block) / block.shape[0]
    terms = weights[:, None] * block
    return np.array([_compensated_mean(terms[:, col]) for col in range(block.shape[1])])


def gla_modes(
    field: npt.ArrayLike,
    lambdas: npt.ArrayLike,
    n: int | None = None,
    *,
    allow_decaying: bool = False,
) -> GlaResult:
    """Peel eigen-projections in the given order from a field sampled along a trajectory.

    ``field[i, z]`` is f(T^i x, z). Component k is averaged from the residual
    field after subtracting λ_j^i f_j for every j < k.
    """

    samples = np.asarray(field, dtype=np.complex128)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.ndim != 2 or samples.size == 0:
        raise InputError(f"field must be an (n, Z) array, got shape {samples.shape}")
    eigenvalues = np.asarray(lambdas, dtype=np.complex128).ravel()
    if eigenvalues.size == 0:
        raise InputError("gla_modes needs at least one eigenvalue")
    moduli = np.abs(eigenvalues)
    for index in range(eigenvalues.size - 1):
        if moduli[index + 1] > moduli[index] + ORDER_SLACK:
            raise InputError(
                "eigenvalues must be ordered by nonincreasing modulus",
                details={"index": index + 1, "moduli": moduli.tolist()},
            )
    count = samples.shape[0] if n is None else int(n)
    if count < eigenvalues.size:
        raise InputError(
            f"n={count} is smaller than the number of eigenvalues {eigenvalues.size}",
            details={"n": count, "K+1": int(eigenvalues.size)},
        )
    if count > samples.shape[0]:
        raise InputError(
            f"field has {samples.shape[0]} rows, fewer than n={count}",
            details={"rows": int(samples.shape[0]), "n": count},
        )

    residual = samples[:count].copy()
    half = max(1, count // 2)
    components: list[GlaComponent] = []
    for lam in eigenvalues:
        compensated = _check_band(complex(lam), count, allow_decaying=allow_decaying)
        weights = _weights(complex(lam), count)
        projection = _column_means(weights, residual, compensated=compensated)
        partial = _column_means(weights[:half], residual[:half], compensated=compensated)
        tail = float(np.max(np.abs(projection - partial)))
        value, mode = _split_projection(projection)
        components.append(
            GlaComponent(
                eigenvalue=complex(lam),
                projection=projection,
                eigenfunction_value=value,
                mode=mode,
                tail=tail,
            )
        )
        residual -= np.outer(np.power(complex(lam), np.arange(count, dtype=float)), projection)
        logger.debug(
            "gla.component",
            extra={"extra_payload": {"lambda": complex(lam), "tail": tail}},
        )
    return GlaResult(eigenvalues=eigenvalues, components=tuple(components), n=count)


__all__ = ["GlaComponent", "GlaResult", "gla_average", "gla_modes"]
