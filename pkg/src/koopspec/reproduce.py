"""Built-in worked examples and the harness that reproduces them."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from statistics import mean
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .constants import (
    DEFAULT_MU,
    DEFAULT_OMEGA,
    DEFAULT_SEED,
    DOUBLING_SLOPE_WINDOW,
    ROTATION_SLOPE_WINDOW,
)
from .dynamics import TWO_PI, make_system, trajectory
from .errors import InputError
from .finite_section import analytic_section, convergence_study, empirical_section
from .gla import gla_average, gla_modes
from .krylov import (
    circulant_check,
    companion_matrix,
    fit_companion,
    pseudospectral_bounds,
    residual_decay_study,
)
from .models.run_config import RunConfig
from .numerics import eig, match_eigenvalues, pseudoinverse, thin_svd, vandermonde
from .observables import (
    DataMatrixPair,
    fourier_dictionary,
    krylov_samples,
    parse_observable,
    sample_pair,
)
from .svd_dmd import similarity_check
from .weak_eig import periodic_orbit_check, regression_generator, weak_functional

logger = logging.getLogger(__name__)

CaseRunner = Callable[[], tuple[bool, dict[str, Any]]]


@dataclass(frozen=True, slots=True)
class WorkedExample:
    """A CLI configuration that reproduces one of the built-in examples."""

    name: str
    command: str
    system: str
    dictionary: str | None = None
    observable: str | None = None


WORKED_EXAMPLES: tuple[WorkedExample, ...] = (
    WorkedExample("rotation_exactness", "edmd", "rotation", dictionary="fourier:1,2,3"),
    WorkedExample("finite_section_failure", "edmd", "doubling", dictionary="fourier:1,2,3"),
    WorkedExample("svd_similarity", "svd", "rotation", dictionary="fourier:1,2,3"),
    WorkedExample("companion_closed_form", "hankel", "rotation", observable="fourier:1+fourier:2"),
    WorkedExample("gla_recovery", "gla", "rotation", observable="fourier:1+fourier:2"),
    WorkedExample("weak_functional", "weak", "rotation", dictionary="fourier:-1,1"),
    WorkedExample("rotation_convergence", "convergence", "rotation", dictionary="fourier:1,2,3"),
    WorkedExample("doubling_convergence", "convergence", "doubling", dictionary="fourier:1,2,3"),
    WorkedExample("residual_decay", "convergence", "rotation", observable="geometric:0.5"),
)


def match_worked_example(config: RunConfig) -> str | None:
    """Name of the built-in example ``config`` reproduces, if any."""

    omega = config.system.omega
    if config.system.name in {"rotation", "rotation_contraction"} and omega is not None:
        if not np.isclose(omega, DEFAULT_OMEGA, rtol=0.0, atol=1e-12):
            return None
    for example in WORKED_EXAMPLES:
        if example.command != config.command or example.system != config.system.name:
            continue
        if example.dictionary is not None and example.dictionary != config.dictionary:
            continue
        if example.observable is not None and example.observable != config.observable:
            continue
        return example.name
    return None


def _unit(angle: float) -> complex:
    return complex(np.exp(1j * angle))


def _rotation_exactness() -> tuple[bool, dict[str, Any]]:
    system = make_system("rotation", omega=DEFAULT_OMEGA)
    dictionary = fourier_dictionary([1, 2, 3])
    expected = np.exp(1j * DEFAULT_OMEGA * np.arange(1, 4))
    analytic = eig(analytic_section(system, dictionary).matrix).eigenvalues
    pair = sample_pair(dictionary, trajectory(system, [0.0], 500))
    empirical = eig(empirical_section(pair).matrix).eigenvalues
    analytic_distance = match_eigenvalues(analytic, expected)
    empirical_distance = match_eigenvalues(empirical, expected)
    return analytic_distance <= 1e-8 and empirical_distance <= 1e-3, {
        "analytic_distance": analytic_distance,
        "empirical_distance": empirical_distance,
    }


def _finite_section_failure() -> tuple[bool, dict[str, Any]]:
    system = make_system("doubling")
    dictionary = fourier_dictionary([1, 2, 3])
    analytic = analytic_section(system, dictionary)
    max_modulus = float(np.max(np.abs(eig(analytic.matrix).eigenvalues)))
    pair = sample_pair(dictionary, trajectory(system, [TWO_PI / np.sqrt(2.0)], 100_000))
    entry_error = float(np.max(np.abs(empirical_section(pair).matrix - analytic.matrix)))
    return max_modulus <= 1e-10 and entry_error <= 0.05, {
        "max_modulus": max_modulus,
        "entry_error": entry_error,
    }


def _inside(slope: float | None, window: tuple[float, float]) -> bool:
    return slope is not None and window[0] <= slope <= window[1]


def _convergence_rates() -> tuple[bool, dict[str, Any]]:
    dictionary = fourier_dictionary([1, 2, 3])
    rotation = convergence_study(
        make_system("rotation", omega=DEFAULT_OMEGA), dictionary, [100, 1_000, 10_000]
    )
    doubling = convergence_study(make_system("doubling"), dictionary, [1_000, 10_000, 100_000])
    return _inside(rotation.slope, ROTATION_SLOPE_WINDOW) and _inside(
        doubling.slope, DOUBLING_SLOPE_WINDOW
    ), {"rotation_slope": rotation.slope, "doubling_slope": doubling.slope}


def _rotation_series(omega: float, observable: str, length: int) -> np.ndarray:
    system = make_system("rotation", omega=omega)
    return parse_observable(observable, system)(trajectory(system, [0.3], length).points)


def _companion_models() -> dict[str, Any]:
    models: dict[str, Any] = {}
    for N in (3, 5, 8):
        series = _rotation_series(DEFAULT_OMEGA, "fourier:1", 64 + N)
        models[f"single_N{N}"] = fit_companion(krylov_samples(series, 64, N), force=True)
        cyclic = _rotation_series(TWO_PI / N, "fourier:1", 64 + N)
        models[f"cyclic_N{N}"] = fit_companion(krylov_samples(cyclic, 64, N), force=True)
    series = _rotation_series(DEFAULT_OMEGA, "fourier:1+fourier:2", 66)
    models["two_frequency"] = fit_companion(krylov_samples(series, 64, 2))
    doubling = make_system("doubling")
    points = trajectory(doubling, [TWO_PI / np.sqrt(2.0)], 520).points
    models["doubling_N8"] = fit_companion(
        krylov_samples(np.exp(1j * points[:, 0]), 512, 8), force=True
    )
    return models


def _companion_closed_form() -> tuple[bool, dict[str, Any]]:
    models = _companion_models()
    errors: dict[str, float] = {}
    circulant: dict[str, bool] = {}
    for N in (3, 5, 8):
        expected = np.zeros(N, dtype=complex)
        expected[0] = _unit(N * DEFAULT_OMEGA)
        errors[f"N{N}"] = float(np.max(np.abs(models[f"single_N{N}"].c - expected)))
        circulant[f"N{N}"] = circulant_check(models[f"cyclic_N{N}"])
    w = DEFAULT_OMEGA
    pair_model = models["two_frequency"]
    expected_c = np.array([-_unit(3 * w), _unit(w) * (_unit(w) + 1)])
    c_error = float(np.max(np.abs(pair_model.c - expected_c)))
    eigen_error = match_eigenvalues(pair_model.eigenvalues, [_unit(w), _unit(2 * w)])
    passed = (
        max(errors.values()) <= 1e-9
        and all(circulant.values())
        and not circulant_check(pair_model)
        and c_error <= 1e-9
        and eigen_error <= 1e-9
    )
    return passed, {
        "single_errors": errors,
        "circulant": circulant,
        "two_frequency_c_error": c_error,
        "two_frequency_eigen_error": eigen_error,
    }


def _pseudospectral_identity() -> tuple[bool, dict[str, Any]]:
    worst = 0.0
    zero_cases_ok = True
    for name, model in _companion_models().items():
        F = model.krylov
        target = model.residual + F @ model.c
        solution, *_ = np.linalg.lstsq(F, target, rcond=None)
        residual = float(np.linalg.norm(target - F @ solution) / np.sqrt(target.size))
        if model.residual_norm == 0.0:
            bounds = pseudospectral_bounds(model)
            zero_cases_ok = zero_cases_ok and all(eps == 0.0 for eps in bounds)
            residual = 0.0
        recomputed = np.abs(model.eigen.right_vectors[-1, :]) * residual
        worst = max(worst, float(np.max(np.abs(recomputed - pseudospectral_bounds(model)))))
        logger.debug("reproduce.pseudospectral", extra={"extra_payload": {"model": name}})
    return worst <= 1e-12 and zero_cases_ok, {"max_difference": worst}


def _residual_decay() -> tuple[bool, dict[str, Any]]:
    schedule = [4, 8, 16, 32, 64]
    rotation = make_system("rotation", omega=DEFAULT_OMEGA)
    decaying = residual_decay_study(
        rotation, parse_observable("geometric:0.5", rotation), schedule, 400
    )
    contraction = make_system("rotation_contraction", omega=DEFAULT_OMEGA, mu=DEFAULT_MU)
    closed = residual_decay_study(
        contraction, parse_observable("fourier:1+coord:2", contraction), schedule, 400
    )
    doubling = make_system("doubling")
    mixing = residual_decay_study(doubling, parse_observable("fourier:1", doubling), schedule, 2000)
    passed = (
        decaying.residual_norms[0] > 0.0
        and decaying.residual_norms[-1] <= 0.2 * decaying.residual_norms[0]
        and all(value == 0.0 for value in closed.residual_norms)
        and all(value >= 0.5 for value in mixing.relative_residuals)
    )
    return passed, {
        "rotation_residuals": list(decaying.residual_norms),
        "contraction_residuals": list(closed.residual_norms),
        "doubling_relative_residuals": list(mixing.relative_residuals),
    }


def _svd_similarity() -> tuple[bool, dict[str, Any]]:
    rng = np.random.default_rng(DEFAULT_SEED)
    distances: list[float] = []
    vector_errors: list[float] = []
    for _ in range(20):
        F = rng.standard_normal((50, 4)) + 1j * rng.standard_normal((50, 4))
        Fprime = rng.standard_normal((50, 4)) + 1j * rng.standard_normal((50, 4))
        report = similarity_check(DataMatrixPair(F=F, Fprime=Fprime, labels=("a", "b", "c", "d")))
        distances.append(report.distance if report.distance is not None else float("inf"))
        vector_errors.append(
            report.eigenvector_error if report.eigenvector_error is not None else float("inf")
        )
    system = make_system("rotation", omega=DEFAULT_OMEGA)
    rotation = similarity_check(
        sample_pair(fourier_dictionary([1, 2, 3]), trajectory(system, [0.0], 500))
    )
    distances.append(rotation.distance if rotation.distance is not None else float("inf"))
    return max(distances) <= 1e-9 and max(vector_errors) <= 1e-8, {
        "max_distance": max(distances),
        "max_eigenvector_error": max(vector_errors),
    }


def _gla_recovery() -> tuple[bool, dict[str, Any]]:
    n = 10_000
    w = DEFAULT_OMEGA
    system = make_system("rotation", omega=w)
    theta = trajectory(system, [0.4], n).points[:, 0]
    a = np.array([1.0, 0.5, -0.25j])
    b = np.array([0.3, 1.0, 0.2])
    field = np.exp(1j * theta)[:, None] * a + np.exp(2j * theta)[:, None] * b
    lambdas = [_unit(w), _unit(2 * w)]
    result = gla_modes(field, lambdas, n)
    bound_first = 2 * np.max(np.abs(b)) / (n * abs(1 - _unit(w)))
    bound_second = bound_first + 2 * np.max(np.abs(a)) / (n * abs(1 - _unit(-w)))
    first_error = float(np.max(np.abs(result.components[0].projection - _unit(0.4) * a)))
    second_error = float(np.max(np.abs(result.components[1].projection - _unit(0.8) * b)))
    peeled = field - np.outer(np.power(lambdas[0], np.arange(n)), result.components[0].projection)
    leftover = max(abs(gla_average(peeled[:, z], lambdas[0])) for z in range(field.shape[1]))
    passed = (
        first_error <= 10 * bound_first
        and second_error <= 10 * bound_second
        and leftover <= 2 * float(np.max(np.abs(field))) / n
    )
    return passed, {
        "first_error": first_error,
        "second_error": second_error,
        "peeling_residual": float(leftover),
    }


def _weak_functional() -> tuple[bool, dict[str, Any]]:
    w = DEFAULT_OMEGA
    system = make_system("rotation", omega=w)
    path = trajectory(system, [0.0], 10_001)
    _functional, report = weak_functional(
        path, _unit(w), fourier_dictionary([-1, 1]), [100, 1_000, 10_000]
    )
    defects_ok = all(
        defect <= bound * (1.0 + 1e-9)
        for defect, bound in zip(report.defects, report.defect_bounds)
    )

    m = 8
    cycle = make_system("rotation", omega=TWO_PI / m)
    samples = fourier_dictionary(list(range(m))).evaluate(trajectory(cycle, [0.0], m + 1).points)
    orbit = periodic_orbit_check(regression_generator(samples[:m], samples[1:]).C)
    passed = defects_ok and orbit.permutation_error <= 1e-10 and orbit.spectrum_distance <= 1e-10
    return passed, {
        "defects": list(report.defects),
        "defect_bounds": list(report.defect_bounds),
        "permutation_error": orbit.permutation_error,
        "spectrum_distance": orbit.spectrum_distance,
    }


def _numerics_properties() -> tuple[bool, dict[str, Any]]:
    rng = np.random.default_rng(DEFAULT_SEED)
    worst = {"penrose": 0.0, "svd": 0.0, "eigen": 0.0, "vandermonde": 0.0}
    for _ in range(100):
        rows = int(rng.integers(2, 12))
        cols = int(rng.integers(1, rows + 1))
        A = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
        scale = max(1.0, float(np.linalg.norm(A, 2)))
        P = pseudoinverse(A).matrix
        worst["penrose"] = max(worst["penrose"], float(np.linalg.norm(A @ P @ A - A, 2)) / scale)
        worst["svd"] = max(
            worst["svd"], float(np.linalg.norm(thin_svd(A).reconstruct() - A, 2)) / scale
        )
        size = int(rng.integers(1, 7))
        M = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
        eigen = eig(M)
        worst["eigen"] = max(worst["eigen"], float(np.max(eigen.right_residuals(M))))
        c = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        C = companion_matrix(c)
        values = eig(C).eigenvalues
        V = vandermonde(values, size)
        rows_error = np.linalg.norm(V @ C - values[:, None] * V, axis=1)
        worst["vandermonde"] = max(
            worst["vandermonde"],
            float(np.max(rows_error / (1.0 + np.abs(values) ** size))),
        )
    passed = (
        worst["penrose"] <= 1e-10
        and worst["svd"] <= 1e-10
        and worst["eigen"] <= 1e-8
        and worst["vandermonde"] <= 1e-8
    )
    return passed, worst


@dataclass(frozen=True, slots=True)
class ReproductionCase:
    case_id: str
    summary: str
    runner: CaseRunner


CASES: tuple[ReproductionCase, ...] = (
    ReproductionCase(
        "rotation_exactness",
        "Rotation spectrum from analytic and sampled sections",
        _rotation_exactness,
    ),
    ReproductionCase(
        "finite_section_failure",
        "Doubling-map section is nilpotent",
        _finite_section_failure,
    ),
    ReproductionCase(
        "convergence_rates",
        "Sample-error slopes for rotation and doubling",
        _convergence_rates,
    ),
    ReproductionCase(
        "companion_closed_form",
        "Companion coefficients in closed form",
        _companion_closed_form,
    ),
    ReproductionCase(
        "pseudospectral_identity",
        "Pseudospectral bound equals |e_N|·‖r‖",
        _pseudospectral_identity,
    ),
    ReproductionCase(
        "residual_decay",
        "Krylov residuals: pure point vs mixing",
        _residual_decay,
    ),
    ReproductionCase(
        "svd_similarity",
        "SVD-DMD spectrum matches F⁺F′",
        _svd_similarity,
    ),
    ReproductionCase(
        "gla_recovery",
        "GLA recovers two rotation modes",
        _gla_recovery,
    ),
    ReproductionCase(
        "weak_functional",
        "Weak-functional defect and periodic orbit",
        _weak_functional,
    ),
    ReproductionCase(
        "numerics_properties",
        "Randomized linear-algebra identities",
        _numerics_properties,
    ),
)


@dataclass(slots=True)
class CaseResult:
    case_id: str
    summary: str
    passed: bool
    latency_ms: float
    error: str | None = None
    details: dict[str, Any] = field(default_factory=dict)


@dataclass(slots=True)
class ReproductionMetrics:
    total: int
    passed: int
    failed: int
    pass_rate: float
    avg_latency_ms: float


@dataclass(slots=True)
class ReproductionReport:
    generated_at: str
    metrics: ReproductionMetrics
    results: list[CaseResult]

    def to_dict(self) -> dict[str, object]:
        return {
            "generated_at": self.generated_at,
            "metrics": {
                "total": self.metrics.total,
                "passed": self.metrics.passed,
                "failed": self.metrics.failed,
                "pass_rate": self.metrics.pass_rate,
                "avg_latency_ms": self.metrics.avg_latency_ms,
            },
            "results": [
                {
                    "case_id": result.case_id,
                    "summary": result.summary,
                    "passed": result.passed,
                    "latency_ms": result.latency_ms,
                    "error": result.error,
                    "details": result.details,
                }
                for result in self.results
            ],
        }


def build_report(results: Iterable[CaseResult]) -> ReproductionReport:
    materialized = list(results)
    total = len(materialized)
    passed = sum(1 for result in materialized if result.passed)
    latencies = [result.latency_ms for result in materialized]
    metrics = ReproductionMetrics(
        total=total,
        passed=passed,
        failed=total - passed,
        pass_rate=round(passed / total, 4) if total else 0.0,
        avg_latency_ms=round(mean(latencies), 4) if latencies else 0.0,
    )
    return ReproductionReport(
        generated_at=datetime.now(timezone.utc).isoformat(),
        metrics=metrics,
        results=materialized,
    )


def run_case(case: ReproductionCase) -> CaseResult:
    start = time.perf_counter()
    passed = False
    error: str | None = None
    details: dict[str, Any] = {}
    try:
        passed, details = case.runner()
    except Exception as exc:  # noqa: BLE001 - surfaced to report
        logger.exception("reproduce.case_error", extra={"extra_payload": {"case_id": case.case_id}})
        error = str(exc)
    latency_ms = (time.perf_counter() - start) * 1000
    return CaseResult(
        case_id=case.case_id,
        summary=case.summary,
        passed=bool(passed) and error is None,
        latency_ms=round(latency_ms, 4),
        error=error,
        details=details,
    )


def run_cases(case_ids: Sequence[str] | None = None) -> ReproductionReport:
    """Run the selected built-in cases (all when ``case_ids`` is empty)."""

    known = {case.case_id: case for case in CASES}
    if case_ids:
        unknown = sorted(set(case_ids) - set(known))
        if unknown:
            raise InputError(
                f"unknown reproduction case(s): {', '.join(unknown)}",
                details={"known": sorted(known)},
            )
        selected = [known[case_id] for case_id in case_ids]
    else:
        selected = list(CASES)
    results = [run_case(case) for case in selected]
    report = build_report(results)
    logger.info(
        "reproduce.metrics",
        extra={
            "extra_payload": {
                "pass_rate": report.metrics.pass_rate,
                "cases": report.metrics.total,
            }
        },
    )
    return report


__all__ = [
    "CASES",
    "CaseResult",
    "ReproductionCase",
    "ReproductionReport",
    "WORKED_EXAMPLES",
    "WorkedExample",
    "build_report",
    "match_worked_example",
    "run_case",
    "run_cases",
]
