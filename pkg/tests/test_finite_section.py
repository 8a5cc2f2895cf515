from __future__ import annotations

import numpy as np
import pytest

from koopspec.dynamics import MapSystem, make_system, trajectory
from koopspec.errors import InputError, RankDeficiencyError, SolverError
from koopspec.finite_section import (
    FAILURE_NOTICE,
    analytic_section,
    convergence_study,
    decompose,
    dual_average_section,
    empirical_section,
    log_log_slope,
    predict,
    reconstruct,
    section_error_residual,
    time_average_section,
    vector_modes,
)
from koopspec.observables import Dictionary, fourier_dictionary, parse_dictionary, sample_pair

from conftest import OMEGA

pytestmark = pytest.mark.unit


def test_analytic_rotation_section_is_diagonal(rotation: MapSystem, fourier3: Dictionary) -> None:
    section = analytic_section(rotation, fourier3)
    assert section.construction == "analytic"
    assert np.allclose(section.matrix, np.diag(np.exp(1j * OMEGA * np.array([1, 2, 3]))))


def test_analytic_doubling_section_is_nilpotent(fourier3: Dictionary) -> None:
    section = analytic_section(make_system("doubling"), fourier3)
    expected = np.zeros((3, 3))
    expected[1, 0] = 1.0
    assert np.array_equal(section.matrix, expected)
    assert np.allclose(np.linalg.matrix_power(section.matrix, 3), 0.0)


def test_analytic_section_needs_fourier_dictionary(rotation: MapSystem) -> None:
    with pytest.raises(InputError):
        analytic_section(rotation, parse_dictionary("delay:fourier:1:2", rotation))


def test_empirical_section_recovers_rotation_spectrum(
    rotation: MapSystem, fourier3: Dictionary
) -> None:
    pair = sample_pair(fourier3, trajectory(rotation, [0.0], 50))
    section = empirical_section(pair)
    decomposition = decompose(section, pair.F, pair.Fprime)

    expected = np.exp(1j * OMEGA * np.array([1, 2, 3]))
    assert np.allclose(np.sort_complex(decomposition.eigenvalues), np.sort_complex(expected))
    assert np.allclose(section.matrix, np.diag(expected), atol=1e-8)
    assert decomposition.residual_norms is not None
    assert np.all(decomposition.residual_norms < 1e-10)
    assert decomposition.notice is None


def test_empirical_section_rejects_rank_deficient_samples() -> None:
    pair = sample_pair(fourier_dictionary([1, 2]), trajectory(make_system("identity"), [0.0], 10))
    with pytest.raises(RankDeficiencyError) as excinfo:
        empirical_section(pair)
    assert excinfo.value.details["index"] == 1


def test_empirical_section_allows_fewer_samples_than_observables(
    rotation: MapSystem, caplog: pytest.LogCaptureFixture
) -> None:
    dictionary = fourier_dictionary(list(range(1, 7)))
    pair = sample_pair(dictionary, trajectory(rotation, [0.0], 4))
    with caplog.at_level("WARNING", logger="koopspec.finite_section"):
        section = empirical_section(pair)
    assert section.N == 6
    assert "finite_section.underdetermined" in caplog.text


def test_dual_average_matches_pseudoinverse(rotation: MapSystem, fourier3: Dictionary) -> None:
    pair = sample_pair(fourier3, trajectory(rotation, [0.3], 60))
    assert np.allclose(
        dual_average_section(pair).matrix, empirical_section(pair).matrix, atol=1e-10
    )


def test_time_average_section_approaches_analytic(
    rotation: MapSystem, fourier3: Dictionary
) -> None:
    exact = analytic_section(rotation, fourier3).matrix
    errors = []
    for m in (102, 1002):
        pair = sample_pair(fourier3, trajectory(rotation, [0.0], m))
        errors.append(np.linalg.norm(time_average_section(pair).matrix - exact, 2))
    assert errors[1] < errors[0] / 5.0


def test_reconstruct_and_predict_follow_the_data(
    rotation: MapSystem, fourier3: Dictionary
) -> None:
    pair = sample_pair(fourier3, trajectory(rotation, [0.0], 30))
    decomposition = decompose(empirical_section(pair), pair.F, pair.Fprime)

    assert np.allclose(reconstruct(pair.F, decomposition), pair.Fprime, atol=1e-8)
    assert np.allclose(predict(pair.F, decomposition, steps=0), pair.F, atol=1e-8)
    assert np.allclose(predict(pair.F[:-1], decomposition, steps=2), pair.Fprime[1:], atol=1e-8)
    with pytest.raises(InputError):
        predict(pair.F, decomposition, steps=-1)


def test_vector_modes_expand_observable_on_eigenfunctions(
    rotation: MapSystem, fourier3: Dictionary
) -> None:
    pair = sample_pair(fourier3, trajectory(rotation, [0.0], 30))
    decomposition = decompose(empirical_section(pair), pair.F)
    G = np.column_stack([2.0 * pair.F[:, 0], pair.F[:, 1] - pair.F[:, 2]])

    modes = vector_modes(decomposition, G)
    assert modes.shape == (3, 2)
    assert np.allclose(decomposition.eigenfunction_samples @ modes, G, atol=1e-8)


def test_doubling_section_reports_failure_notice(fourier3: Dictionary) -> None:
    system = make_system("doubling")
    pair = sample_pair(fourier3, trajectory(system, [1.0], 20))
    decomposition = decompose(analytic_section(system, fourier3), pair.F)

    assert decomposition.defective
    assert decomposition.notice == FAILURE_NOTICE
    assert np.allclose(decomposition.eigenvalues, 0.0)
    with pytest.raises(SolverError) as excinfo:
        reconstruct(pair.F, decomposition)
    assert excinfo.value.code == "DEFECTIVE"
    assert excinfo.value.exit_code == 4


def test_section_residual_vanishes_only_for_invariant_spans(fourier3: Dictionary) -> None:
    rotation = make_system("rotation", omega=0.9)
    pair = sample_pair(fourier3, trajectory(rotation, [0.0], 80))
    section = empirical_section(pair)
    assert section_error_residual(pair.F, pair.Fprime, section, [0, 0, 1]).norm < 1e-10

    doubling = make_system("doubling")
    pair = sample_pair(fourier3, trajectory(doubling, [1.0], 80))
    section = empirical_section(pair)
    assert section_error_residual(pair.F, pair.Fprime, section, [1, 0, 0]).norm < 1e-8
    assert section_error_residual(pair.F, pair.Fprime, section, [0, 0, 1]).norm > 0.5


def test_log_log_slope_fits_power_law() -> None:
    assert log_log_slope([10, 100, 1000], [1e-1, 1e-2, 1e-3]) == pytest.approx(-1.0)
    assert log_log_slope([10, 100, 1000], [1e-1, 0.0, 0.0]) is None


def test_rotation_convergence_has_unit_rate(rotation: MapSystem, fourier3: Dictionary) -> None:
    table = convergence_study(rotation, fourier3, [100, 1000, 10000], x0=[0.0])

    assert table.reference == "analytic"
    assert table.estimator == "time_average"
    assert table.errors[0] > table.errors[1] > table.errors[2]
    assert table.slope is not None
    assert -1.2 <= table.slope <= -0.8


def test_identity_convergence_is_exact() -> None:
    table = convergence_study(make_system("identity"), fourier_dictionary([1]), [10, 20, 40])
    assert all(error <= 1e-12 for error in table.errors)
    assert table.slope is None


def test_convergence_study_parallel_matches_serial(
    rotation: MapSystem, fourier3: Dictionary
) -> None:
    serial = convergence_study(rotation, fourier3, [50, 100, 200])
    parallel = convergence_study(rotation, fourier3, [50, 100, 200], max_workers=3)
    assert serial.errors == parallel.errors


def test_convergence_study_needs_three_sizes(rotation: MapSystem, fourier3: Dictionary) -> None:
    with pytest.raises(InputError):
        convergence_study(rotation, fourier3, [100, 1000])


@pytest.mark.slow
def test_doubling_convergence_has_half_rate(fourier3: Dictionary) -> None:
    table = convergence_study(make_system("doubling"), fourier3, [1000, 10000, 100000])
    assert table.reference == "analytic"
    assert table.slope is not None
    assert -0.7 <= table.slope <= -0.3
