from __future__ import annotations

import numpy as np
import pytest

from koopspec.dynamics import make_system, trajectory
from koopspec.errors import InputError, RankDeficiencyError
from koopspec.observables import fourier_dictionary
from koopspec.weak_eig import (
    c_mp_solve,
    cyclic_permutation,
    density_error_estimate,
    periodic_orbit_check,
    regression_generator,
    regression_objective,
    weak_functional,
)

pytestmark = pytest.mark.unit

GOLDEN = 2.0 * np.pi * (np.sqrt(5.0) - 1.0) / 2.0


def test_c_mp_solve_square_system_is_exact() -> None:
    F = np.array([[2.0, 1.0], [0.0, 1j]])
    target = np.array([3.0, 2j])
    c = c_mp_solve(F, target)
    assert np.allclose(F @ c, target)


def test_c_mp_solve_overdetermined_matches_normal_equations() -> None:
    rng = np.random.default_rng(3)
    F = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    target = rng.standard_normal(6) + 1j * rng.standard_normal(6)

    c = c_mp_solve(F, target)
    normal = np.linalg.solve(F.conj().T @ F, F.conj().T @ target)
    assert np.allclose(c, normal, atol=1e-10)


def test_c_mp_solve_underdetermined_returns_minimum_norm() -> None:
    rng = np.random.default_rng(4)
    F = rng.standard_normal((2, 5))
    target = np.array([1.0, -2.0])
    c = c_mp_solve(F, target)

    null = np.linalg.svd(F)[2][-1]
    assert np.allclose(F @ c, target)
    assert np.linalg.norm(c) < np.linalg.norm(c + 0.1 * null)


def test_c_mp_solve_requires_full_rank() -> None:
    with pytest.raises(RankDeficiencyError) as excinfo:
        c_mp_solve(np.ones((3, 2)), np.ones(3))
    assert excinfo.value.details["index"] == 1
    with pytest.raises(InputError):
        c_mp_solve(np.ones((3, 2)), np.ones(2))


def test_cyclic_permutation_layout() -> None:
    P = cyclic_permutation(4)
    assert P[0, 1] == 1.0 and P[2, 3] == 1.0 and P[3, 0] == 1.0
    assert np.count_nonzero(P) == 4


def test_periodic_orbit_regression_is_the_cyclic_shift() -> None:
    system = make_system("rotation", omega=2.0 * np.pi / 8)
    dictionary = fourier_dictionary(list(range(8)))
    samples = dictionary.evaluate(trajectory(system, [0.1], 9).points)

    result = regression_generator(samples[:8], samples[1:9])
    report = periodic_orbit_check(result.C)

    assert result.unique
    assert result.max_error < 1e-10
    assert report.permutation_error < 1e-10
    assert report.spectrum_distance < 1e-10


@pytest.mark.parametrize(("p", "q"), [(3, 7), (2, 5)])
def test_rational_rotation_regression_is_the_cyclic_shift(p: int, q: int) -> None:
    system = make_system("rotation", omega=2.0 * np.pi * p / q)
    dictionary = fourier_dictionary(list(range(q)))
    samples = dictionary.evaluate(trajectory(system, [0.1], q + 1).points)

    result = regression_generator(samples[:q], samples[1 : q + 1])
    report = periodic_orbit_check(result.C)

    assert result.unique
    assert report.permutation_error < 1e-9
    assert report.spectrum_distance < 1e-9


def test_identity_regression_is_identity() -> None:
    dictionary = fourier_dictionary(list(range(-3, 4)))
    samples = dictionary.evaluate(np.linspace(0.0, 5.0, 5)[:, None])
    result = regression_generator(samples, samples)
    assert np.allclose(result.C, np.eye(5), atol=1e-10)
    assert np.allclose(result.B, result.C.T)


def test_regression_minimises_objective() -> None:
    system = make_system("rotation", omega=GOLDEN)
    dictionary = fourier_dictionary(list(range(-8, 8)))
    samples = dictionary.evaluate(trajectory(system, [0.0], 9).points)
    F, Fprime = samples[:8], samples[1:9]

    result = regression_generator(F, Fprime)
    best = regression_objective(F, Fprime, result.B)
    rng = np.random.default_rng(9)
    for _ in range(5):
        perturbed = result.B + 0.01 * rng.standard_normal(result.B.shape)
        assert best <= regression_objective(F, Fprime, perturbed) + 1e-12


def test_underdetermined_regression_warns(caplog: pytest.LogCaptureFixture) -> None:
    dictionary = fourier_dictionary([0, 1])
    samples = dictionary.evaluate(np.linspace(0.0, 3.0, 6)[:, None])
    with caplog.at_level("WARNING", logger="koopspec.weak_eig"):
        result = regression_generator(samples[:5], samples[1:])
    assert not result.unique
    assert result.rank == 2
    assert "weak_eig.regression_not_unique" in caplog.text


def test_density_error_shrinks_with_more_points() -> None:
    system = make_system("rotation", omega=GOLDEN)
    dictionary = fourier_dictionary(list(range(-150, 151)))
    table = density_error_estimate(system, dictionary, [16, 64, 256], x0=[0.0])

    assert table.sizes == (16, 64, 256)
    assert table.errors[-1] < table.errors[0]


def test_density_error_rejects_unsorted_schedule() -> None:
    with pytest.raises(InputError):
        density_error_estimate(make_system("identity"), fourier_dictionary([1]), [8, 4])


def test_weak_functional_on_constant_is_exact() -> None:
    path = trajectory(make_system("identity"), [0.4], 20)
    functional, report = weak_functional(path, 1.0, fourier_dictionary([0]), [5, 10, 19])

    assert functional.value("fourier[0]", 10) == pytest.approx(1.0)
    assert report.defect == pytest.approx(0.0, abs=1e-15)
    assert report.gla_crosscheck is not None and report.gla_crosscheck < 1e-12


def test_weak_functional_isolates_matching_harmonic() -> None:
    omega = 0.9
    lam = np.exp(1j * omega)
    path = trajectory(make_system("rotation", omega=omega), [0.2], 2001)
    dictionary = fourier_dictionary([-1, 1])
    functional, report = weak_functional(path, lam, dictionary, [100, 1000, 2000])

    for K in functional.K_schedule:
        bound = 2.0 / (K * abs(1.0 - np.exp(2j * omega)))
        assert abs(functional.value("fourier[-1]", K) - np.exp(-0.2j)) <= 1e-9
        assert abs(functional.value("fourier[1]", K)) <= bound + 1e-12

    for defect, bound in zip(report.defects, report.defect_bounds):
        assert defect <= bound * (1.0 + 1e-9)
    assert report.defects[-1] < report.defects[0]
    half_bound = 2.0 / (1000 * abs(1.0 - np.exp(2j * omega)))
    assert report.gla_crosscheck is not None
    assert report.gla_crosscheck <= 2.0 * half_bound + 1e-12


def test_weak_functional_validates_inputs() -> None:
    path = trajectory(make_system("rotation", omega=0.3), [0.0], 10)
    dictionary = fourier_dictionary([1])
    with pytest.raises(InputError) as excinfo:
        weak_functional(path, 0.9, dictionary, [5])
    assert excinfo.value.code == "UNIT_BAND"
    with pytest.raises(InputError):
        weak_functional(path, 1.0, dictionary, [10])
    with pytest.raises(InputError):
        weak_functional(path, 1.0, dictionary, [0])


def test_gla_crosscheck_flags_a_non_eigenvalue() -> None:
    omega = 0.9
    path = trajectory(make_system("rotation", omega=omega), [0.2], 2001)
    dictionary = fourier_dictionary([-1])
    _, matched = weak_functional(path, np.exp(1j * omega), dictionary, [2000])
    _, mismatched = weak_functional(path, np.exp(1j * (omega + 0.002)), dictionary, [2000])
    _, short = weak_functional(path, np.exp(1j * omega), dictionary, [1])

    assert matched.gla_crosscheck is not None and matched.gla_crosscheck < 1e-9
    assert mismatched.gla_crosscheck is not None and mismatched.gla_crosscheck > 0.1
    assert short.gla_crosscheck is None
