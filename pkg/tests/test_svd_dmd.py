from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from koopspec.dynamics import MapSystem, trajectory
from koopspec.errors import InputError, RankDeficiencyError
from koopspec.finite_section import empirical_section
from koopspec.numerics import eig, match_eigenvalues
from koopspec.observables import DataMatrixPair, Dictionary, sample_pair
from koopspec.svd_dmd import similarity_check, svd_dmd

from conftest import OMEGA

pytestmark = pytest.mark.unit


def _random_pair(seed: int, m: int, n: int) -> DataMatrixPair:
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    Fprime = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    return DataMatrixPair(F=F, Fprime=Fprime, labels=tuple(f"f{j}" for j in range(n)))


def test_svd_dmd_recovers_rotation_eigenvalues(rotation: MapSystem, fourier3: Dictionary) -> None:
    pair = sample_pair(fourier3, trajectory(rotation, [0.0], 40))
    result = svd_dmd(pair)

    expected = np.exp(1j * OMEGA * np.array([1, 2, 3]))
    assert result.rank == 3
    assert not result.truncated
    assert match_eigenvalues(result.eigenvalues, expected) < 1e-8


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32 - 1), n=st.integers(1, 5))
def test_reduced_operator_is_similar_to_section(seed: int, n: int) -> None:
    pair = _random_pair(seed, 3 * n + 2, n)
    report = similarity_check(pair)

    assert report.status == "ok"
    assert report.rank == n
    assert report.distance is not None and report.distance < 1e-7
    assert report.eigenvector_error is not None and report.eigenvector_error < 1e-8
    assert report.sample_error is not None and report.sample_error < 1e-8


def test_orthonormal_samples_match_section_exactly() -> None:
    rng = np.random.default_rng(5)
    q, _ = np.linalg.qr(rng.standard_normal((20, 3)) + 1j * rng.standard_normal((20, 3)))
    Fprime = rng.standard_normal((20, 3)) + 1j * rng.standard_normal((20, 3))
    pair = DataMatrixPair(F=q, Fprime=Fprime, labels=("a", "b", "c"))

    section = empirical_section(pair)
    result = svd_dmd(pair)
    assert match_eigenvalues(result.eigenvalues, eig(section.matrix).eigenvalues) < 1e-10


def test_repeated_column_is_truncated(caplog: pytest.LogCaptureFixture) -> None:
    column = np.exp(1j * np.linspace(0.0, 3.0, 12))
    F = np.column_stack([column, column])
    Fprime = np.column_stack([column * np.exp(0.5j), column])
    pair = DataMatrixPair(F=F, Fprime=Fprime, labels=("x", "y"))

    with caplog.at_level("WARNING", logger="koopspec.svd_dmd"):
        result = svd_dmd(pair)
    assert result.rank == 1
    assert result.truncated
    assert result.dropped_singular_values.size == 1
    assert "svd_dmd.truncated" in caplog.text

    g = column / np.linalg.norm(column)
    rayleigh = g.conj() @ (Fprime @ np.array([1.0, 1.0]) / 2.0) / (np.linalg.norm(column))
    assert result.eigenvalues[0] == pytest.approx(rayleigh)

    report = similarity_check(pair)
    assert report.status == "truncated"
    assert report.distance is None


def test_zero_data_is_fully_truncated() -> None:
    pair = DataMatrixPair(F=np.zeros((4, 2)), Fprime=np.ones((4, 2)), labels=("a", "b"))
    with pytest.raises(RankDeficiencyError) as excinfo:
        svd_dmd(pair)
    assert excinfo.value.code == "TRUNCATED"


def test_rank_tol_must_be_a_fraction(rotation: MapSystem, fourier3: Dictionary) -> None:
    pair = sample_pair(fourier3, trajectory(rotation, [0.0], 10))
    with pytest.raises(InputError):
        svd_dmd(pair, rank_tol=0.0)
    with pytest.raises(InputError):
        svd_dmd(pair, rank_tol=1.5)
