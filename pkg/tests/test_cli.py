from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from koopspec.cli import main, parse_args
from koopspec.constants import DEFAULT_OMEGA
from koopspec.finite_section import FAILURE_NOTICE
from koopspec.persistence import read_trajectory_csv, write_trajectory_csv

pytestmark = pytest.mark.contract


def _load(path: Path) -> dict[str, Any]:
    return json.loads(path.read_text(encoding="utf-8"))


def _eigenvalues(payload: dict[str, Any]) -> np.ndarray:
    return np.array([complex(value["re"], value["im"]) for value in payload["eigenvalues"]])


def _stderr_payload(capsys: pytest.CaptureFixture[str]) -> dict[str, Any]:
    lines = [line for line in capsys.readouterr().err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


def test_generate_writes_trajectory_and_sidecar(tmp_path: Path) -> None:
    output = tmp_path / "traj.csv"
    code = main(
        [
            "generate",
            "--system",
            "rotation",
            "--omega",
            "0.5",
            "--steps",
            "5",
            "--output",
            str(output),
        ]
    )

    assert code == 0
    points = read_trajectory_csv(output)
    assert points.shape == (5, 1)
    assert np.allclose(points[:, 0], 0.5 * np.arange(5))
    sidecar = _load(tmp_path / "traj.csv.config.json")
    assert sidecar["command"] == "generate"
    assert sidecar["trajectory"]["steps"] == 5


def test_edmd_rotation_reports_exact_spectrum(tmp_path: Path) -> None:
    output = tmp_path / "edmd.json"
    code = main(
        ["edmd", "--dict", "fourier:1,2,3", "--output", str(output), "--emit-plot-data"]
    )

    assert code == 0
    payload = _load(output)
    expected = np.exp(1j * DEFAULT_OMEGA * np.arange(1, 4))
    assert payload["worked_example"] == "rotation_exactness"
    assert payload["construction"] == "empirical"
    assert payload["m"] == 499 and payload["N"] == 3
    assert np.allclose(np.sort_complex(_eigenvalues(payload)), np.sort_complex(expected))
    assert payload["notice"] is None
    assert (tmp_path / "edmd.eigenvalues.dat").exists()


def test_edmd_doubling_analytic_reports_failure(tmp_path: Path) -> None:
    output = tmp_path / "doubling.json"
    code = main(
        [
            "edmd",
            "--system",
            "doubling",
            "--dict",
            "fourier:1,2,3",
            "--analytic",
            "--output",
            str(output),
        ]
    )

    assert code == 0
    payload = _load(output)
    assert payload["notice"] == FAILURE_NOTICE
    assert payload["modes"] is None
    assert "residual_norms" in payload and payload["residual_norms"] is None
    assert np.allclose(_eigenvalues(payload), 0.0)
    assert payload["worked_example"] == "finite_section_failure"


def test_svd_matches_section(tmp_path: Path) -> None:
    output = tmp_path / "svd.json"
    assert main(["svd", "--dict", "fourier:1,2,3", "--output", str(output)]) == 0

    payload = _load(output)
    assert payload["construction"] == "svd"
    assert payload["rank"] == 3
    assert payload["similarity_distance"] < 1e-9


def test_generated_data_matrices_feed_edmd(tmp_path: Path) -> None:
    trajectory_csv = tmp_path / "traj.csv"
    assert main(["generate", "--dict", "fourier:1,2,3", "--output", str(trajectory_csv)]) == 0
    F_csv, Fprime_csv = tmp_path / "traj.F.csv", tmp_path / "traj.Fprime.csv"
    assert F_csv.read_text(encoding="utf-8").startswith("row,fourier[1]_re,fourier[1]_im,")

    output = tmp_path / "edmd.json"
    argv = ["edmd", "--data", str(F_csv), "--data-shifted", str(Fprime_csv)]
    assert main([*argv, "--output", str(output)]) == 0

    payload = _load(output)
    expected = np.exp(1j * DEFAULT_OMEGA * np.arange(1, 4))
    assert payload["m"] == 499 and payload["N"] == 3
    assert np.allclose(np.sort_complex(_eigenvalues(payload)), np.sort_complex(expected))
    assert _load(tmp_path / "edmd.json.config.json")["trajectory"]["data"] == [
        str(F_csv),
        str(Fprime_csv),
    ]


def test_data_matrices_must_match_dictionary(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    trajectory_csv = tmp_path / "traj.csv"
    assert main(["generate", "--dict", "fourier:1,2,3", "--output", str(trajectory_csv)]) == 0
    argv = [
        "edmd",
        "--dict",
        "fourier:1,2",
        "--data",
        str(tmp_path / "traj.F.csv"),
        "--data-shifted",
        str(tmp_path / "traj.Fprime.csv"),
        "--output",
        str(tmp_path / "edmd.json"),
    ]

    assert main(argv) == 2
    assert _stderr_payload(capsys)["code"] == "INVALID_INPUT"
    assert not (tmp_path / "edmd.json").exists()


def test_edmd_on_point_cloud(tmp_path: Path) -> None:
    points_csv = tmp_path / "cloud.csv"
    rng = np.random.default_rng(11)
    write_trajectory_csv(points_csv, rng.uniform(0.0, 2.0 * np.pi, size=(40, 1)))
    output = tmp_path / "cloud.json"
    argv = ["edmd", "--omega", "0.7", "--dict", "fourier:1,2,3", "--points", str(points_csv)]

    assert main([*argv, "--output", str(output)]) == 0
    payload = _load(output)
    expected = np.exp(0.7j * np.arange(1, 4))
    assert payload["m"] == 40
    assert np.allclose(np.sort_complex(_eigenvalues(payload)), np.sort_complex(expected))


@pytest.mark.parametrize(
    "extra",
    [
        ["--data", "F.csv"],
        ["--points", "cloud.csv", "--trajectory", "traj.csv"],
    ],
)
def test_sample_sources_are_validated(
    extra: list[str], tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    argv = ["edmd", "--dict", "fourier:1", "--output", str(tmp_path / "o.json"), *extra]
    assert main(argv) == 2
    assert _stderr_payload(capsys)["code"] == "INVALID_INPUT"


def test_point_cloud_is_rejected_for_trajectory_commands(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    argv = ["hankel", "--observable", "fourier:1", "--delays", "2", "--points", "cloud.csv"]
    assert main([*argv, "--output", str(tmp_path / "o.json")]) == 2
    assert _stderr_payload(capsys)["code"] == "INVALID_INPUT"


def test_hankel_two_frequency_closed_form(tmp_path: Path) -> None:
    output = tmp_path / "hankel.json"
    code = main(
        ["hankel", "--observable", "fourier:1+fourier:2", "--delays", "2", "--output", str(output)]
    )

    assert code == 0
    payload = _load(output)
    w = DEFAULT_OMEGA
    c = np.array([complex(value["re"], value["im"]) for value in payload["c"]])
    assert np.allclose(c, [-np.exp(3j * w), np.exp(1j * w) + np.exp(2j * w)], atol=1e-9)
    assert payload["residual_norm"] == 0.0
    assert payload["circulant"] is False
    assert payload["worked_example"] == "companion_closed_form"


def test_gla_recovers_components(tmp_path: Path) -> None:
    output = tmp_path / "gla.json"
    w = DEFAULT_OMEGA
    code = main(
        [
            "gla",
            "--observable",
            "fourier:1+fourier:2",
            "--lambda-angles",
            f"{w!r},{2 * w!r}",
            "--steps",
            "4000",
            "--output",
            str(output),
        ]
    )

    assert code == 0
    payload = _load(output)
    assert payload["n"] == 4000
    assert len(payload["components"]) == 2
    first = payload["components"][0]
    assert complex(first["lambda"]["re"], first["lambda"]["im"]) == pytest.approx(np.exp(1j * w))
    value = complex(first["eigenfunction_value"]["re"], first["eigenfunction_value"]["im"])
    assert value == pytest.approx(1.0, abs=1e-3)


def test_weak_reports_defect_within_bound(tmp_path: Path) -> None:
    output = tmp_path / "weak.json"
    code = main(
        [
            "weak",
            "--dict",
            "fourier:-1,1",
            "--lambda-angles",
            repr(DEFAULT_OMEGA),
            "--k-schedule",
            "100,400",
            "--steps",
            "401",
            "--output",
            str(output),
            "--emit-plot-data",
        ]
    )

    assert code == 0
    payload = _load(output)
    assert payload["defect"] <= payload["defect_bound"] * (1.0 + 1e-9)
    assert {entry["K"] for entry in payload["L"]} == {100, 400}
    assert (tmp_path / "weak.defect.dat").exists()


def test_convergence_rotation_passes_default_window(tmp_path: Path) -> None:
    output = tmp_path / "conv.json"
    code = main(
        [
            "convergence",
            "--dict",
            "fourier:1,2,3",
            "--schedule",
            "100,1000,10000",
            "--output",
            str(output),
        ]
    )

    assert code == 0
    payload = _load(output)
    assert payload["status"] == "ok"
    assert payload["passed"] is True
    assert [row["size"] for row in payload["rows"]] == [100, 1000, 10000]
    study = (tmp_path / "conv.study.csv").read_text(encoding="utf-8").splitlines()
    assert study[0] == "size,error"
    assert len(study) == 4


def test_convergence_identity_is_not_applicable(tmp_path: Path) -> None:
    output = tmp_path / "identity.json"
    code = main(
        [
            "convergence",
            "--system",
            "identity",
            "--dict",
            "fourier:1",
            "--schedule",
            "10,20,40",
            "--output",
            str(output),
        ]
    )

    assert code == 0
    payload = _load(output)
    assert payload["status"] == "not_applicable"
    assert payload["slope"] is None
    assert payload["passed"] is True


def test_convergence_flat_curve_without_window_fails(tmp_path: Path) -> None:
    output = tmp_path / "identity.json"
    code = main(
        [
            "convergence",
            "--system",
            "identity",
            "--dict",
            "fourier:1,2,3",
            "--schedule",
            "10,20,40",
            "--output",
            str(output),
        ]
    )

    assert code == 0
    payload = _load(output)
    assert payload["slope_window"] is None
    assert payload["status"] == "failed"
    assert payload["passed"] is False


def test_hankel_convergence_needs_three_sizes(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    output = tmp_path / "decay.json"
    code = main(
        [
            "convergence",
            "--method",
            "hankel",
            "--observable",
            "fourier:1",
            "--schedule",
            "4,8",
            "--output",
            str(output),
        ]
    )

    assert code == 2
    assert _stderr_payload(capsys)["code"] == "INVALID_INPUT"
    assert not output.exists()


def test_hankel_convergence_reports_decay(tmp_path: Path) -> None:
    output = tmp_path / "decay.json"
    code = main(
        [
            "convergence",
            "--method",
            "hankel",
            "--observable",
            "geometric:0.5",
            "--schedule",
            "4,8,16,32,64",
            "--steps",
            "400",
            "--output",
            str(output),
        ]
    )

    assert code == 0
    payload = _load(output)
    errors = [row["error"] for row in payload["rows"]]
    assert errors[0] > 0.0
    assert errors[-1] <= 0.2 * errors[0]
    assert payload["status"] == "ok"
    assert payload["monotone_fraction"] is not None
    assert payload["worked_example"] == "residual_decay"


def test_rank_deficient_data_exits_3(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(
        [
            "edmd",
            "--system",
            "identity",
            "--x0",
            "0",
            "--dict",
            "fourier:1,2",
            "--output",
            str(tmp_path / "rank.json"),
        ]
    )

    assert code == 3
    payload = _stderr_payload(capsys)
    assert payload["code"] == "RANK_DEFICIENT"
    assert payload["details"]["index"] == 1
    assert not (tmp_path / "rank.json").exists()


def test_collinear_krylov_exits_3(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    output = str(tmp_path / "k.json")
    argv = ["hankel", "--observable", "fourier:1", "--delays", "3", "--output", output]
    code = main(argv)
    assert code == 3
    assert _stderr_payload(capsys)["code"] == "COLLINEAR_KRYLOV"

    assert main([*argv, "--force"]) == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["edmd", "--dict", "fourier:1"],
        ["edmd", "--system", "rotation_contraction", "--mu", "1.5", "--dict", "fourier:1"]
        + ["--output", "o.json"],
        ["edmd", "--output", "o.json"],
        ["gla", "--observable", "fourier:1", "--lambdas", "0.5", "--output", "o.json"],
    ],
)
def test_invalid_input_exits_2(
    argv: list[str], tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_config_sidecar_reproduces_run(tmp_path: Path) -> None:
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    argv = ["edmd", "--dict", "fourier:1,2", "--seed", "3", "--steps", "60", "--output"]
    assert main([*argv, str(first)]) == 0

    sidecar = tmp_path / "first.json.config.json"
    code = main(["edmd", "--config", str(sidecar), "--output", str(second)])

    assert code == 0
    assert _load(first)["eigenvalues"] == _load(second)["eigenvalues"]
    assert _load(second)["seed"] == 3


def test_config_command_must_match(tmp_path: Path) -> None:
    first = tmp_path / "first.json"
    assert main(["edmd", "--dict", "fourier:1", "--output", str(first)]) == 0
    assert main(["svd", "--config", str(tmp_path / "first.json.config.json")]) == 2


def test_environment_seed_overrides_config(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    monkeypatch.setenv("KOOP_SEED", "11")
    output = tmp_path / "seeded.json"
    assert main(["edmd", "--dict", "fourier:1", "--seed", "2", "--output", str(output)]) == 0

    assert _load(output)["seed"] == 11
    assert _load(tmp_path / "seeded.json.config.json")["trajectory"]["seed"] == 11


def test_trajectory_file_round_trips_through_edmd(tmp_path: Path) -> None:
    trajectory_file = tmp_path / "traj.csv"
    assert main(["generate", "--steps", "80", "--output", str(trajectory_file)]) == 0

    output = tmp_path / "from_file.json"
    code = main(
        [
            "edmd",
            "--dict",
            "fourier:1,2",
            "--trajectory",
            str(trajectory_file),
            "--output",
            str(output),
        ]
    )
    assert code == 0
    assert _load(output)["m"] == 79


def test_reproduce_subset_writes_report(tmp_path: Path) -> None:
    output = tmp_path / "report.json"
    code = main(["reproduce", "--case", "rotation_exactness", "--output", str(output)])

    assert code == 0
    payload = _load(output)
    assert payload["status"] == "ok"
    assert payload["report"]["metrics"]["total"] == 1


def test_log_level_is_case_insensitive() -> None:
    args = parse_args(["edmd", "--dict", "fourier:1", "--log-level", "debug"])
    assert args.log_level == "DEBUG"
