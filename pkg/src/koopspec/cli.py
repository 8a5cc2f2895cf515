"""Command-line surface: ``koopspec <command> [options]``.

Every analysis command writes one JSON result plus a ``<output>.config.json``
sidecar that re-runs it through ``--config``. Library errors become exit
codes 2 (input), 3 (rank) and 4 (solver); anything unexpected exits 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError

from .constants import (
    DEFAULT_MU,
    DEFAULT_STEPS,
    DOUBLING_SLOPE_WINDOW,
    MIN_DECAY_SLOPE,
    ROTATION_SLOPE_WINDOW,
    SVD_RANK_TOL,
    ZERO_ERROR_FLOOR,
)
from .dynamics import (
    MapSystem,
    Trajectory,
    default_initial_state,
    generic_initial_state,
    make_system,
    trajectory,
)
from .errors import InputError, KoopError
from .finite_section import (
    analytic_section,
    convergence_study,
    decompose,
    empirical_section,
    log_log_slope,
)
from .get_logger import get_logger
from .gla import gla_modes
from .krylov import (
    circulant_check,
    fit_companion,
    pseudospectral_bounds,
    residual_decay_study,
)
from .models import (
    CompanionResult,
    ComplexValue,
    ConvergenceResult,
    ConvergenceRow,
    GlaComponentResult,
    GlaResult,
    RunConfig,
    SpectrumResult,
    WeakEntryResult,
    WeakResult,
    finite_or_none,
)
from .observables import (
    DataMatrixPair,
    krylov_samples,
    parse_dictionary,
    parse_observable,
    sample_pair,
    sample_pair_on_points,
)
from .persistence import (
    read_data_matrix_csv,
    read_json,
    read_trajectory_csv,
    write_data_matrix_csv,
    write_json_atomic,
    write_plot_data,
    write_table_csv,
    write_trajectory_csv,
)
from .reproduce import CASES, match_worked_example, run_cases
from .settings import VALID_LOG_LEVELS, Settings, get_settings
from .svd_dmd import similarity_check, svd_dmd
from .weak_eig import weak_functional

COMMANDS: tuple[str, ...] = ("generate", "edmd", "svd", "hankel", "gla", "weak", "convergence")
LOG_LEVELS: tuple[str, ...] = tuple(VALID_LOG_LEVELS)


def _floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(float(part)) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated integers, got '{text}'"
        ) from exc


def _complexes(text: str) -> list[complex]:
    try:
        return [complex(part.replace(" ", "")) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated complex literals such as 0.5+0.2j, got '{text}'"
        ) from exc


def _window(text: str) -> tuple[float, float]:
    values = _floats(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got '{text}'")
    return values[0], values[1]


def _add_shared_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--system",
        default="rotation",
        help="rotation, identity, doubling, torus_rotation or rotation_contraction.",
    )
    parser.add_argument("--omega", type=float, default=None, help="Rotation angle per step.")
    parser.add_argument("--mu", type=float, default=None, help="Contraction factor, |mu| < 1.")
    parser.add_argument(
        "--frequencies", type=_floats, default=None, help="Torus frequencies, e.g. 0.1,0.2."
    )
    parser.add_argument("--x0", type=_floats, default=None, help="Initial state, e.g. 0 or 0,1.")
    parser.add_argument(
        "--steps",
        type=int,
        default=DEFAULT_STEPS,
        help=f"Trajectory length in points (default: {DEFAULT_STEPS}).",
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="Seed for a generic x0 when --x0 is omitted."
    )
    parser.add_argument(
        "--trajectory", type=Path, default=None, help="Read the trajectory from this CSV file."
    )
    parser.add_argument(
        "--points",
        type=Path,
        default=None,
        help="Point-cloud CSV (trajectory layout); pairs use each point and its image.",
    )
    parser.add_argument(
        "--data", type=Path, default=None, help="Data-matrix CSV of F, with --data-shifted."
    )
    parser.add_argument(
        "--data-shifted", type=Path, default=None, help="Data-matrix CSV of F' = F(T x)."
    )
    parser.add_argument("--dict", dest="dictionary", default=None, help="e.g. fourier:1,2,3.")
    parser.add_argument("--observable", default=None, help="e.g. fourier:1+fourier:2.")
    parser.add_argument("--output", type=Path, default=None, help="Result file path.")
    parser.add_argument(
        "--config", type=Path, default=None, help="Re-run a saved <output>.config.json."
    )
    parser.add_argument(
        "--emit-plot-data",
        action="store_true",
        help="Also write gnuplot-compatible two-column data files.",
    )
    parser.add_argument("--force", action="store_true", help="Fit collinear Krylov data anyway.")
    parser.add_argument(
        "--analytic", action="store_true", help="Use the closed-form section of the system."
    )
    parser.add_argument(
        "--allow-decaying",
        action="store_true",
        help="Permit GLA eigenvalues inside the unit disc.",
    )
    parser.add_argument("--rank-tol", type=float, default=None, help="Relative SVD cut-off.")
    parser.add_argument("--lambdas", type=_complexes, default=None, help="e.g. 1,0.6+0.8j.")
    parser.add_argument(
        "--lambda-angles",
        type=_floats,
        default=None,
        help="Unit-circle eigenvalues given by their arguments in radians.",
    )
    parser.add_argument("--k-schedule", type=_ints, default=None, help="e.g. 100,1000,10000.")
    parser.add_argument("--schedule", type=_ints, default=None, help="Study sizes (m or N).")
    parser.add_argument("--delays", type=int, default=None, help="Krylov depth N.")
    parser.add_argument("--method", choices=["edmd", "hankel"], default="edmd")
    parser.add_argument(
        "--estimator",
        choices=["time_average", "pseudoinverse"],
        default=None,
        help="Section estimator for EDMD convergence studies.",
    )
    parser.add_argument("--slope-window", type=_window, default=None, help="Accepted slope lo,hi.")
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        default=None,
        help="Overrides KOOPSPEC_LOG_LEVEL for this run.",
    )


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="koopspec", description="Spectral analysis of Koopman operators from trajectory data."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        _add_shared_arguments(subparsers.add_parser(command))
    reproduce = subparsers.add_parser("reproduce", help="Run the built-in worked examples.")
    reproduce.add_argument("--output", type=Path, required=True, help="Report JSON path.")
    reproduce.add_argument(
        "--case",
        dest="cases",
        action="append",
        choices=[case.case_id for case in CASES],
        default=None,
        help="Run only this case (repeatable).",
    )
    reproduce.add_argument(
        "--fail-under-pass-rate",
        type=float,
        default=1.0,
        help="Exit 1 if the pass rate falls below this threshold (0-1).",
    )
    reproduce.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=None)
    return parser.parse_args(argv)


def _validation_details(exc: ValidationError) -> dict[str, Any]:
    return {
        "errors": [
            {"loc": [str(part) for part in error["loc"]], "msg": error["msg"]}
            for error in exc.errors()
        ]
    }


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """Assemble a RunConfig from flags, or load it from ``--config``."""

    try:
        if args.config is not None:
            config = RunConfig.model_validate(read_json(args.config))
            if config.command != args.command:
                raise InputError(
                    f"config was saved for '{config.command}', not '{args.command}'",
                    details={"config": str(args.config)},
                )
            if args.output is not None:
                config = config.model_copy(update={"output": args.output})
            return config

        if args.output is None:
            raise InputError("--output is required unless --config is given")
        lambdas = list(args.lambdas or [])
        lambdas.extend(complex(np.exp(1j * angle)) for angle in args.lambda_angles or [])
        mu = args.mu
        if args.system == "rotation_contraction" and mu is None:
            mu = DEFAULT_MU
        if (args.data is None) != (args.data_shifted is None):
            raise InputError("--data and --data-shifted must be given together")
        data = None if args.data is None else (args.data, args.data_shifted)
        return RunConfig.model_validate(
            {
                "command": args.command,
                "system": {
                    "name": args.system,
                    "omega": args.omega,
                    "mu": mu,
                    "frequencies": args.frequencies,
                },
                "dictionary": args.dictionary,
                "observable": args.observable,
                "trajectory": {
                    "x0": args.x0,
                    "steps": args.steps,
                    "seed": args.seed,
                    "source": args.trajectory,
                    "points": args.points,
                    "data": data,
                },
                "method": {
                    "delays": args.delays,
                    "rank_tol": args.rank_tol,
                    "lambdas": [ComplexValue.of(value) for value in lambdas],
                    "schedule": args.schedule or [],
                    "k_schedule": args.k_schedule or [],
                    "analytic": args.analytic,
                    "force": args.force,
                    "allow_decaying": args.allow_decaying,
                    "method": args.method,
                    "estimator": args.estimator,
                    "slope_window": args.slope_window,
                },
                "output": args.output,
                "emit_plot_data": args.emit_plot_data,
            }
        )
    except ValidationError as exc:
        raise InputError("invalid run configuration", details=_validation_details(exc)) from exc


@dataclass(frozen=True, slots=True)
class RunContext:
    config: RunConfig
    system: MapSystem
    seed: int | None
    output: Path
    max_workers: int

    @property
    def plot_requested(self) -> bool:
        return self.config.emit_plot_data

    def sibling(self, suffix: str) -> Path:
        return self.output.with_name(f"{self.output.stem}{suffix}")

    def base_fields(self) -> dict[str, Any]:
        return {
            "command": self.config.command,
            "worked_example": match_worked_example(self.config),
            "seed": self.seed,
        }

    def initial_state(self) -> np.ndarray:
        if self.config.trajectory.x0 is not None:
            return np.asarray(self.config.trajectory.x0, dtype=float)
        if self.seed is not None:
            return generic_initial_state(self.system, self.seed)
        return default_initial_state(self.system)

    def trajectory(self) -> Trajectory:
        source = self.config.trajectory.source
        if source is not None:
            points = self.system.validate_state(read_trajectory_csv(source))
            return Trajectory(points=points, system=self.system, x0=points[0], seed=self.seed)
        return trajectory(
            self.system, self.initial_state(), self.config.trajectory.steps, seed=self.seed
        )

    def sample_pair(self) -> DataMatrixPair:
        """Pair from data-matrix CSVs, a point cloud or the run's trajectory."""

        spec = self.config.trajectory
        if spec.data is not None:
            labels, F = read_data_matrix_csv(spec.data[0])
            shifted_labels, Fprime = read_data_matrix_csv(spec.data[1])
            if labels != shifted_labels:
                raise InputError(
                    "data-matrix CSVs carry different column labels",
                    details={"F": labels, "Fprime": shifted_labels},
                )
            if self.config.dictionary:
                expected = parse_dictionary(self.config.dictionary, self.system).labels
                if labels != expected:
                    raise InputError(
                        "data-matrix labels do not match the dictionary",
                        details={"labels": labels, "dictionary": expected},
                    )
            return DataMatrixPair(
                F=F,
                Fprime=Fprime,
                labels=tuple(labels),
                meta={
                    "system": self.system.to_spec(),
                    "dictionary": self.config.dictionary or "",
                    "source": "data",
                },
            )
        dictionary = parse_dictionary(self.config.dictionary or "", self.system)
        if spec.points is not None:
            return sample_pair_on_points(dictionary, self.system, read_trajectory_csv(spec.points))
        return sample_pair(dictionary, self.trajectory())



def _write_result(context: RunContext, result: BaseModel) -> None:
    write_json_atomic(context.output, result.model_dump(mode="json", by_alias=True))


def _eigenvalue_plot(context: RunContext, values: np.ndarray) -> None:
    if context.plot_requested:
        write_plot_data(context.sibling(".eigenvalues.dat"), values.real, values.imag)


def cmd_generate(context: RunContext) -> int:
    path = context.trajectory()
    write_trajectory_csv(context.output, path.points)
    if context.config.dictionary:
        pair = sample_pair(parse_dictionary(context.config.dictionary, context.system), path)
        write_data_matrix_csv(context.sibling(".F.csv"), pair.F, pair.labels)
        write_data_matrix_csv(context.sibling(".Fprime.csv"), pair.Fprime, pair.labels)
    if context.plot_requested:
        steps = np.arange(path.length, dtype=float)
        write_plot_data(context.sibling(".dat"), steps, path.points[:, 0])
    return 0


def cmd_edmd(context: RunContext) -> int:
    config = context.config
    pair = context.sample_pair()
    if config.method.analytic:
        dictionary = parse_dictionary(config.dictionary or "", context.system)
        section = analytic_section(context.system, dictionary)
        decomposition = decompose(section, pair.F)
    else:
        section = empirical_section(pair)
        decomposition = decompose(section, pair.F, pair.Fprime)
    modes = decomposition.modes
    residuals = decomposition.residual_norms
    result = SpectrumResult(
        **context.base_fields(),
        notice=decomposition.notice,
        construction="analytic" if config.method.analytic else "empirical",
        eigenvalues=ComplexValue.many(decomposition.eigenvalues),
        modes=None if modes is None else [ComplexValue.many(row) for row in modes],
        residual_norms=None if residuals is None else [float(value) for value in residuals],
        m=section.sample_count,
        N=section.N,
        truncated=section.truncated,
        condition_A=finite_or_none(decomposition.condition_A),
    )
    _write_result(context, result)
    _eigenvalue_plot(context, decomposition.eigenvalues)
    return 0


def cmd_svd(context: RunContext) -> int:
    config = context.config
    rank_tol = config.method.rank_tol or SVD_RANK_TOL
    pair = context.sample_pair()
    reduced = svd_dmd(pair, rank_tol)
    report = similarity_check(pair, rank_tol)
    notice = None
    if report.status == "truncated":
        notice = "truncated SVD: the spectrum need not match the full finite section"
    result = SpectrumResult(
        **context.base_fields(),
        notice=notice,
        construction="svd",
        eigenvalues=ComplexValue.many(reduced.eigenvalues),
        m=pair.m,
        N=pair.N,
        rank=reduced.rank,
        truncated=reduced.truncated,
        dropped_singular_values=[float(value) for value in reduced.dropped_singular_values],
        condition_A=finite_or_none(reduced.eigen.condition),
        similarity_distance=report.distance,
    )
    _write_result(context, result)
    _eigenvalue_plot(context, reduced.eigenvalues)
    return 0


def cmd_hankel(context: RunContext) -> int:
    config = context.config
    N = config.method.delays
    if N is None:
        raise InputError("hankel needs --delays N")
    observable = parse_observable(config.observable or "", context.system)
    path = context.trajectory()
    rows = path.length - N
    if rows < N:
        raise InputError(
            f"trajectory of {path.length} points is too short for N={N}",
            details={"length": path.length, "N": N},
        )
    model = fit_companion(
        krylov_samples(observable(path.points), rows, N), force=config.method.force
    )
    result = CompanionResult(
        **context.base_fields(),
        c=ComplexValue.many(model.c),
        eigenvalues=ComplexValue.many(model.eigenvalues),
        residual_norm=model.residual_norm,
        pseudo_eps=pseudospectral_bounds(model),
        N=model.N,
        m=model.m,
        circulant=circulant_check(model),
        gram_condition=finite_or_none(model.gram_condition),
        rank=model.rank,
    )
    _write_result(context, result)
    _eigenvalue_plot(context, model.eigenvalues)
    return 0


def _lambdas(config: RunConfig) -> list[complex]:
    values = [value.to_complex() for value in config.method.lambdas]
    if not values:
        raise InputError(f"'{config.command}' needs --lambdas or --lambda-angles")
    return values


def cmd_gla(context: RunContext) -> int:
    config = context.config
    path = context.trajectory()
    if config.dictionary:
        field = parse_dictionary(config.dictionary, context.system).evaluate(path.points)
    elif config.observable:
        field = parse_observable(config.observable, context.system)(path.points)
    else:
        raise InputError("gla needs --dict or --observable for the sampled field")
    analysis = gla_modes(
        field, _lambdas(config), path.length, allow_decaying=config.method.allow_decaying
    )
    result = GlaResult(
        **context.base_fields(),
        n=analysis.n,
        components=[
            GlaComponentResult(
                lambda_=ComplexValue.of(component.eigenvalue),
                mode=ComplexValue.many(component.mode),
                eigenfunction_value=ComplexValue.of(component.eigenfunction_value),
                tail=component.tail,
            )
            for component in analysis.components
        ],
    )
    _write_result(context, result)
    return 0


def cmd_weak(context: RunContext) -> int:
    config = context.config
    path = context.trajectory()
    h_set = parse_dictionary(config.dictionary or "", context.system)
    schedule = config.method.k_schedule or [path.length - 1]
    functional, report = weak_functional(path, _lambdas(config)[0], h_set, schedule)
    entries = [
        WeakEntryResult(h=label, K=K, value=ComplexValue.of(functional.values[row, column]))
        for row, K in enumerate(functional.K_schedule)
        for column, label in enumerate(functional.labels)
    ]
    result = WeakResult(
        **context.base_fields(),
        lambda_=ComplexValue.of(functional.lambda_),
        L=entries,
        defect=report.defect,
        defect_bound=report.defect_bound,
        gla_crosscheck=report.gla_crosscheck,
    )
    _write_result(context, result)
    if context.plot_requested:
        write_plot_data(
            context.sibling(".defect.dat"), list(functional.K_schedule), list(report.defects)
        )
    return 0


def _default_window(system_name: str) -> tuple[float, float] | None:
    if system_name == "rotation":
        return ROTATION_SLOPE_WINDOW
    if system_name == "doubling":
        return DOUBLING_SLOPE_WINDOW
    return None


def convergence_verdict(
    errors: Sequence[float],
    slope: float | None,
    window: tuple[float, float] | None,
) -> tuple[bool, str]:
    """(passed, status) for an error curve.

    Curves that sit at the zero floor throughout are exact and not applicable.
    Without a slope window the curve must fall at a log-log slope of at most
    MIN_DECAY_SLOPE and end below where it started.
    """

    if all(error <= ZERO_ERROR_FLOOR for error in errors):
        return True, "not_applicable"
    if slope is None:
        passed = errors[-1] <= ZERO_ERROR_FLOOR
        return passed, "not_applicable" if passed else "failed"
    if window is not None:
        passed = window[0] <= slope <= window[1]
    else:
        passed = slope <= MIN_DECAY_SLOPE and errors[-1] < errors[0]
    return passed, "ok" if passed else "failed"


def cmd_convergence(context: RunContext) -> int:
    config = context.config
    schedule = config.method.schedule
    if not schedule:
        raise InputError("convergence needs --schedule")
    monotone: float | None = None
    if config.method.method == "edmd":
        if not config.dictionary:
            raise InputError("an EDMD convergence study needs --dict")
        table = convergence_study(
            context.system,
            parse_dictionary(config.dictionary, context.system),
            schedule,
            x0=context.initial_state(),
            estimator=config.method.estimator,
            max_workers=context.max_workers,
        )
        sizes, errors, slope = table.sizes, table.errors, table.slope
        window = config.method.slope_window or _default_window(config.system.name)
    else:
        if not config.observable:
            raise InputError("a Krylov residual study needs --observable")
        decay = residual_decay_study(
            context.system,
            parse_observable(config.observable, context.system),
            schedule,
            config.trajectory.steps,
            x0=context.initial_state(),
            max_workers=context.max_workers,
        )
        sizes, errors = decay.sizes, decay.residual_norms
        slope = log_log_slope(sizes, errors)
        monotone = decay.monotone_fraction
        window = config.method.slope_window

    passed, status = convergence_verdict(errors, slope, window)

    result = ConvergenceResult(
        **context.base_fields(),
        method=config.method.method,
        rows=[ConvergenceRow(size=size, error=error) for size, error in zip(sizes, errors)],
        slope=slope,
        slope_window=window,
        passed=passed,
        monotone_fraction=monotone,
        status=status,
    )
    _write_result(context, result)
    write_table_csv(context.sibling(".study.csv"), ["size", "error"], list(zip(sizes, errors)))
    if context.plot_requested:
        write_plot_data(context.sibling(".dat"), sizes, errors)
    return 0


HANDLERS: dict[str, Callable[[RunContext], int]] = {
    "generate": cmd_generate,
    "edmd": cmd_edmd,
    "svd": cmd_svd,
    "hankel": cmd_hankel,
    "gla": cmd_gla,
    "weak": cmd_weak,
    "convergence": cmd_convergence,
}


def sidecar_path(output: Path) -> Path:
    return output.with_name(f"{output.name}.config.json")


def run(config: RunConfig, settings: Settings) -> int:
    """Execute one command and write its sidecar config."""

    seed = settings.seed if settings.seed is not None else config.trajectory.seed
    config = config.model_copy(
        update={"trajectory": config.trajectory.model_copy(update={"seed": seed})}
    )
    system = make_system(config.system.name, config.system.params())
    output = settings.resolve_output(config.output)
    context = RunContext(
        config=config,
        system=system,
        seed=seed,
        output=output,
        max_workers=settings.max_workers,
    )
    code = HANDLERS[config.command](context)
    write_json_atomic(sidecar_path(output), config.model_dump(mode="json"))
    return code


def _reproduce(args: argparse.Namespace, settings: Settings) -> int:
    report = run_cases(args.cases)
    passed = report.metrics.pass_rate >= args.fail_under_pass_rate
    write_json_atomic(
        settings.resolve_output(args.output),
        {
            "report": report.to_dict(),
            "thresholds": {"fail_under_pass_rate": args.fail_under_pass_rate},
            "status": "ok" if passed else "failed",
        },
    )
    return 0 if passed else 1


def main(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    logger = get_logger("koopspec.cli", level=args.log_level)
    try:
        settings = get_settings()
        if args.log_level is None:
            logger = get_logger("koopspec.cli", level=settings.log_level)
        if args.command == "reproduce":
            return _reproduce(args, settings)
        return run(build_run_config(args), settings)
    except ValidationError as exc:
        error = InputError("invalid environment settings", details=_validation_details(exc))
        print(json.dumps(error.to_payload().model_dump(), default=str), file=sys.stderr)
        return error.exit_code
    except KoopError as exc:
        payload = exc.to_payload()
        logger.debug("cli.error", extra={"extra_payload": payload.model_dump()})
        print(json.dumps(payload.model_dump(), default=str, sort_keys=True), file=sys.stderr)
        return exc.exit_code
    except Exception:  # noqa: BLE001 - mapped to exit code 1
        logger.exception("cli.unexpected_error")
        return 1


__all__ = ["COMMANDS", "HANDLERS", "RunContext", "build_run_config", "main", "parse_args", "run"]
