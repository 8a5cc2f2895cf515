"""CSV tables for trajectories, data matrices and plot series."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

import numpy as np
import numpy.typing as npt

from ..errors import InputError
from .atomic import write_text_atomic


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


def _render(rows: Sequence[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    return buffer.getvalue()


def _read_rows(path: Path) -> list[list[str]]:
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            return [row for row in csv.reader(handle) if row]
    except FileNotFoundError as exc:
        raise InputError(f"File not found: {path}", code="IO_FAILED") from exc
    except OSError as exc:
        raise InputError(f"Cannot read {path}: {exc}", code="IO_FAILED") from exc


def _parse_float(text: str, *, path: Path, line: int) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise InputError(
            f"{path}:{line}: '{text}' is not a number", details={"line": line}
        ) from exc
    if not np.isfinite(value):
        raise InputError(f"{path}:{line}: non-finite value", details={"line": line})
    return value


def write_trajectory_csv(path: Path, points: npt.ArrayLike) -> None:
    """Header ``k,x1,...,xd``; one row per step starting at k=0."""

    array = np.atleast_2d(np.asarray(points, dtype=float))
    header = ["k", *(f"x{index + 1}" for index in range(array.shape[1]))]
    rows = [header]
    rows.extend([str(k), *(_fmt(value) for value in point)] for k, point in enumerate(array))
    write_text_atomic(path, _render(rows))


def read_trajectory_csv(path: Path) -> npt.NDArray[np.float64]:
    rows = _read_rows(path)
    if not rows:
        raise InputError(f"{path}: empty trajectory file")
    header = rows[0]
    if len(header) < 2 or header[0] != "k" or header[1:] != [
        f"x{index + 1}" for index in range(len(header) - 1)
    ]:
        raise InputError(f"{path}: expected header k,x1,...,xd", details={"header": header})
    body = rows[1:]
    if not body:
        raise InputError(f"{path}: trajectory has no rows")
    points = np.empty((len(body), len(header) - 1))
    for offset, row in enumerate(body):
        line = offset + 2
        if len(row) != len(header):
            raise InputError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        points[offset] = [_parse_float(text, path=path, line=line) for text in row[1:]]
    return points


def write_data_matrix_csv(
    path: Path, matrix: npt.ArrayLike, labels: Sequence[str]
) -> None:
    """Header ``row,<label>_re,<label>_im,...``."""

    array = np.asarray(matrix, dtype=complex)
    if array.ndim != 2 or array.shape[1] != len(labels):
        raise InputError("Data matrix columns must match the label count")
    header = ["row"]
    for label in labels:
        header.extend([f"{label}_re", f"{label}_im"])
    rows = [header]
    for index, sample in enumerate(array):
        row = [str(index)]
        for value in sample:
            row.extend([_fmt(value.real), _fmt(value.imag)])
        rows.append(row)
    write_text_atomic(path, _render(rows))


def read_data_matrix_csv(path: Path) -> tuple[list[str], npt.NDArray[np.complex128]]:
    rows = _read_rows(path)
    if not rows:
        raise InputError(f"{path}: empty data-matrix file")
    header = rows[0]
    if header[:1] != ["row"] or len(header) < 3 or (len(header) - 1) % 2:
        raise InputError(f"{path}: expected header row,<label>_re,<label>_im,...")
    labels: list[str] = []
    for re_name, im_name in zip(header[1::2], header[2::2]):
        paired = re_name.endswith("_re") and im_name.endswith("_im")
        if not paired or re_name[:-3] != im_name[:-3]:
            raise InputError(f"{path}: mismatched column pair {re_name}/{im_name}")
        labels.append(re_name[:-3])
    body = rows[1:]
    if not body:
        raise InputError(f"{path}: data matrix has no rows")
    matrix = np.empty((len(body), len(labels)), dtype=complex)
    for offset, row in enumerate(body):
        line = offset + 2
        if len(row) != len(header):
            raise InputError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        values = [_parse_float(text, path=path, line=line) for text in row[1:]]
        matrix[offset] = np.asarray(values[0::2]) + 1j * np.asarray(values[1::2])
    return labels, matrix


def write_table_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[float]]) -> None:
    """Plain numeric table with a header row, e.g. ``size,error``."""

    body = [list(header)]
    body.extend([_fmt(float(value)) for value in row] for row in rows)
    write_text_atomic(path, _render(body))


def write_plot_data(path: Path, xs: Sequence[float], ys: Sequence[float]) -> None:
    """Whitespace-separated two-column file readable by gnuplot."""

    lines = [f"{_fmt(x)} {_fmt(y)}" for x, y in zip(xs, ys)]
    write_text_atomic(path, "\n".join(lines))


__all__ = [
    "read_data_matrix_csv",
    "read_trajectory_csv",
    "write_data_matrix_csv",
    "write_plot_data",
    "write_table_csv",
    "write_trajectory_csv",
]
