"""Observable dictionaries, data matrices, Hankel-Takens matrices and dual samples."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable, Literal, Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

from .constants import EPS_RANK
from .dynamics import MapSystem, Trajectory
from .errors import InputError
from .numerics import ComplexMatrix, ComplexVector, as_complex_matrix, pseudoinverse

ObservableFn = Callable[[npt.NDArray[np.float64]], ComplexVector]
MultiIndex = tuple[int, ...]
DictionaryKind = Literal["fourier", "delay", "custom"]


@dataclass(frozen=True, slots=True)
class Observable:
    """A named complex observable evaluated row-wise on an (m, d) array of states."""

    label: str
    fn: ObservableFn = field(repr=False, compare=False)

    def __call__(self, points: npt.ArrayLike) -> ComplexVector:
        states = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.asarray(self.fn(states), dtype=np.complex128)
        return np.broadcast_to(values, (states.shape[0],)).copy()


@dataclass(frozen=True, slots=True)
class Dictionary:
    """Ordered set of uniquely labelled observables f_1..f_N."""

    entries: tuple[Observable, ...]
    spec: str
    kind: DictionaryKind = "custom"
    orders: tuple[MultiIndex, ...] | None = None

    def __post_init__(self) -> None:
        if not self.entries:
            raise InputError("a dictionary needs at least one observable")
        labels = [entry.label for entry in self.entries]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise InputError(
                f"duplicate dictionary labels: {', '.join(duplicates)}",
                details={"duplicates": duplicates},
            )

    @property
    def order(self) -> int:
        return len(self.entries)

    @property
    def labels(self) -> list[str]:
        return [entry.label for entry in self.entries]

    def evaluate(self, points: npt.ArrayLike) -> ComplexMatrix:
        """Sample matrix with F[l, j] = f_j(x_l)."""

        states = np.atleast_2d(np.asarray(points, dtype=float))
        return np.column_stack([entry(states) for entry in self.entries]).astype(np.complex128)


def _normalise_order(order: int | Sequence[int], dim: int) -> MultiIndex:
    index = (int(order),) if np.isscalar(order) else tuple(int(value) for value in order)
    if len(index) != dim:
        raise InputError(
            f"multi-index {index} has length {len(index)}, expected {dim}",
            details={"order": list(index), "dim": dim},
        )
    return index


def _order_label(order: MultiIndex) -> str:
    return "fourier[" + ";".join(str(value) for value in order) + "]"


def fourier_observable(
    order: int | Sequence[int],
    dim: int = 1,
    *,
    columns: Sequence[int] | None = None,
) -> Observable:
    """e^{i<j, θ>} on the angular coordinates ``columns`` (default: the first ``dim``)."""

    index = _normalise_order(order, dim)
    cols = list(columns) if columns is not None else list(range(dim))
    if len(cols) != dim:
        raise InputError("angular column count must match the multi-index length")
    weights = np.asarray(index, dtype=float)

    def _fourier(states: npt.NDArray[np.float64]) -> ComplexVector:
        return np.exp(1j * (states[:, cols] @ weights))

    return Observable(label=_order_label(index), fn=_fourier)


def fourier_dictionary(
    orders: Sequence[int | Sequence[int]],
    dim: int = 1,
    *,
    columns: Sequence[int] | None = None,
) -> Dictionary:
    """Dictionary f_j(θ) = e^{i<j, θ>} for the given multi-indices."""

    if len(orders) == 0:
        raise InputError("fourier dictionary needs at least one order")
    normalised = [_normalise_order(order, dim) for order in orders]
    seen: set[MultiIndex] = set()
    for index in normalised:
        if index in seen:
            raise InputError(
                f"duplicate multi-index {index}", details={"order": list(index)}
            )
        seen.add(index)
    spec = "fourier:" + ",".join(";".join(str(v) for v in index) for index in normalised)
    return Dictionary(
        entries=tuple(fourier_observable(index, dim, columns=columns) for index in normalised),
        spec=spec,
        kind="fourier",
        orders=tuple(normalised),
    )


def _angular_columns(system: MapSystem | None, dim_hint: int) -> list[int]:
    if system is None:
        return list(range(dim_hint))
    return [index for index, angular in enumerate(system.angular) if angular]


def _parse_index(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.strip().strip("()").split(";"))
    except ValueError as exc:
        raise InputError(f"'{text}' is not an integer multi-index") from exc


_TERM = re.compile(r"^(?:(?P<coef>[^*]+)\*)?(?P<body>.+)$")


def _parse_term(term: str, system: MapSystem | None) -> Observable:
    match = _TERM.match(term.strip())
    if match is None:
        raise InputError(f"cannot parse observable term '{term}'")
    coefficient = 1.0 + 0.0j
    if match.group("coef"):
        try:
            coefficient = complex(match.group("coef").replace(" ", ""))
        except ValueError as exc:
            raise InputError(f"bad coefficient in '{term}'") from exc
    body = match.group("body").strip()
    kind, _, argument = body.partition(":")
    base: Observable
    if kind == "fourier":
        index = _parse_index(argument)
        columns = _angular_columns(system, len(index))
        base = fourier_observable(index, len(columns), columns=columns)
    elif kind == "coord":
        base = _coordinate_observable(argument, system, exponential=False)
    elif kind == "exp" and argument.startswith("coord:"):
        base = _coordinate_observable(argument.partition(":")[2], system, exponential=True)
    elif kind == "geometric":
        base = _geometric_observable(argument, system)
    elif kind == "const":
        base = Observable(label="const", fn=lambda states: np.ones(states.shape[0]))
    else:
        raise InputError(
            f"unknown observable '{body}'",
            details={
                "known": ["fourier:<j>", "coord:<i>", "exp:coord:<i>", "geometric:<r>", "const"]
            },
        )
    if coefficient == 1.0:
        return base
    return Observable(
        label=f"{coefficient!r}*{base.label}",
        fn=lambda states, fn=base.fn: coefficient * fn(states),
    )


def _coordinate_observable(
    argument: str, system: MapSystem | None, *, exponential: bool
) -> Observable:
    try:
        position = int(argument) - 1
    except ValueError as exc:
        raise InputError(f"coordinate index must be an integer, got '{argument}'") from exc
    if position < 0 or (system is not None and position >= system.dim):
        raise InputError(f"coordinate index {position + 1} out of range")
    if exponential:
        return Observable(
            label=f"exp[x{position + 1}]",
            fn=lambda states: np.exp(states[:, position]).astype(np.complex128),
        )
    return Observable(
        label=f"x{position + 1}",
        fn=lambda states: states[:, position].astype(np.complex128),
    )


def _geometric_observable(argument: str, system: MapSystem | None) -> Observable:
    """1/(1 - r e^{iθ}) = Σ_k r^k e^{ikθ} on the first angular coordinate, |r| < 1."""

    try:
        ratio = float(argument)
    except ValueError as exc:
        raise InputError(f"geometric ratio must be a number, got '{argument}'") from exc
    if not abs(ratio) < 1.0:
        raise InputError(f"geometric ratio must satisfy |r| < 1, got {ratio}")
    columns = _angular_columns(system, 1)
    if not columns:
        raise InputError("geometric observable needs an angular coordinate")
    column = columns[0]
    return Observable(
        label=f"geometric[{ratio:g}]",
        fn=lambda states: 1.0 / (1.0 - ratio * np.exp(1j * states[:, column])),
    )


def parse_observable(text: str, system: MapSystem | None = None) -> Observable:
    """Parse sums such as ``fourier:1+fourier:2`` or ``fourier:1+coord:2``."""

    terms = [term for term in text.split("+") if term.strip()]
    if not terms:
        raise InputError("empty observable spec")
    parsed = [_parse_term(term, system) for term in terms]
    if len(parsed) == 1:
        return Observable(label=text.strip(), fn=parsed[0].fn)

    def _sum(states: npt.NDArray[np.float64]) -> ComplexVector:
        total = np.zeros(states.shape[0], dtype=np.complex128)
        for observable in parsed:
            total = total + observable.fn(states)
        return total

    return Observable(label=text.strip(), fn=_sum)


def delay_dictionary(observable: Observable, n: int, system: MapSystem) -> Dictionary:
    """Delayed copies f, f∘T, ..., f∘T^{n-1}."""

    if n < 1:
        raise InputError(f"delay count must be >= 1, got {n}")

    def _delayed(k: int) -> Observable:
        return Observable(
            label=f"{observable.label}@{k}",
            fn=lambda states: observable.fn(system.iterate(states, k)),
        )

    return Dictionary(
        entries=tuple(_delayed(k) for k in range(n)),
        spec=f"delay:{observable.label}:{n}",
        kind="delay",
    )


def parse_dictionary(text: str, system: MapSystem | None = None) -> Dictionary:
    """Registry entry point: ``fourier:<order-list>`` or ``delay:<observable>:<n>``."""

    spec = text.strip()
    kind, _, rest = spec.partition(":")
    if kind == "fourier":
        if not rest:
            raise InputError("fourier dictionary needs an order list, e.g. fourier:1,2,3")
        orders = [_parse_index(part) for part in rest.split(",") if part.strip()]
        dims = {len(order) for order in orders}
        if len(dims) != 1:
            raise InputError("all multi-indices must share one length")
        columns = _angular_columns(system, dims.pop())
        return fourier_dictionary(orders, len(columns), columns=columns)
    if kind == "delay":
        body, _, count = rest.rpartition(":")
        if not body or not count:
            raise InputError("delay dictionary spec must be delay:<observable>:<n>")
        if system is None:
            raise InputError("delay dictionaries need a system to evaluate f∘T^k")
        try:
            n = int(count)
        except ValueError as exc:
            raise InputError(f"delay count must be an integer, got '{count}'") from exc
        return delay_dictionary(parse_observable(body, system), n, system)
    raise InputError(
        f"unknown dictionary '{spec}'",
        details={"known": ["fourier:<order-list>", "delay:<observable>:<n>"]},
    )


@dataclass(frozen=True, slots=True)
class DataMatrixPair:
    """F[l, j] = f_j(x_l) and Fprime[l, j] = f_j(T x_l)."""

    F: ComplexMatrix
    Fprime: ComplexMatrix
    labels: tuple[str, ...]
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "F", as_complex_matrix(self.F, name="F"))
        object.__setattr__(self, "Fprime", as_complex_matrix(self.Fprime, name="Fprime"))
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.F.shape != self.Fprime.shape:
            raise InputError(
                f"F and Fprime shapes differ: {self.F.shape} vs {self.Fprime.shape}"
            )
        if len(self.labels) != self.F.shape[1]:
            raise InputError("label count must match the number of columns")

    @property
    def m(self) -> int:
        return int(self.F.shape[0])

    @property
    def N(self) -> int:
        return int(self.F.shape[1])


def sample_pair(dictionary: Dictionary, traj: Trajectory) -> DataMatrixPair:
    """Pair built from x_1..x_{m-1} (F) and x_2..x_m (F′)."""

    if traj.length < 2:
        raise InputError(
            f"trajectory too short for a data-matrix pair: {traj.length} point(s)",
            details={"m": traj.length},
        )
    samples = dictionary.evaluate(traj.points)
    return DataMatrixPair(
        F=samples[:-1],
        Fprime=samples[1:],
        labels=tuple(dictionary.labels),
        meta={**traj.metadata(), "dictionary": dictionary.spec, "source": "trajectory"},
    )


def sample_pair_on_points(
    dictionary: Dictionary, system: MapSystem, points: npt.ArrayLike
) -> DataMatrixPair:
    states = system.validate_state(np.atleast_2d(np.asarray(points, dtype=float)))
    return DataMatrixPair(
        F=dictionary.evaluate(states),
        Fprime=dictionary.evaluate(system.step(states)),
        labels=tuple(dictionary.labels),
        meta={
            "system": system.to_spec(),
            "dictionary": dictionary.spec,
            "source": "points",
            "m": int(states.shape[0]),
        },
    )


@dataclass(frozen=True, slots=True)
class HankelTakens:
    """H[i, j] = series[i + j]; H[i, j+1] = H[i+1, j]."""

    H: ComplexMatrix
    series: ComplexVector


def hankel_takens(series: npt.ArrayLike, m: int, n: int) -> HankelTakens:
    values = np.asarray(series, dtype=np.complex128).ravel()
    if m < 0 or n < 1:
        raise InputError(f"invalid Hankel shape m={m}, n={n}")
    if values.size < m + n:
        raise InputError(
            f"series of length {values.size} is too short for m={m}, n={n}",
            details={"length": int(values.size), "required": m + n},
        )
    matrix = scipy.linalg.hankel(values[: m + 1], values[m : m + n])
    return HankelTakens(H=np.asarray(matrix, dtype=np.complex128), series=values[: m + n])


def krylov_samples(series: npt.ArrayLike, rows: int, N: int) -> ComplexMatrix:
    """rows × (N+1) matrix with entry (l, k) = f(T^{l+k} x)."""

    if rows < 1:
        raise InputError(f"need at least one Krylov row, got {rows}")
    return hankel_takens(series, rows - 1, N + 1).H


def dual_basis_samples(F: npt.ArrayLike, *, eps_rank: float = EPS_RANK) -> ComplexMatrix:
    """Rows ĝ_k(x_l) of (F†F)⁻¹F†, the sampled dual basis."""

    matrix = as_complex_matrix(F, name="F")
    result = pseudoinverse(matrix, eps_rank=eps_rank)
    result.require_column_rank(matrix.shape[1], name="F")
    return result.matrix


__all__ = [
    "DataMatrixPair",
    "Dictionary",
    "HankelTakens",
    "Observable",
    "dual_basis_samples",
    "delay_dictionary",
    "fourier_dictionary",
    "fourier_observable",
    "hankel_takens",
    "krylov_samples",
    "parse_dictionary",
    "parse_observable",
    "sample_pair",
    "sample_pair_on_points",
]
