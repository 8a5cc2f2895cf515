"""Discrete-time maps and trajectory generation.

Circle and torus coordinates are angles reduced to [0, 2π) after every step.
The built-in systems assume the trajectory time averages used by the
estimators exist (ergodic or attracting invariant sets); this is a property of
the map, not something checked here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping, Sequence

import numpy as np
import numpy.typing as npt

from .constants import DEFAULT_OMEGA
from .errors import InputError

logger = logging.getLogger(__name__)

StateArray = npt.NDArray[np.float64]
StepFn = Callable[[StateArray], StateArray]

TWO_PI = 2.0 * np.pi
SYSTEM_NAMES: tuple[str, ...] = (
    "rotation",
    "doubling",
    "torus_rotation",
    "rotation_contraction",
    "identity",
)
_DOUBLING_DEFAULT_SEED = TWO_PI / np.sqrt(2.0)


def wrap_angle(values: npt.ArrayLike) -> StateArray:
    """Reduce angles modulo 2π into [0, 2π)."""

    reduced = np.mod(np.asarray(values, dtype=float), TWO_PI)
    return np.where(reduced >= TWO_PI, 0.0, reduced)


@dataclass(frozen=True, slots=True)
class MapSystem:
    """A deterministic map T acting on state vectors of length ``dim``.

    ``step`` accepts a single state (shape ``(dim,)``) or a stack of states
    (shape ``(m, dim)``).
    """

    name: str
    dim: int
    params: Mapping[str, Any]
    angular: tuple[bool, ...]
    _step: StepFn = field(repr=False, compare=False)

    def step(self, state: npt.ArrayLike) -> StateArray:
        return self._step(self.validate_state(state))

    def iterate(self, states: npt.ArrayLike, times: int) -> StateArray:
        current = self.validate_state(states)
        for _ in range(times):
            current = self._step(current)
        return current

    def validate_state(self, state: npt.ArrayLike) -> StateArray:
        array = np.asarray(state, dtype=float)
        if array.ndim == 0 or array.shape[-1] != self.dim:
            raise InputError(
                f"{self.name} expects states of dimension {self.dim}, got shape {array.shape}",
                details={"system": self.name, "dim": self.dim},
            )
        if not np.all(np.isfinite(array)):
            raise InputError(f"{self.name} state contains non-finite values")
        return array

    def to_spec(self) -> dict[str, Any]:
        params = {
            key: list(value) if isinstance(value, tuple) else value
            for key, value in self.params.items()
        }
        return {"name": self.name, "params": params}


def _real(params: Mapping[str, Any], key: str, default: float | None = None) -> float:
    if key not in params:
        if default is None:
            raise InputError(f"missing parameter '{key}'")
        return default
    try:
        value = float(params[key])
    except (TypeError, ValueError) as exc:
        raise InputError(f"parameter '{key}' must be real, got {params[key]!r}") from exc
    if not np.isfinite(value):
        raise InputError(f"parameter '{key}' must be finite")
    return value


def _check_known(name: str, params: Mapping[str, Any], allowed: set[str]) -> None:
    unknown = sorted(set(params) - allowed)
    if unknown:
        raise InputError(
            f"unexpected parameters for {name}: {', '.join(unknown)}",
            details={"system": name, "unexpected": unknown},
        )


def make_system(name: str, params: Mapping[str, Any] | None = None, **kwargs: Any) -> MapSystem:
    """Build one of the built-in maps.

    rotation: θ' = θ + ω; doubling: θ' = 2θ; torus_rotation: θ'_i = θ_i + 2π ω_i;
    rotation_contraction: (θ, x)' = (θ + ω, μ x) with |μ| < 1. ``identity`` is
    the rotation with ω = 0.
    """

    merged: dict[str, Any] = {**(params or {}), **kwargs}
    key = name.strip().lower()

    if key in {"rotation", "identity"}:
        _check_known(key, merged, {"omega"})
        omega = 0.0 if key == "identity" else _real(merged, "omega", DEFAULT_OMEGA)
        if key == "identity" and "omega" in merged and _real(merged, "omega") != 0.0:
            raise InputError("identity system takes no rotation angle")
        return MapSystem(
            name="rotation",
            dim=1,
            params=MappingProxyType({"omega": omega}),
            angular=(True,),
            _step=lambda state: wrap_angle(state + omega),
        )

    if key == "doubling":
        _check_known(key, merged, set())
        return MapSystem(
            name="doubling",
            dim=1,
            params=MappingProxyType({}),
            angular=(True,),
            _step=lambda state: wrap_angle(2.0 * state),
        )

    if key == "torus_rotation":
        _check_known(key, merged, {"frequencies"})
        raw = merged.get("frequencies")
        if raw is None:
            raise InputError("torus_rotation needs a 'frequencies' vector")
        frequencies = np.atleast_1d(np.asarray(raw, dtype=float))
        if frequencies.ndim != 1 or frequencies.size == 0 or not np.all(np.isfinite(frequencies)):
            raise InputError("torus_rotation frequencies must be a nonempty finite vector")
        shift = TWO_PI * frequencies
        return MapSystem(
            name="torus_rotation",
            dim=int(frequencies.size),
            params=MappingProxyType({"frequencies": tuple(float(f) for f in frequencies)}),
            angular=(True,) * int(frequencies.size),
            _step=lambda state: wrap_angle(state + shift),
        )

    if key == "rotation_contraction":
        _check_known(key, merged, {"omega", "mu"})
        omega = _real(merged, "omega", DEFAULT_OMEGA)
        mu = _real(merged, "mu")
        if abs(mu) >= 1.0:
            raise InputError(
                f"contraction factor must satisfy |mu| < 1, got {mu}",
                details={"mu": mu},
            )

        def _step(state: StateArray) -> StateArray:
            out = np.empty_like(state)
            out[..., 0] = wrap_angle(state[..., 0] + omega)
            out[..., 1] = mu * state[..., 1]
            return out

        return MapSystem(
            name="rotation_contraction",
            dim=2,
            params=MappingProxyType({"omega": omega, "mu": mu}),
            angular=(True, False),
            _step=_step,
        )

    raise InputError(
        f"unknown system '{name}'",
        details={"system": name, "known": list(SYSTEM_NAMES)},
    )


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Points x_1..x_m with x_{k+1} = T(x_k)."""

    points: StateArray
    system: MapSystem
    x0: StateArray
    seed: int | None = None

    @property
    def length(self) -> int:
        return int(self.points.shape[0])

    def prefix(self, m: int) -> "Trajectory":
        if not 1 <= m <= self.length:
            raise InputError(f"prefix length {m} outside 1..{self.length}")
        return Trajectory(points=self.points[:m], system=self.system, x0=self.x0, seed=self.seed)

    def metadata(self) -> dict[str, Any]:
        return {
            "system": self.system.to_spec(),
            "x0": [float(value) for value in self.x0],
            "m": self.length,
            "seed": self.seed,
        }


def is_degenerate_doubling_seed(theta: float, *, max_power: int = 24) -> bool:
    """True for seeds θ = 2π·p/2^j (small j), which collapse to the fixed point 0."""

    turns = float(theta) / TWO_PI
    for power in range(max_power + 1):
        scaled = turns * 2.0**power
        if abs(scaled - round(scaled)) <= 1e-9:
            return True
    return False


def default_initial_state(system: MapSystem) -> StateArray:
    if system.name == "doubling":
        return np.array([_DOUBLING_DEFAULT_SEED])
    if system.name == "rotation_contraction":
        return np.array([0.0, 1.0])
    return np.zeros(system.dim)


def generic_initial_state(system: MapSystem, seed: int) -> StateArray:
    """Seeded surrogate for a generic initial condition."""

    rng = np.random.default_rng(seed)
    state = rng.uniform(0.0, TWO_PI, size=system.dim)
    if system.name == "rotation_contraction":
        state[1] = rng.uniform(-1.0, 1.0)
    return state


def trajectory(
    system: MapSystem,
    x0: npt.ArrayLike | Sequence[float] | float,
    m: int,
    *,
    seed: int | None = None,
) -> Trajectory:
    """Iterate ``system`` from ``x0`` and return exactly ``m`` points."""

    if m < 1:
        raise InputError(f"trajectory length must be >= 1, got {m}")
    start = system.validate_state(np.atleast_1d(np.asarray(x0, dtype=float)))
    if start.ndim != 1:
        raise InputError("x0 must be a single state vector")
    start = np.array(
        [wrap_angle(value) if angular else value for value, angular in zip(start, system.angular)],
        dtype=float,
    )
    if system.name == "doubling" and is_degenerate_doubling_seed(start[0]):
        logger.warning(
            "dynamics.degenerate_doubling_seed",
            extra={"extra_payload": {"x0": float(start[0])}},
        )
    points = np.empty((m, system.dim))
    points[0] = start
    for k in range(1, m):
        points[k] = system._step(points[k - 1])
    points.setflags(write=False)
    return Trajectory(points=points, system=system, x0=start, seed=seed)


__all__ = [
    "MapSystem",
    "SYSTEM_NAMES",
    "TWO_PI",
    "Trajectory",
    "default_initial_state",
    "generic_initial_state",
    "is_degenerate_doubling_seed",
    "make_system",
    "trajectory",
    "wrap_angle",
]
