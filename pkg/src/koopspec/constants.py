"""Shared numerical constants for koopspec."""

from __future__ import annotations

import logging
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Final, Mapping, Tuple

import yaml

LOGGER = logging.getLogger(__name__)

_DEFAULT_CONFIG: Mapping[str, Any] = {
    "linalg": {
        "eps_rank": 1e-12,
        "svd_rank_tol": 1e-10,
        "distinct_tol": 1e-10,
        "defective_condition_limit": 1e12,
        "modulus_decimals": 10,
    },
    "krylov": {
        "gram_condition_limit": 1e12,
        "residual_floor": 1e-12,
    },
    "gla": {
        "delta_unit": 1e-6,
        "n_max": 1000,
    },
    "studies": {
        "zero_error_floor": 1e-12,
        "reference_oversampling": 100,
        "slope_window": {
            "rotation": [-1.2, -0.8],
            "doubling": [-0.7, -0.3],
        },
    },
    "defaults": {
        "omega": 0.8168140899333463,
        "mu": 0.6,
        "seed": 20240101,
        "steps": 500,
    },
}


def _config_path() -> Path:
    env_path = os.getenv("KOOPSPEC_CONFIG_PATH")
    if env_path:
        return Path(env_path)
    return Path(__file__).resolve().parents[2] / "config" / "runtime.yaml"


@lru_cache(maxsize=1)
def load_runtime_config() -> Mapping[str, Any]:
    path = _config_path()
    if not path.exists():
        return _DEFAULT_CONFIG
    try:
        with path.open("r", encoding="utf-8") as handle:
            loaded = yaml.safe_load(handle) or {}
            if isinstance(loaded, dict):
                return loaded
            LOGGER.warning("Runtime config at %s is not a mapping; using defaults.", path)
    except (OSError, yaml.YAMLError) as exc:
        LOGGER.warning("Failed to load runtime config from %s: %s", path, exc)
    return _DEFAULT_CONFIG


_RUNTIME_CONFIG = load_runtime_config()


def _section(name: str) -> dict[str, Any]:
    merged = dict(_DEFAULT_CONFIG[name])
    custom = _RUNTIME_CONFIG.get(name, {})
    if isinstance(custom, dict):
        merged.update(custom)
    return merged


def _safe_float(value: Any, default: float) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        return default


def _safe_int(value: Any, default: int) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        return default


def _safe_window(value: Any, default: Tuple[float, float]) -> Tuple[float, float]:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        low = _safe_float(value[0], default[0])
        high = _safe_float(value[1], default[1])
        if low <= high:
            return (low, high)
    return default


_linalg = _section("linalg")
EPS_RANK: Final[float] = _safe_float(_linalg.get("eps_rank"), 1e-12)
SVD_RANK_TOL: Final[float] = _safe_float(_linalg.get("svd_rank_tol"), 1e-10)
DISTINCT_TOL: Final[float] = _safe_float(_linalg.get("distinct_tol"), 1e-10)
DEFECTIVE_CONDITION_LIMIT: Final[float] = _safe_float(
    _linalg.get("defective_condition_limit"), 1e12
)
MODULUS_DECIMALS: Final[int] = max(1, _safe_int(_linalg.get("modulus_decimals"), 10))

_krylov = _section("krylov")
GRAM_CONDITION_LIMIT: Final[float] = _safe_float(_krylov.get("gram_condition_limit"), 1e12)
RESIDUAL_FLOOR: Final[float] = _safe_float(_krylov.get("residual_floor"), 1e-12)

_gla = _section("gla")
DELTA_UNIT: Final[float] = _safe_float(_gla.get("delta_unit"), 1e-6)
GLA_N_MAX: Final[int] = max(1, _safe_int(_gla.get("n_max"), 1000))

_studies = _section("studies")
ZERO_ERROR_FLOOR: Final[float] = _safe_float(_studies.get("zero_error_floor"), 1e-12)
MIN_DECAY_SLOPE: Final[float] = _safe_float(_studies.get("min_decay_slope"), -0.1)
REFERENCE_OVERSAMPLING: Final[int] = max(
    2, _safe_int(_studies.get("reference_oversampling"), 100)
)
_windows = _studies.get("slope_window", {})
if not isinstance(_windows, dict):
    _windows = {}
ROTATION_SLOPE_WINDOW: Final[Tuple[float, float]] = _safe_window(
    _windows.get("rotation"), (-1.2, -0.8)
)
DOUBLING_SLOPE_WINDOW: Final[Tuple[float, float]] = _safe_window(
    _windows.get("doubling"), (-0.7, -0.3)
)

_defaults = _section("defaults")
DEFAULT_OMEGA: Final[float] = _safe_float(_defaults.get("omega"), 0.8168140899333463)
DEFAULT_MU: Final[float] = _safe_float(_defaults.get("mu"), 0.6)
DEFAULT_SEED: Final[int] = _safe_int(_defaults.get("seed"), 20240101)
DEFAULT_STEPS: Final[int] = max(1, _safe_int(_defaults.get("steps"), 500))

__all__ = [
    "EPS_RANK",
    "SVD_RANK_TOL",
    "DISTINCT_TOL",
    "DEFECTIVE_CONDITION_LIMIT",
    "MODULUS_DECIMALS",
    "GRAM_CONDITION_LIMIT",
    "RESIDUAL_FLOOR",
    "DELTA_UNIT",
    "GLA_N_MAX",
    "ZERO_ERROR_FLOOR",
    "MIN_DECAY_SLOPE",
    "REFERENCE_OVERSAMPLING",
    "ROTATION_SLOPE_WINDOW",
    "DOUBLING_SLOPE_WINDOW",
    "DEFAULT_OMEGA",
    "DEFAULT_MU",
    "DEFAULT_SEED",
    "DEFAULT_STEPS",
    "load_runtime_config",
]
