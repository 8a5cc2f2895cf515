"""Test configuration helpers."""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Iterator

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).resolve().parent.parent
SRC_ROOT = PROJECT_ROOT / "src"


def _ensure_src_on_path() -> None:
    if str(SRC_ROOT) not in sys.path:
        sys.path.insert(0, str(SRC_ROOT))


_ensure_src_on_path()

from koopspec.dynamics import MapSystem, make_system  # noqa: E402
from koopspec.observables import Dictionary, fourier_dictionary  # noqa: E402
from koopspec.settings import get_settings  # noqa: E402

OMEGA = 2.0 * np.pi * 0.13


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    for name in ("KOOP_SEED", "KOOPSPEC_SEED", "KOOPSPEC_LOG_LEVEL", "LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setattr(logging.getLogger("koopspec"), "propagate", True)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rotation() -> MapSystem:
    return make_system("rotation", omega=OMEGA)


@pytest.fixture
def fourier3() -> Dictionary:
    return fourier_dictionary([1, 2, 3])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
