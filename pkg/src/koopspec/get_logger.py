"""Logger factory that applies the JSON logging config once."""

from __future__ import annotations

import logging

from .logging_config import configure_logging

_LOGGING_CONFIGURED = False


def get_logger(name: str, *, level: str | None = None) -> logging.Logger:
    """Return a logger ensuring the JSON logging config has been applied.

    Passing ``level`` re-applies the configuration with that level.
    """

    global _LOGGING_CONFIGURED
    if not _LOGGING_CONFIGURED or level is not None:
        configure_logging(level or "WARNING")
        _LOGGING_CONFIGURED = True
    return logging.getLogger(name)


__all__ = ["get_logger"]
