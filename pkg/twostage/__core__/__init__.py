"""
# __core__

---

## Overview
The core module is the heart of the TwoStageLab library. It holds the pieces every other
module leans on: the library version, the internal settings read from the environment,
the console logger, the error types and the random-stream and worker-pool plumbing.

## Features
- `Settings:` Log level, debug assertions and worker count, read once from the environment.
- `Console Logging:` A `logging` handler that prints `[Notice]: ...` lines coloured with colorama.
- `Error Types:` One exception class per failure mode, each with its own exit code (see `errors`).
- `Random Streams:` Counter-based numpy generators keyed by (master seed, stream key) (see `streams`).

## Usage
To utilize the core module, simply import it at the beginning of your script:

```python
from twostage import __core__
logger = __core__.get_logger(__name__)
```
"""

import logging
import os

import colorama

from twostage.__core__.errors import (
    TwoStageError,
    ParameterError,
    ConfigError,
    OverlapError,
    SizeError,
    StepError,
    DomainError,
    DimensionTooSmall,
    BudgetExceeded,
    ExtinctionDuringSampling,
    GateFailure,
    RecurrenceWarning,
)
from twostage.__core__.streams import fixed_blocks, generator, run_blocks, split_blocks

__version__ = "1.0.0.0"

DEBUG = os.environ.get("TWOSTAGE_DEBUG", "") not in ("", "0")
"""
When set, configurations re-check that the fully- and semi-infected sets are disjoint after every mutation.
"""
LOG_LEVEL = os.environ.get("TWOSTAGE_LOG_LEVEL", "WARNING").upper()
"""
Level of the `twostage` logger. The command line raises it to INFO.
"""

_TAGS = {
    logging.DEBUG: ("Debug", colorama.Style.DIM),
    logging.INFO: ("Notice", colorama.Fore.BLUE),
    logging.WARNING: ("Warning", colorama.Fore.YELLOW),
    logging.ERROR: ("Error", colorama.Fore.RED),
    logging.CRITICAL: ("Error", colorama.Fore.RED),
}


class ConsoleFormatter(logging.Formatter):
    """
    Renders a record as `[Tag]: message` with a coloured tag.
    """
    def format(self, record):
        tag, colour = _TAGS.get(record.levelno, ("Notice", colorama.Fore.BLUE))
        message = record.getMessage()
        return f"[{colour}{tag}{colorama.Style.RESET_ALL}]: {message}"


def _install_handler():
    root = logging.getLogger("twostage")
    if not any(getattr(h, "_twostage", False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(ConsoleFormatter())
        handler._twostage = True
        root.addHandler(handler)
        root.propagate = False
    root.setLevel(getattr(logging, LOG_LEVEL, logging.WARNING))
    return root


def get_logger(name):
    """
    Returns a logger below the `twostage` namespace.
    """
    if not name.startswith("twostage"):
        name = f"twostage.{name}"
    return logging.getLogger(name)


def set_level(level):
    """
    Sets the level of every `twostage` logger, e.g. `set_level("INFO")`.
    """
    logging.getLogger("twostage").setLevel(getattr(logging, str(level).upper(), logging.WARNING))


def notice(message):
    """
    Prints a user-facing progress line through the `twostage` logger.
    """
    logging.getLogger("twostage").info(message)


_install_handler()

__all__ = [
    "__version__",
    "DEBUG",
    "ConsoleFormatter",
    "get_logger",
    "set_level",
    "notice",
    "fixed_blocks",
    "generator",
    "run_blocks",
    "split_blocks",
    "TwoStageError",
    "ParameterError",
    "ConfigError",
    "OverlapError",
    "SizeError",
    "StepError",
    "DomainError",
    "DimensionTooSmall",
    "BudgetExceeded",
    "ExtinctionDuringSampling",
    "GateFailure",
    "RecurrenceWarning",
]
