"""Logging for simulation runs.

Every record may carry two optional attributes: ``context`` (scenario, seed,
durations and other run identifiers) and ``counts`` (per-state census
numbers). Text output appends the context as ``key=value`` pairs; JSON output
flattens both into the line.
"""

import json
import logging
import sys
import time
from collections.abc import Generator, Mapping
from contextlib import contextmanager
from typing import Any

ROOT_LOGGER = "flusim"
HANDLER_NAME = "flusim-stderr"

TEXT_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class RunFormatter(logging.Formatter):
    """Text or JSON lines carrying a record's run context."""

    def __init__(self, use_json: bool = False) -> None:
        super().__init__(TEXT_FORMAT, DATE_FORMAT)
        self.use_json = use_json

    def format(self, record: logging.LogRecord) -> str:
        context: dict[str, Any] = getattr(record, "context", {})
        if self.use_json:
            line: dict[str, Any] = {
                "timestamp": self.formatTime(record, self.datefmt),
                "level": record.levelname,
                "logger": record.name,
                "message": record.getMessage(),
                **context,
                **getattr(record, "counts", {}),
            }
            return json.dumps(line, ensure_ascii=False, default=str)
        text = super().format(record)
        if context:
            text += " | " + " ".join(f"{key}={value}" for key, value in context.items())
        return text


def configure_logging(
    level: int = logging.INFO, use_json: bool = False, quiet: bool = False
) -> None:
    """Attach (or retune) the single stderr handler of the flusim logger tree.

    ``quiet`` raises the level to WARNING whatever ``level`` says.
    """
    if quiet:
        level = logging.WARNING
    root = logging.getLogger(ROOT_LOGGER)
    root.setLevel(level)

    handler = next((h for h in root.handlers if h.get_name() == HANDLER_NAME), None)
    if handler is None:
        handler = logging.StreamHandler(sys.stderr)
        handler.set_name(HANDLER_NAME)
        root.addHandler(handler)
    handler.setLevel(level)
    handler.setFormatter(RunFormatter(use_json=use_json))


def get_logger(name: str) -> logging.Logger:
    """Logger under the ``flusim`` namespace; ``__name__`` of package modules passes through."""
    if name != ROOT_LOGGER and not name.startswith(f"{ROOT_LOGGER}."):
        name = f"{ROOT_LOGGER}.{name}"
    return logging.getLogger(name)


@contextmanager
def log_operation(
    logger: logging.Logger, operation: str, **context: Any
) -> Generator[dict[str, Any], None, None]:
    """Log start, completion or failure of ``operation`` with its wall time.

    Yields a dict; whatever the block stores in it is added to the context of
    the completion record.

    Example:
        with log_operation(logger, "run_seed", scenario="scenario1", seed=7) as result:
            result["peak_infected"] = 612
    """
    start = time.perf_counter()
    logger.info(f"Starting: {operation}", extra={"context": context})
    result: dict[str, Any] = {}
    try:
        yield result
    except Exception as e:
        elapsed = time.perf_counter() - start
        logger.error(
            f"Failed: {operation} ({elapsed:.2f}s) - {e}",
            extra={"context": {**context, "duration_s": round(elapsed, 3), "error": str(e)}},
        )
        raise
    elapsed = time.perf_counter() - start
    logger.info(
        f"Completed: {operation} ({elapsed:.2f}s)",
        extra={"context": {**context, **result, "duration_s": round(elapsed, 3)}},
    )


def log_counts(
    logger: logging.Logger,
    label: str,
    counts: Mapping[str, int],
    level: int = logging.DEBUG,
) -> None:
    """One ``label: KEY=value ...`` line; the counts also ride along as fields."""
    if not logger.isEnabledFor(level):
        return
    body = " ".join(f"{key}={value}" for key, value in counts.items())
    logger.log(level, f"{label}: {body}", extra={"counts": dict(counts)})
