# src/core/logging.py
"""
Lab logging.

One root configuration per process: a file under <LOG_DIR>/system at the
requested level and the console at console_level. Rate experiments also get
a private file under <LOG_DIR>/experiments with one line per sample size.
"""
import functools
import inspect
import logging
import os
import time
from datetime import datetime, timezone
from typing import Any, Callable, Optional

from core.config import config
from core.constants import DIRECTORIES, FILES, LOG_FORMATS

# Resolved by setup_logging; module import never touches the filesystem
LOG_DIR = config.get('LOG_DIR')
SYSTEM_LOG_DIR = os.path.join(LOG_DIR, DIRECTORIES['system_logs'])
EXPERIMENT_LOG_DIR = os.path.join(LOG_DIR, DIRECTORIES['experiment_logs'])

_LEVELS = {
    'debug': logging.DEBUG,
    'info': logging.INFO,
    'warning': logging.WARNING,
    'error': logging.ERROR,
}


def _writable(directory: str) -> bool:
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError:
        return False
    return os.access(directory, os.W_OK)


def _prepare_log_dirs() -> None:
    global LOG_DIR, SYSTEM_LOG_DIR, EXPERIMENT_LOG_DIR

    LOG_DIR = config.get('LOG_DIR')
    if not _writable(LOG_DIR):
        LOG_DIR = os.path.join(os.getcwd(), 'logs')

    SYSTEM_LOG_DIR = os.path.join(LOG_DIR, DIRECTORIES['system_logs'])
    EXPERIMENT_LOG_DIR = os.path.join(LOG_DIR, DIRECTORIES['experiment_logs'])
    for directory in (SYSTEM_LOG_DIR, EXPERIMENT_LOG_DIR):
        os.makedirs(directory, exist_ok=True)


def setup_logging(level: str = 'INFO', log_file: str = None, console_level: str = 'WARNING'):
    """
    Configure the root logger for a lab run.

    The CLI maps -v to console INFO and -vv to console DEBUG; the file
    handler always records at `level`.
    """
    file_level = getattr(logging, level.upper(), None)
    if not isinstance(file_level, int):
        raise ValueError(f'Invalid log level: {level}')
    shown_level = getattr(logging, console_level.upper(), logging.WARNING)

    config.reload()
    _prepare_log_dirs()

    root = logging.getLogger()
    for stale in list(root.handlers):
        stale.close()
        root.removeHandler(stale)
    root.setLevel(min(file_level, shown_level))

    formatter = logging.Formatter(LOG_FORMATS['default'])
    handlers = (
        (logging.FileHandler(log_file or os.path.join(SYSTEM_LOG_DIR, FILES['main_log'])), file_level),
        (logging.StreamHandler(), shown_level),
    )
    for handler, handler_level in handlers:
        handler.setLevel(handler_level)
        handler.setFormatter(formatter)
        root.addHandler(handler)

    logging.getLogger('matplotlib').setLevel(logging.WARNING)


def log_with_timestamp(message: str, name: str = "Lab", level: str = "info", category: str = None):
    """Log `[UTC time] name[category]: message`; unknown levels log at INFO."""
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M:%S")
    source = f"{name}[{category}]" if category else name
    logging.log(_LEVELS.get(level.lower(), logging.INFO), f"[{stamp}] {source}: {message}")


def get_experiment_log_path(experiment_name: str) -> str:
    return os.path.join(EXPERIMENT_LOG_DIR, f"{experiment_name}.log")


def _result_size(result: Any) -> str:
    if hasattr(result, 'shape'):
        return f" (shape: {result.shape})"
    if hasattr(result, '__len__'):
        return f" (length: {len(result)})"
    return ""


class _StageClock:
    """Start/finish/failure messages shared by the sync and async stage wrappers."""

    def __init__(self, stage_name: str, level: str):
        self.stage_name = stage_name
        self.level = level
        self.started = time.perf_counter()
        log_with_timestamp(f"[{stage_name}] Starting", "Pipeline", level)

    def _elapsed(self) -> float:
        return time.perf_counter() - self.started

    def finished(self, result: Any) -> Any:
        log_with_timestamp(
            f"[{self.stage_name}] Completed in {self._elapsed():.2f}s{_result_size(result)}",
            "Pipeline",
            self.level,
        )
        return result

    def failed(self, error: BaseException) -> None:
        log_with_timestamp(f"[{self.stage_name}] Failed after {self._elapsed():.2f}s: {error}", "Pipeline", "error")


def log_pipeline_stage(stage_name: str, level: str = "info"):
    """
    Time a pipeline stage (measure, summarize, persist) and log its outcome.

    Coroutine functions stay coroutine functions.

    Example:
        >>> @log_pipeline_stage('Measure')
        ... async def measure(self):
        ...     return records
    """
    def decorator(func: Callable):
        if inspect.iscoroutinefunction(func):
            @functools.wraps(func)
            async def timed_coroutine(*args, **kwargs):
                clock = _StageClock(stage_name, level)
                try:
                    result = await func(*args, **kwargs)
                except Exception as e:
                    clock.failed(e)
                    raise
                return clock.finished(result)
            return timed_coroutine

        @functools.wraps(func)
        def timed(*args, **kwargs):
            clock = _StageClock(stage_name, level)
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                clock.failed(e)
                raise
            return clock.finished(result)
        return timed
    return decorator


class PerformanceLogger:
    """
    Wall-clock timer for a block of lab work; `elapsed` is kept after exit.

    Example:
        >>> with PerformanceLogger('n=1024 replicates', 'Rate Experiment'):
        ...     run_replicates()
    """

    def __init__(self, operation_name: str, logger_name: str = "Performance", level: str = "info"):
        self.operation_name = operation_name
        self.logger_name = logger_name
        self.level = level
        self.start_time: Optional[float] = None
        self.elapsed: float = 0.0

    def __enter__(self):
        self.start_time = time.perf_counter()
        log_with_timestamp(f"{self.operation_name} started", self.logger_name, "debug")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed = time.perf_counter() - self.start_time
        if exc_type is not None:
            log_with_timestamp(f"{self.operation_name} failed after {self.elapsed:.2f}s: {exc_val}",
                               self.logger_name, "error")
            return
        log_with_timestamp(f"{self.operation_name} completed in {self.elapsed:.2f}s", self.logger_name, self.level)


def create_experiment_logger(experiment_name: str) -> logging.Logger:
    """Non-propagating INFO logger writing to logs/experiments/<experiment_name>.log."""
    logger = logging.getLogger(f"experiment.{experiment_name}")
    if logger.handlers:
        return logger

    os.makedirs(EXPERIMENT_LOG_DIR, exist_ok=True)
    handler = logging.FileHandler(get_experiment_log_path(experiment_name))
    handler.setFormatter(logging.Formatter(LOG_FORMATS['detailed']))
    logger.addHandler(handler)
    logger.setLevel(logging.INFO)
    logger.propagate = False
    return logger
