"""
Logging utilities for TDCIS.

Provides a file-and-console logger with rotation. Console output goes to
stderr so that stdout stays reserved for machine-readable summary lines.
"""

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import TYPE_CHECKING, Any, Optional

from tdcis.core.utils import ensure_directory, get_default_log_path

if TYPE_CHECKING:
    from tdcis.core.flow import Trajectory
    from tdcis.core.verify import VerifyReport


class TDCISLogger:
    """
    Logger for TDCIS runs.

    Features:
    - File and console logging
    - Automatic log rotation
    - Run, trajectory, check and chart helpers
    """

    def __init__(
        self,
        name: str = "tdcis",
        log_path: Optional[str] = None,
        log_level: str = "INFO",
        max_bytes: int = 10 * 1024 * 1024,  # 10MB
        backup_count: int = 5,
        console_output: bool = True,
    ):
        """
        Initialize logger.

        Args:
            name: Logger name
            log_path: Path to log file (default: platform-specific)
            log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            max_bytes: Maximum log file size before rotation
            backup_count: Number of backup files to keep
            console_output: Whether to output to console (stderr)
        """
        self.name = name
        self.log_level = getattr(logging, log_level.upper(), logging.INFO)

        if log_path is None:
            log_dir = get_default_log_path()
            self.log_file = os.path.join(log_dir, f"{name}.log")
        else:
            log_dir = os.path.dirname(log_path) or "."
            self.log_file = log_path
        ensure_directory(log_dir)

        self.logger = logging.getLogger(name)
        self.logger.setLevel(self.log_level)
        self.logger.propagate = False
        self.logger.handlers.clear()

        detailed_formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
        simple_formatter = logging.Formatter(
            "%(asctime)s - %(levelname)s - %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
        )

        file_handler = RotatingFileHandler(
            self.log_file, maxBytes=max_bytes, backupCount=backup_count, encoding="utf-8"
        )
        file_handler.setLevel(self.log_level)
        file_handler.setFormatter(detailed_formatter)
        self.logger.addHandler(file_handler)

        if console_output:
            console_handler = logging.StreamHandler()
            console_handler.setLevel(max(self.log_level, logging.WARNING))
            console_handler.setFormatter(simple_formatter)
            self.logger.addHandler(console_handler)

    def debug(self, message: str, **kwargs: Any) -> None:
        """Log debug message."""
        self.logger.debug(message, **kwargs)

    def info(self, message: str, **kwargs: Any) -> None:
        """Log info message."""
        self.logger.info(message, **kwargs)

    def warning(self, message: str, **kwargs: Any) -> None:
        """Log warning message."""
        self.logger.warning(message, **kwargs)

    def error(self, message: str, **kwargs: Any) -> None:
        """Log error message."""
        self.logger.error(message, **kwargs)

    def exception(self, message: str, **kwargs: Any) -> None:
        """Log exception with traceback."""
        self.logger.exception(message, **kwargs)

    def log_run_start(self, command: str, system_label: str) -> None:
        """Log the start of a CLI command."""
        self.info(f"Command '{command}' started for system '{system_label}'")

    def log_run_finished(self, command: str, exit_code: int, duration: float) -> None:
        """Log the end of a CLI command."""
        self.info(f"Command '{command}' finished with exit code {exit_code} in {duration:.2f}s")

    def log_trajectory(self, trajectory: "Trajectory") -> None:
        """Log an integrated trajectory."""
        stats = trajectory.step_stats
        self.debug(
            f"Trajectory of '{trajectory.system_label}' to t={trajectory.final.t:.6g}: "
            f"{stats.steps} steps, max step {stats.max_step:.3e}, "
            f"local error estimate {stats.est_error:.3e}"
        )

    def log_check(self, report: "VerifyReport") -> None:
        """Log a verification report."""
        status = "PASS" if report.passed else "FAIL"
        message = (
            f"Check '{report.check_name}' {status}: value {report.max_residual:.3e} "
            f"(tolerance {report.tolerance:.1e})"
        )
        if report.passed:
            self.info(message)
        else:
            self.warning(message)

    def log_chart_built(self, kind: str, m: int, system_label: str) -> None:
        """Log chart construction."""
        self.info(f"Built {kind} action-angle chart (m={m}) for '{system_label}'")

    def log_numeric_failure(self, operation: str, error: str) -> None:
        """Log a numeric failure."""
        self.error(f"Numeric failure in {operation}: {error}")

    def get_log_file_path(self) -> str:
        """Get path to log file."""
        return self.log_file

    def close(self) -> None:
        """Flush and detach all handlers."""
        for handler in self.logger.handlers[:]:
            handler.flush()
            handler.close()
            self.logger.removeHandler(handler)


# Global logger instance
_default_logger: Optional[TDCISLogger] = None


def get_logger(
    name: str = "tdcis", log_path: Optional[str] = None, log_level: str = "INFO", **kwargs: Any
) -> TDCISLogger:
    """
    Get or create logger instance.

    Args:
        name: Logger name
        log_path: Path to log file
        log_level: Logging level
        **kwargs: Additional logger arguments

    Returns:
        Logger instance
    """
    global _default_logger

    if _default_logger is None:
        _default_logger = TDCISLogger(name=name, log_path=log_path, log_level=log_level, **kwargs)

    return _default_logger


def configure_logger(
    log_path: Optional[str] = None, log_level: str = "INFO", **kwargs: Any
) -> TDCISLogger:
    """Replace the global logger with a freshly configured one."""
    reset_logger()
    return get_logger(log_path=log_path, log_level=log_level, **kwargs)


def reset_logger() -> None:
    """Reset the global logger instance."""
    global _default_logger
    if _default_logger is not None:
        _default_logger.close()
    _default_logger = None
