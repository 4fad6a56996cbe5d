"""
TDCIS Logging Module.

Provides structured logging with rotation.
"""

from .logger import TDCISLogger, configure_logger, get_logger, reset_logger

__all__ = ["TDCISLogger", "configure_logger", "get_logger", "reset_logger"]
