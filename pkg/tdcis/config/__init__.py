"""
TDCIS Configuration Module.

Loads and validates YAML run configurations.
"""

from .settings import (
    ChartOptions,
    LoggingOptions,
    RunConfig,
    SimulateOptions,
    TransformOptions,
    VerifyOptions,
    load_config,
    parse_config,
)

__all__ = [
    "ChartOptions",
    "LoggingOptions",
    "RunConfig",
    "SimulateOptions",
    "TransformOptions",
    "VerifyOptions",
    "load_config",
    "parse_config",
]
