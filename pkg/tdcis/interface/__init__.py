"""
TDCIS Interface Module.

User-facing entry points: the ``tdcis`` command line and rich report tables.
"""

from .cli import create_parser, main

__all__ = ["create_parser", "main"]
