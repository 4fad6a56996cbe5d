"""
Utility functions for TDCIS.

Helpers for number formatting, angle wrapping and file-system locations used
throughout the library.
"""

import math
import os
import platform
from typing import Iterable

import numpy as np

TWO_PI = 2.0 * math.pi


def format_real(value: float) -> str:
    """
    Format a real with 17 significant digits (round-trip exact).

    Examples:
        >>> format_real(0.1)
        '0.10000000000000001'
    """
    return f"{value:.17g}"


def wrap_angle(phi: float) -> float:
    """
    Reduce an angle to [0, 2*pi).

    Examples:
        >>> wrap_angle(-0.5 * math.pi)
        4.71238898038469
    """
    wrapped = math.fmod(phi, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    return 0.0 if wrapped >= TWO_PI else wrapped


def angle_difference(a: float, b: float) -> float:
    """
    Signed difference a - b of two angles, reduced to (-pi, pi].

    Examples:
        >>> angle_difference(0.1, TWO_PI - 0.1)
        0.2...
    """
    d = math.fmod(a - b, TWO_PI)
    if d > math.pi:
        d -= TWO_PI
    elif d <= -math.pi:
        d += TWO_PI
    return d


def unwrap_angles(angles: Iterable[float]) -> np.ndarray:
    """Remove 2*pi jumps from a sequence of angles."""
    return np.unwrap(np.asarray(list(angles), dtype=float))


def is_windows() -> bool:
    """Check if running on Windows."""
    return platform.system() == "Windows"


def ensure_directory(path: str) -> None:
    """
    Ensure directory exists, create if necessary.

    Args:
        path: Directory path
    """
    os.makedirs(path, exist_ok=True)


def get_default_log_path() -> str:
    """
    Get default log directory path.

    Returns:
        Path to log directory
    """
    if is_windows():
        base = os.environ.get("LOCALAPPDATA", os.path.expanduser("~"))
        return os.path.join(base, "TDCIS", "logs")
    home = os.path.expanduser("~")
    return os.path.join(home, ".tdcis", "logs")
