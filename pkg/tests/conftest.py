"""Pytest configuration and fixtures."""

import logging
import tempfile

import pytest

from tdcis.core.flow import StepControl
from tdcis.core.systems import harmonic, pendulum, separable_2dof


def pytest_configure(config):
    """Configure pytest."""
    config.addinivalue_line("markers", "slow: mark test as slow")
    config.addinivalue_line("markers", "integration: mark test as integration test")


@pytest.fixture
def temp_dir():
    """Create temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield tmpdir


@pytest.fixture
def precise():
    """Adaptive step control at 1e-10."""
    return StepControl(method="rk45", abs_tol=1e-10, rel_tol=1e-10)


@pytest.fixture
def oscillator():
    """Harmonic oscillator with omega = 1."""
    return harmonic(1.0)


@pytest.fixture
def well():
    """Pendulum with omega = 1."""
    return pendulum(1.0)


@pytest.fixture
def two_oscillators():
    """Uncoupled oscillators with omega = (1, 2)."""
    return separable_2dof(1.0, 2.0)


@pytest.fixture(autouse=True)
def isolated_logging(tmp_path, monkeypatch):
    """Keep default log files inside the test's tmp dir and reset the global logger."""
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.setenv("LOCALAPPDATA", str(tmp_path))
    from tdcis.logging.logger import configure_logger, reset_logger

    configure_logger(log_path=str(tmp_path / "logs" / "tdcis.log"), console_output=False)
    yield

    # Console handlers created during the test may be bound to a capture stream
    # that pytest has already closed; detach those before the logger is reset.
    tdcis_logger = logging.getLogger("tdcis")
    for handler in tdcis_logger.handlers[:]:
        stream = getattr(handler, "stream", None)
        if not isinstance(handler, logging.FileHandler) and getattr(stream, "closed", False):
            tdcis_logger.removeHandler(handler)
    reset_logger()
