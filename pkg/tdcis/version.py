"""TDCIS version information."""

__version__ = "0.4.0"
__author__ = "TDCIS Developers"
__license__ = "MIT"
__description__ = "Time-dependent integrable Hamiltonian systems: brackets, flows and action-angle charts."
