"""
TDCIS - time-dependent integrable systems toolkit.
Legacy setup.py for editable installs with old pip versions.
Modern configuration is in pyproject.toml.
"""

from setuptools import setup

if __name__ == "__main__":
    setup()
