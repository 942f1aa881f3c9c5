"""Numerical laboratory for polynomial operator pencils of Schrodinger type."""

from pencil_lab.config import Tolerances, DEFAULT_TOLERANCES

__version__ = "0.1.0"

__all__ = ["Tolerances", "DEFAULT_TOLERANCES", "__version__"]
