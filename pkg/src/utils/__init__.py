"""
Utilities package for semdepth.

This package contains helper utilities and common functions.
"""

from src.utils.logger import setup_logger, set_level, default_logger

__all__ = [
    "setup_logger",
    "set_level",
    "default_logger",
]
