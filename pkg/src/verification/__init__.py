"""
Verification package: brute-force oracles, random instances and the selftest suite.
"""

from src.verification.instances import Instance, random_instance, random_instances
from src.verification.selftest import (
    GRADIENT_TOLERANCE,
    ORACLE_TOLERANCE,
    compare_instance,
    gradient_check,
    oracle_suite,
    run_selftest,
)

__all__ = [
    "Instance",
    "random_instance",
    "random_instances",
    "GRADIENT_TOLERANCE",
    "ORACLE_TOLERANCE",
    "compare_instance",
    "gradient_check",
    "oracle_suite",
    "run_selftest",
]
