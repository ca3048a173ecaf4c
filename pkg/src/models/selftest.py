"""
Selftest result models.
"""

from typing import List

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    """
    Outcome of one selftest check.

    Attributes:
        name: What was compared
        max_error: Largest error observed over all cases
        tolerance: Largest error accepted
        cases: Number of compared cases
    """

    name: str
    max_error: float = Field(..., ge=0.0)
    tolerance: float = Field(..., gt=0.0)
    cases: int = Field(default=1, ge=0)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


class SelftestReport(BaseModel):
    checks: List[CheckResult] = Field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def __str__(self) -> str:
        lines = [
            f"{'ok  ' if c.passed else 'FAIL'} {c.name:<24} max error {c.max_error:.3e} "
            f"(tolerance {c.tolerance:.0e}, {c.cases} cases)"
            for c in self.checks
        ]
        lines.append(f"{'passed' if self.passed else 'FAILED'} in {self.elapsed:.1f}s")
        return "\n".join(lines)
