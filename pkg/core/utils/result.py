from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional


@dataclass(frozen=True)
class CheckResult:
    """
    Outcome of one numerical check.
    - name: check identifier used as the manifest verdict key
    - passed: whether the checked statement held within tolerance
    - details: measured quantities backing the verdict
    - error: human-readable reason when the check failed
    - error_code: stable code for programmatic handling
    """
    name: str
    passed: bool
    details: Dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None
    error_code: Optional[str] = None

    @staticmethod
    def ok(name: str, details: Optional[Dict[str, Any]] = None) -> "CheckResult":
        return CheckResult(name=name, passed=True, details=details or {})

    @staticmethod
    def fail(name: str, message: str, error_code: Optional[str] = None,
             details: Optional[Dict[str, Any]] = None) -> "CheckResult":
        return CheckResult(name=name, passed=False, details=details or {},
                           error=message, error_code=error_code)

    @staticmethod
    def from_error(name: str, exc: Any) -> "CheckResult":
        """Failed check carrying a LabError's message, code and details"""
        return CheckResult.fail(name, exc.message, exc.error_code, exc.details)

    @property
    def verdict(self) -> str:
        return 'PASS' if self.passed else 'FAIL'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'verdict': self.verdict,
            'details': self.details,
            'error': self.error,
            'error_code': self.error_code,
        }
