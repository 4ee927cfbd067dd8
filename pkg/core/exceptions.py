"""
Laboratory error types.

Every error carries a stable ``error_code`` so the harness can report failures
programmatically, the same way service results carry one.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class LabError(Exception):
    """Base class for all laboratory errors"""

    error_code = 'LAB_ERROR'

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'error': self.message,
            'error_code': self.error_code,
            'details': self.details,
        }


class InvalidParams(LabError):
    error_code = 'INVALID_PARAMS'


class DiscriminantNegative(LabError):
    error_code = 'DISCRIMINANT_NEGATIVE'


class DomainError(LabError):
    error_code = 'DOMAIN_ERROR'


class InvalidInterval(LabError):
    error_code = 'INVALID_INTERVAL'


class IllConditioned(LabError):
    error_code = 'ILL_CONDITIONED'


class DomainTooSmall(LabError):
    error_code = 'DOMAIN_TOO_SMALL'


class PredicateNonMonotone(LabError):
    error_code = 'PREDICATE_NON_MONOTONE'


class WindowTooShort(LabError):
    error_code = 'WINDOW_TOO_SHORT'


class SupportOutOfDomain(LabError):
    error_code = 'SUPPORT_OUT_OF_DOMAIN'


class Blowup(LabError):
    error_code = 'BLOWUP'


class InsufficientData(LabError):
    error_code = 'INSUFFICIENT_DATA'


class NoFront(LabError):
    error_code = 'NO_FRONT'


class SpecInvalid(LabError):
    error_code = 'SPEC_INVALID'


class Infeasible(LabError):
    error_code = 'INFEASIBLE'


class NoShiftFound(LabError):
    error_code = 'NO_SHIFT_FOUND'


class OrderingViolated(LabError):
    error_code = 'ORDERING_VIOLATED'


class UnknownRun(LabError):
    error_code = 'UNKNOWN_RUN'


class ConfigError(LabError):
    error_code = 'CONFIG_ERROR'
