"""Exception hierarchy shared by the lab and mapped to CLI exit codes."""
from __future__ import annotations

from typing import Any, Optional, Sequence


class LabError(Exception):
    exit_code = 1


class ConfigError(LabError, ValueError):
    """A run configuration field is missing or invalid."""
    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class PreconditionError(LabError, ValueError):
    exit_code = 2


class DomainError(PreconditionError):
    """Evaluation outside the kernel/field domain; carries the offending point."""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None):
        self.point = tuple(float(p) for p in point) if point is not None else None
        if self.point is not None:
            message = f"{message} at {self.point}"
        super().__init__(message)


class ResolutionError(PreconditionError):
    """Grid spacing too coarse for the requested scale."""

    def __init__(self, message: str, required_spacing: Optional[Sequence[float]] = None):
        self.required_spacing = (
            tuple(float(h) for h in required_spacing) if required_spacing is not None else None
        )
        if self.required_spacing is not None:
            message = f"{message} (required spacing <= {self.required_spacing})"
        super().__init__(message)


class NonConvergenceError(LabError):
    exit_code = 3

    def __init__(self, message: str, detail: Any = None):
        self.detail = detail
        super().__init__(message)


class InvariantViolation(LabError):
    exit_code = 4
