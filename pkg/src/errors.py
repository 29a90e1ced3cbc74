"""
Error types

Every failure that can reach the command line carries a stable code and the
exit status the CLI reports for it.
"""

from typing import Any, Dict, Optional


class TreeSpecError(Exception):
    """Base class for all toolkit errors."""

    code = "error"
    exit_status = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "code": self.code,
            "exit_status": self.exit_status,
            "message": self.message,
        }
        if self.context:
            record["context"] = self.context
        return record


class ConfigParseError(TreeSpecError):
    """Unreadable or malformed run configuration."""

    code = "parse-error"
    exit_status = 1


class GeometryValidationError(TreeSpecError, ValueError):
    """A geometry violates one of the standing assumptions.

    `assumption` names the violated condition, e.g. ``edge-length-bound``
    (edge lengths bounded away from zero) or ``branching-bound`` (every
    branching number strictly above one).
    """

    code = "validation-error"
    exit_status = 2

    def __init__(self, message: str, assumption: str, context: Optional[Dict[str, Any]] = None):
        context = dict(context or {})
        context["assumption"] = assumption
        super().__init__(message, context)
        self.assumption = assumption


class ParameterError(TreeSpecError, ValueError):
    """A numeric parameter fails the precondition of an operation."""

    code = "parameter-error"
    exit_status = 2


class NonConvergenceError(TreeSpecError):
    """A numerical procedure did not reach its tolerance."""

    code = "non-convergence"
    exit_status = 3


class InternalInvariantError(TreeSpecError):
    """A condition that cannot occur for valid inputs was observed."""

    code = "internal-error"
    exit_status = 4


class UsageError(TreeSpecError):
    """Invalid command line: unknown flag, missing argument or bad flag value."""

    code = "usage-error"
    exit_status = 1


class NumericalError(TreeSpecError):
    """A computation produced non-finite values."""

    code = "numerical-error"
    exit_status = 3
