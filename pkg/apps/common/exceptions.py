"""
Exception hierarchy shared by every multislice app.

Provides:
- MultisliceError: base class, mapped to exit code 1 by the runner
- One subclass per failure family (invalid input, empty set, domain,
  unsupported, resource, mass deficit)
- PreconditionViolated: an experiment refused its input, mapped to exit code 2
"""

from typing import Any, Optional


class MultisliceError(Exception):
    """Base exception for multislice services."""
    pass


class InvalidInputError(MultisliceError, ValueError):
    """Raised when arguments violate a documented precondition of a pure operation."""
    pass


class EmptySetError(MultisliceError):
    """Raised when an operation needs a nonempty point set."""
    pass


class DomainError(MultisliceError):
    """Raised when a point lies outside the domain of a chart, logarithm or inverse."""
    pass


class UnsupportedError(MultisliceError):
    """Raised for inputs outside the implemented case (e.g. non-coordinate subspaces)."""
    pass


class ResourceError(MultisliceError):
    """Raised when an enumeration or field degree exceeds its configured cap."""
    pass


class MassDeficitError(MultisliceError):
    """Raised when a truncated sampler would lose more mass than allowed."""
    def __init__(self, message: str, deficit: float = 0.0):
        super().__init__(message)
        self.deficit = deficit


class PreconditionViolated(MultisliceError):
    """Raised when an experiment's hypotheses fail on the supplied data."""
    def __init__(self, message: str, condition: str = '', details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.condition = condition
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        return {
            'error': 'precondition-violated',
            'condition': self.condition,
            'message': str(self),
            'details': self.details,
        }
