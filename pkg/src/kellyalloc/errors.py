"""Exception types shared across the package."""

from __future__ import annotations


class KellyAllocError(Exception):
    """Base class for every error this package raises deliberately."""


class ParseError(KellyAllocError):
    """Portfolio document is malformed (bad syntax, structure, or field type).

    Carries location diagnostics when they are known so CLI users can find
    the offending spot.
    """

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        parts = [message]
        if line is not None:
            parts.append(f"(line {line})")
        if field is not None:
            parts.append(f"(field: {field})")
        super().__init__(" ".join(parts))
        self.line = line
        self.field = field


class ValidationError(KellyAllocError):
    """Portfolio data is well-formed but violates a model invariant."""


class InvalidPolicy(KellyAllocError):
    """The requested constraint policy is inconsistent or out of range."""


class DomainViolation(KellyAllocError):
    """A fraction vector drives some outcome's wealth factor to zero or below,
    leaving the logarithmic growth undefined."""


class OutcomeExplosion(KellyAllocError):
    """The joint outcome enumeration would exceed the configured cap."""


class EnumerationCapExceeded(KellyAllocError):
    """The number of active/inactive constraint combinations (2^N) exceeds
    the configured enumeration cap."""


class NoViableSolution(KellyAllocError):
    """No converged candidate passed the viability filter."""


class GridTooLarge(KellyAllocError):
    """Brute-force grid search would evaluate too many points."""
