"""
Exception types raised by the volcano-potential toolkit.
"""


class VolcanoError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(VolcanoError, ValueError):
    """Invalid physical or numerical input."""


class UsageError(VolcanoError):
    """Malformed command line or configuration file."""


class RegimeViolation(VolcanoError):
    """Drive parameters lie outside the high-frequency averaging regime."""


class BracketInvalid(VolcanoError):
    """Both ends of a bisection bracket classify identically."""

    def __init__(self, message: str, all_escape: bool):
        super().__init__(message)
        self.all_escape = all_escape


class TooFewCycles(VolcanoError):
    """Trajectory does not contain enough oscillations to estimate a period."""
