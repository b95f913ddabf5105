"""Exception hierarchy shared across the package."""

from __future__ import annotations


class PtspecError(Exception):
    """Base class for every error raised by this package."""


class UnknownPresetError(PtspecError, KeyError):
    """Requested model preset does not exist."""


class DomainError(PtspecError, ValueError):
    """Input violates a documented precondition."""


class ResourceLimitError(PtspecError, RuntimeError):
    """Requested computation exceeds a configured size cap."""


class NumericError(PtspecError, RuntimeError):
    """A numerical routine failed to converge or hit a singular pivot."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class PartialResultError(NumericError):
    """Eigensolver ran out of restarts; carries the converged subset."""

    def __init__(self, message: str, converged, requested: int):
        super().__init__(message)
        self.converged = converged
        self.requested = requested


class BracketError(PtspecError, ValueError):
    """Bisection bracket endpoints do not straddle the sought transition."""


class FitFailureError(PtspecError, RuntimeError):
    """Nonlinear fit failed from every start point."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigMismatchError(PtspecError, RuntimeError):
    """Resume requested against checkpoints written with a different config."""
