"""Exception hierarchy shared by every darksync module."""

from __future__ import annotations


class DarksyncError(Exception):
    """Base class. The CLI maps subclasses to nonzero exit codes."""

    module = "darksync"


class ValidationError(DarksyncError, ValueError):
    """Bad user input: model parameters, shapes, site indices, config fields."""

    module = "validation"

    def __init__(self, message: str, errors: list[str] | None = None):
        self.errors = list(errors) if errors else [message]
        super().__init__(message)


class InvalidStateError(DarksyncError, ValueError):
    """A vector or matrix violates the state-vector / density-matrix invariants."""

    module = "states"


class IntegrationError(DarksyncError, RuntimeError):
    """Numerical integration broke an invariant (usually dt too large)."""

    module = "integration"


class DefectiveSpectrumError(DarksyncError, RuntimeError):
    """The requested spectral reconstruction needs a non-defective eigenbasis."""

    module = "spectral"


class VerificationError(DarksyncError, RuntimeError):
    """A dark-state / pseudo-density-matrix check failed."""

    module = "spectral"


class UndefinedCorrelatorError(DarksyncError, ValueError):
    """Synchronization correlator denominator vanishes."""

    module = "analysis"


class DegenerateSignalError(DarksyncError, ValueError):
    """Time series carries no usable non-DC spectral content."""

    module = "analysis"
