"""Exception hierarchy shared across the package.

The CLI maps ``DomainError`` (and subclasses) to exit status 1 and
``UsageError`` to exit status 2.
"""


class TaxelError(Exception):
    """Base class for every error raised by taxel."""


class DomainError(TaxelError, ValueError):
    """Input outside the mathematical or physical domain of an operation."""

    def __init__(self, message, provenance=None):
        super().__init__(message)
        self.provenance = provenance

    def __str__(self):
        msg = super().__str__()
        if self.provenance:
            return f"{msg} [{self.provenance}]"
        return msg


class InfeasibleModelError(DomainError):
    """Series-spring inversion has no positive solution (k_total >= k2)."""


class CalibrationError(DomainError):
    """Lookup-table calibration could not be built from the given presses."""


class ConfigurationError(DomainError):
    """Network or run configuration is inconsistent (shapes, keys, sizes)."""


class TrainingDiverged(DomainError):
    """Loss became non-finite; ``checkpoint`` points at the last good state."""

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class UsageError(TaxelError):
    """API misuse, e.g. replaying a consumed autodiff tape, or bad CLI input."""
