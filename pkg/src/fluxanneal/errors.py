"""Exception hierarchy shared across the package."""


class FluxAnnealError(Exception):
    """Base class for all package errors."""


class ValidationError(FluxAnnealError, ValueError):
    """Input violates a documented invariant (ranges, symmetry, ordering)."""


class DimensionError(ValidationError):
    """Array or configuration length does not match the problem size."""


class CapacityError(FluxAnnealError):
    """Requested size exceeds the enumeration or dense-matrix guard."""


class ScheduleFormatError(ValidationError):
    """Malformed schedule table; ``row`` is the 1-based line number when known."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ParameterError(ValidationError):
    """Device parameters produce an unphysical circuit (e.g. L_eff <= 0)."""


class BracketingError(FluxAnnealError):
    """Root finding could not bracket a sign change."""


class NumericalError(FluxAnnealError):
    """An iterative numerical procedure failed to converge."""


class DegenerateFitError(FluxAnnealError):
    """The series carries no information about the requested parameters."""


class SingularFrameError(FluxAnnealError):
    """Computational frame has vanishing persistent-current flux."""


class ConfigError(FluxAnnealError):
    """CLI configuration is incomplete or references missing files."""
