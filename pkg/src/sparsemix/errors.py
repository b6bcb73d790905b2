"""Exception types shared across the package."""


class SparsemixError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(SparsemixError, ValueError):
    """Malformed data or parameters (wrong shapes, non-finite entries, ...)."""


class SingularCovarianceError(SparsemixError, ValueError):
    """A covariance matrix is singular or indefinite where an invertible one is required."""


class EnumerationCapError(SparsemixError, ValueError):
    """Support enumeration would exceed the configured cap.

    Raised loudly instead of silently truncating; callers should fall back to
    coordinate-wise or relaxation statistics.
    """


class DegenerateProjectionError(SparsemixError, ValueError):
    """All projected observations coincide, so a moment ratio is undefined."""


class MissingCalibrationError(SparsemixError, LookupError):
    """A required Monte Carlo critical value is not present in the table."""
