class TNSlicerError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(TNSlicerError, ValueError):
    """Malformed input: bad documents, invalid paths or slice sets."""


class InfeasibleError(TNSlicerError):
    """The inputs are well formed but no plan satisfies the constraints."""
