"""Exception types raised across the package."""


class RLMError(Exception):
    """Base class for all package errors."""


class GeometryDomainError(RLMError, ValueError):
    """A pixel coordinate or angle lies outside the valid domain."""


class AboveHorizonError(GeometryDomainError):
    """The view ray of a pixel does not intersect the ground plane."""


class MapRangeError(GeometryDomainError):
    """A map-plane coordinate lies outside the image of the forward mapping."""


class ConfigError(RLMError, ValueError):
    """Invalid or incomplete configuration."""


class InputFormatError(RLMError, ValueError):
    """Malformed input file or out-of-order input data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
