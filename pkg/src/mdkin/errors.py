"""Exception hierarchy shared by all modules."""


class MdkinError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MdkinError, ValueError):
    """An argument lies outside the domain of the operation."""


class ShapeError(MdkinError, ValueError):
    """Array lengths or matrix shapes are inconsistent."""


class ConfigurationError(MdkinError):
    """Rule or reference configuration cannot support the requested check."""


class CalibrationError(ConfigurationError):
    """Threshold calibration is impossible for the given data."""


class UsageError(MdkinError):
    """API or command misuse, e.g. comparing a profile against the wrong lexeme."""


class ParseError(MdkinError):
    """Malformed input data (files, records)."""
