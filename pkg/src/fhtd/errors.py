"""Exception types shared across the package."""


class FhtdError(Exception):
    """Base class for all package-specific errors."""


class NonStationaryCovariate(FhtdError):
    """A covariate recursion diverged (|x| exceeded the overflow guard)."""


class NonFiniteSeries(FhtdError):
    """The simulated dependent series overflowed; the spec is mis-specified."""


class UnknownTier(FhtdError):
    """Requested a built-in generator at a size tier it does not define."""


class EmptyDesign(FhtdError):
    """The lag design has no rows or no candidate columns."""


class InsufficientData(FhtdError):
    """Too few effective observations for the requested fit."""


class EmptyPath(FhtdError):
    """A selection path with no steps was passed where one is required."""


class WindowTooSmall(FhtdError):
    """A rolling-forecast window cannot accommodate the model dimensions."""


class CsvFormatError(FhtdError):
    """Base class for CSV ingestion problems."""


class MissingColumn(CsvFormatError):
    """A required column name is absent from the CSV header."""


class NonNumericCell(CsvFormatError):
    """A data cell could not be parsed as a number."""


class LengthMismatchAfterTransform(CsvFormatError):
    """Column lengths disagree after applying the transform directives."""


class ConfigError(FhtdError):
    """An experiment configuration is invalid."""
