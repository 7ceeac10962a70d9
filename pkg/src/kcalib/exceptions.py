"""Exception hierarchy shared by all kcalib modules."""


class KcalibError(Exception):
    """Base class for all kcalib errors."""


class ParameterError(KcalibError, ValueError):
    """A numeric argument is outside its allowed domain."""


class FamilyError(KcalibError, TypeError):
    """Mismatched or unsupported distribution families."""


class DimensionError(KcalibError, ValueError):
    """Mismatched dimensions between predictions and targets."""


class ConfigurationError(KcalibError, ValueError):
    """Invalid kernel or test configuration."""


class DatasetFormatError(KcalibError, ValueError):
    """A dataset file violates the documented line-delimited schema."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
