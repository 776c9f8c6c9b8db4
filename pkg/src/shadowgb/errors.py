class ShadowGBError(Exception):
    """Base class for every error raised by this package."""


class DatasetError(ShadowGBError):
    """Input data could not be read or is unusable."""


class DatasetParseError(DatasetError):
    def __init__(self, path, line, reason):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{self.path}:{line}: {reason}")


class EmptyDatasetError(DatasetError):
    pass


class ModelFormatError(DatasetError):
    """A persisted classifier document does not match the expected schema."""


class ConfigurationError(ShadowGBError, ValueError):
    """An experiment or call was configured with out-of-range values."""


class ContractViolation(ShadowGBError, ValueError):
    """A precondition of an operation was not met by the caller."""
